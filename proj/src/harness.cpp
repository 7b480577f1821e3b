#include "proxvi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include "proxvi/errors.hpp"

namespace proxvi {

namespace {

constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kInitStream = 0x1217;

struct Variant {
    std::string label;
    std::string algo;
    int mc_samples = 1;
    AlphaSchedule schedule;
};

std::string schedule_name(const AlphaSchedule& s) {
    switch (s.kind) {
        case ScheduleKind::linear: return "linear";
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::zero: return "zero";
    }
    return "?";
}

std::vector<Variant> expand_variants(const ExperimentConfig& cfg) {
    const AlgorithmSpec& a = cfg.algorithm;
    const bool many_s = a.mc_samples.size() > 1;
    const bool many_sched = a.schedules.size() > 1;
    std::vector<Variant> out;
    for (const std::string& algo : a.algos) {
        if (algo == "perfect_min") {
            out.push_back({algo, algo, 1, a.schedules.front()});
            continue;
        }
        for (int s : a.mc_samples) {
            std::string base = algo;
            if (many_s) base += ":S" + std::to_string(s);
            if (algo == "proximal_sm") {
                for (const AlphaSchedule& sched : a.schedules) {
                    std::string label = base;
                    if (many_sched) label += ":" + schedule_name(sched);
                    out.push_back({label, algo, s, sched});
                }
            } else {
                out.push_back({base, algo, s, a.schedules.front()});
            }
        }
    }
    return out;
}

struct BuiltProblem {
    std::unique_ptr<TargetOracle> oracle;
    std::optional<GaussianTargetParams> truth; // gaussian targets only
    BayesDataset test;                         // empty unless Bayesian with test_n > 0
};

BuiltProblem build_problem(const TargetSpec& t) {
    SeededRng data_rng(t.data_seed, kDataStream);
    BuiltProblem out;
    switch (t.kind) {
        case TargetKind::gaussian: {
            GaussianTargetParams params = make_random_gaussian(t.dim, data_rng);
            out.truth = params;
            out.oracle = std::make_unique<GaussianTarget>(std::move(params));
            break;
        }
        case TargetKind::gaussian_mixture: {
            out.oracle =
                std::make_unique<MixtureTarget>(make_random_mixture(t.dim, t.order, data_rng));
            break;
        }
        case TargetKind::bayes_logistic: {
            BayesProblem prob =
                make_bayes_logistic(t.n, t.p, data_rng, t.test_n, t.prior_variance);
            out.oracle = std::move(prob.oracle);
            out.test = std::move(prob.test);
            break;
        }
        case TargetKind::bayes_mlp: {
            BayesProblem prob = make_bayes_mlp(t.n, t.p, t.hidden_dim, t.classes, t.tau,
                                               data_rng, t.test_n, t.prior_variance);
            out.oracle = std::move(prob.oracle);
            out.test = std::move(prob.test);
            break;
        }
    }
    return out;
}

std::unique_ptr<VariationalFamily> build_family(const FamilySpec& f, int dim,
                                                std::uint64_t seed) {
    std::unique_ptr<VariationalFamily> family;
    if (f.family == "gauss_diag")
        family = std::make_unique<GaussianVariational>(dim, GaussianVariational::Cov::diagonal);
    else if (f.family == "gauss_full")
        family = std::make_unique<GaussianVariational>(dim, GaussianVariational::Cov::full);
    else if (f.family == "gauss_mixture")
        family = std::make_unique<MixtureVariational>(dim, f.k, f.gumbel_temperature);
    else if (f.family == "planar_flow")
        family = std::make_unique<PlanarFlowVariational>(dim);
    else
        throw Error("unknown family '" + f.family + "'");
    SeededRng init_rng(seed, kInitStream);
    family->init_random(init_rng);
    if (f.init == "small_eig") {
        auto* gauss = dynamic_cast<GaussianVariational*>(family.get());
        if (!gauss) throw FamilyMismatch("small_eig init needs a Gaussian family");
        gauss->set_isotropic_covariance(f.small_eig_value);
    }
    return family;
}

SeededRng run_rng(std::uint64_t seed, const std::string& label, double beta) {
    const std::uint64_t stream =
        splitmix64(fnv1a64(label) ^ std::bit_cast<std::uint64_t>(beta));
    return SeededRng(seed, stream);
}

RunOutcome run_perfect_min_cell(const GaussianTarget& target, GaussianVariational q,
                                const ExperimentConfig& cfg, const MetricContext& ctx,
                                SeededRng rng) {
    RunOutcome out;
    const long total = cfg.algorithm.outer_iterations;
    const long every = cfg.metrics.every_k_outer;
    const AlphaSchedule& sched = cfg.algorithm.schedules.front();
    SeededRng metric_rng = rng.child(kMetricStreamKey);
    out.final_metrics = record_metrics(target, q, cfg.metrics, ctx, metric_rng, out.trace, 0, 0,
                                       nullptr);
    const std::vector<double>& mean = target.params().mean;
    const DenseMatrix& cov = target.params().covariance;
    for (long t = 0; t < total; ++t) {
        q = gaussian_projection(q, mean, cov, alpha_schedule(sched, t, total));
        if ((t + 1) % every == 0 || t + 1 == total)
            out.final_metrics = record_metrics(target, q, cfg.metrics, ctx, metric_rng,
                                               out.trace, t + 1, 0, nullptr);
    }
    return out;
}

RunResult execute_cell(const ExperimentConfig& cfg, const Variant& variant, double beta,
                       std::uint64_t seed) {
    RunResult res;
    res.algo = variant.label;
    res.beta = beta;
    res.seed = seed;
    res.target = to_string(cfg.target.kind);
    res.family = cfg.family.family;
    res.run_id = run_identifier(cfg, variant.label, beta, seed);
    const auto start = std::chrono::steady_clock::now();
    try {
        BuiltProblem prob = build_problem(cfg.target);
        std::unique_ptr<VariationalFamily> family =
            build_family(cfg.family, prob.oracle->dim(), seed);
        MetricContext ctx;
        if (prob.truth) ctx.truth = &*prob.truth;
        if (prob.test.size() > 0) ctx.test_set = &prob.test;
        SeededRng rng = run_rng(seed, variant.label, beta);
        if (variant.algo == "proximal_sm") {
            ProximalConfig pc;
            pc.outer_iterations = cfg.algorithm.outer_iterations;
            pc.inner_steps = cfg.algorithm.inner_steps;
            pc.mc_samples = variant.mc_samples;
            pc.learning_rate = cfg.algorithm.eta;
            pc.optimizer = cfg.algorithm.optimizer;
            pc.schedule = variant.schedule;
            pc.reset_inner_optimizer = cfg.algorithm.reset_inner_optimizer;
            pc.batch_size = cfg.algorithm.batch_size;
            res.outcome = run_proximal(*prob.oracle, *family, pc, NoiseConfig{beta},
                                       cfg.metrics, ctx, std::move(rng));
        } else if (variant.algo == "advi") {
            AdviConfig ac;
            ac.iterations = cfg.algorithm.outer_iterations;
            ac.mc_samples = variant.mc_samples;
            ac.learning_rate =
                cfg.algorithm.advi_eta > 0.0 ? cfg.algorithm.advi_eta : cfg.algorithm.eta;
            ac.optimizer = cfg.algorithm.optimizer;
            ac.batch_size = cfg.algorithm.batch_size;
            res.outcome = run_advi(*prob.oracle, *family, ac, NoiseConfig{beta}, cfg.metrics,
                                   ctx, std::move(rng));
        } else if (variant.algo == "perfect_min") {
            auto& target = dynamic_cast<GaussianTarget&>(*prob.oracle);
            auto& q = dynamic_cast<GaussianVariational&>(*family);
            res.outcome = run_perfect_min_cell(target, q, cfg, ctx, std::move(rng));
        } else {
            throw Error("unknown algorithm '" + variant.algo + "'");
        }
    } catch (const std::exception& e) {
        res.outcome.status = RunStatus::failed;
        res.error = e.what();
    }
    res.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MetricTrace& trace = res.outcome.trace;
    trace.run_id = res.run_id;
    trace.algo = res.algo;
    trace.target = res.target;
    trace.family = res.family;
    trace.seed = res.seed;
    for (TraceRow& row : trace.rows) {
        row.run_id = res.run_id;
        row.algo = res.algo;
        row.target = res.target;
        row.family = res.family;
        row.seed = res.seed;
    }
    return res;
}

double mean_of(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace

int default_parallelism() {
    if (const char* env = std::getenv("PROXI_SCORE_VI_THREADS")) {
        int value = 0;
        const auto res = std::from_chars(env, env + std::strlen(env), value);
        if (res.ec == std::errc() && *res.ptr == '\0' && value >= 1) return value;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<std::string> variant_labels(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    for (const Variant& v : expand_variants(cfg)) out.push_back(v.label);
    return out;
}

std::string run_identifier(const ExperimentConfig& cfg, const std::string& label, double beta,
                           std::uint64_t seed) {
    const std::string key = canonical_form(cfg) + "\n" + label + "\n" + format_double(beta) +
                            "\n" + std::to_string(seed);
    const std::uint64_t hash = fnv1a64(key);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

std::vector<RunResult> run_matrix(const ExperimentConfig& cfg, int parallelism) {
    struct Cell {
        Variant variant;
        double beta;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const Variant& v : expand_variants(cfg))
        for (double beta : cfg.betas)
            for (std::uint64_t seed : cfg.seeds) cells.push_back({v, beta, seed});

    std::vector<RunResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            results[i] = execute_cell(cfg, cells[i].variant, cells[i].beta, cells[i].seed);
        }
    };
    const int threads =
        std::clamp<int>(parallelism, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return results;
}

void write_csv(std::vector<TraceRow> rows, const std::filesystem::path& path) {
    std::sort(rows.begin(), rows.end(), [](const TraceRow& a, const TraceRow& b) {
        if (a.run_id != b.run_id) return a.run_id < b.run_id;
        if (a.outer_t != b.outer_t) return a.outer_t < b.outer_t;
        return a.metric < b.metric;
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "run_id,algo,target,family,seed,outer_t,score_calls,metric,value\n";
    for (const TraceRow& r : rows) {
        out << r.run_id << ',' << r.algo << ',' << r.target << ',' << r.family << ',' << r.seed
            << ',' << r.outer_t << ',' << r.score_calls << ',' << r.metric << ','
            << format_double(r.value) << '\n';
    }
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

void write_csv(const std::vector<RunResult>& results, const std::filesystem::path& path) {
    std::vector<TraceRow> rows;
    for (const RunResult& r : results)
        rows.insert(rows.end(), r.outcome.trace.rows.begin(), r.outcome.trace.rows.end());
    write_csv(std::move(rows), path);
}

std::vector<TraceRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error("empty csv '" + path.string() + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "run_id,algo,target,family,seed,outer_t,score_calls,metric,value")
        throw Error("unexpected csv header in '" + path.string() + "'");
    std::vector<TraceRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 9)
            throw Error("malformed csv row at " + path.string() + ":" +
                        std::to_string(line_no));
        TraceRow r;
        r.run_id = fields[0];
        r.algo = fields[1];
        r.target = fields[2];
        r.family = fields[3];
        const auto parse = [&](const std::string& s, auto& out_value) {
            const auto res = std::from_chars(s.data(), s.data() + s.size(), out_value);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw Error("bad number '" + s + "' at " + path.string() + ":" +
                            std::to_string(line_no));
        };
        parse(fields[4], r.seed);
        parse(fields[5], r.outer_t);
        parse(fields[6], r.score_calls);
        parse(fields[8], r.value);
        r.metric = fields[7];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::filesystem::path> write_matrix_outputs(const std::vector<RunResult>& results,
                                                        const ExperimentConfig& cfg,
                                                        const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "'");
    std::vector<std::filesystem::path> written;
    for (const RunResult& r : results) {
        const std::filesystem::path path = dir / ("run_" + r.run_id + ".csv");
        write_csv(r.outcome.trace.rows, path);
        written.push_back(path);
    }

    // Aggregate: one row per (variant, beta), columns per configured metric.
    std::vector<std::string> metric_names;
    for (const std::string& m : cfg.metrics.which)
        if (std::find(metric_names.begin(), metric_names.end(), m) == metric_names.end())
            metric_names.push_back(m);

    struct Group {
        std::string algo;
        double beta;
        std::vector<const RunResult*> completed;
    };
    std::vector<Group> groups;
    for (const RunResult& r : results) {
        Group* group = nullptr;
        for (Group& g : groups)
            if (g.algo == r.algo && g.beta == r.beta) group = &g;
        if (!group) {
            groups.push_back({r.algo, r.beta, {}});
            group = &groups.back();
        }
        if (r.outcome.status == RunStatus::completed) group->completed.push_back(&r);
    }

    const std::filesystem::path agg_path = dir / "aggregate.csv";
    std::ofstream out(agg_path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + agg_path.string() + "' for writing");
    out << "algo,beta,n_seeds";
    for (const std::string& m : metric_names) out << ',' << m << "_mean," << m << "_std";
    out << '\n';
    for (const Group& g : groups) {
        out << g.algo << ',' << format_double(g.beta) << ',' << g.completed.size();
        for (const std::string& m : metric_names) {
            std::vector<double> values;
            for (const RunResult* r : g.completed) {
                const auto it = r->outcome.final_metrics.find(m);
                if (it != r->outcome.final_metrics.end()) values.push_back(it->second);
            }
            if (values.empty()) {
                out << ",nan,nan";
            } else {
                const double mean = mean_of(values);
                out << ',' << format_double(mean) << ',' << format_double(sample_std(values, mean));
            }
        }
        out << '\n';
    }
    if (!out.flush()) throw IoError("write failed for '" + agg_path.string() + "'");
    written.push_back(agg_path);
    return written;
}

} // namespace proxvi
