#include "proxvi/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "proxvi/errors.hpp"

namespace proxvi {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::string item =
            trim(std::string_view(value).substr(start, comma == std::string::npos
                                                           ? std::string::npos
                                                           : comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

int levenshtein(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

struct Entry {
    int line;
    std::string section;
    std::string key;
    std::string value;
};

class Parser {
  public:
    explicit Parser(const std::string& text) { tokenize(text); }

    ParseResult result() {
        ExperimentConfig cfg;
        apply(cfg);
        validate(cfg);
        ParseResult res;
        res.errors = std::move(errors_);
        if (res.errors.empty()) res.config = std::move(cfg);
        return res;
    }

  private:
    std::vector<Entry> entries_;
    std::vector<ConfigError> errors_;

    void parse_error(int line, const std::string& key, const std::string& msg) {
        errors_.push_back({ConfigError::Kind::parse, line, key, msg});
    }
    void validation_error(const std::string& key, const std::string& msg, int line = 0) {
        errors_.push_back({ConfigError::Kind::validation, line, key, msg});
    }

    void tokenize(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        std::string section;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            const std::size_t hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            const std::string line = trim(raw);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    parse_error(line_no, "", "unterminated section header");
                    continue;
                }
                section = trim(line.substr(1, line.size() - 2));
                static const std::set<std::string> kSections = {"target", "family", "algorithm",
                                                                "metrics", "run"};
                if (!kSections.count(section)) {
                    parse_error(line_no, section, "unknown section [" + section + "]");
                    section.clear();
                }
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                parse_error(line_no, "", "expected key = value: '" + line + "'");
                continue;
            }
            if (section.empty()) {
                parse_error(line_no, "", "key outside any [section]");
                continue;
            }
            entries_.push_back(
                {line_no, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
        }
    }

    bool to_long(const Entry& e, long& out) {
        const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), out);
        if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size()) {
            parse_error(e.line, e.key, "expected integer, got '" + e.value + "'");
            return false;
        }
        return true;
    }
    bool to_int(const Entry& e, int& out) {
        long v;
        if (!to_long(e, v)) return false;
        out = static_cast<int>(v);
        return true;
    }
    bool to_u64(const Entry& e, std::uint64_t& out) {
        const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), out);
        if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size()) {
            parse_error(e.line, e.key, "expected unsigned integer, got '" + e.value + "'");
            return false;
        }
        return true;
    }
    bool to_double(const Entry& e, const std::string& text, double& out) {
        const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
            parse_error(e.line, e.key, "expected number, got '" + text + "'");
            return false;
        }
        return true;
    }
    bool to_double(const Entry& e, double& out) { return to_double(e, e.value, out); }
    bool to_bool(const Entry& e, bool& out) {
        if (e.value == "true" || e.value == "1") {
            out = true;
            return true;
        }
        if (e.value == "false" || e.value == "0") {
            out = false;
            return true;
        }
        parse_error(e.line, e.key, "expected true/false, got '" + e.value + "'");
        return false;
    }

    void unknown_key(const Entry& e, const std::vector<std::string>& known) {
        std::string best;
        int best_dist = 3;
        for (const auto& k : known) {
            const int dist = levenshtein(e.key, k);
            if (dist < best_dist || (dist == best_dist && !best.empty() && k < best)) {
                best = k;
                best_dist = dist;
            }
        }
        std::string msg = "unknown key '" + e.key + "' in [" + e.section + "]";
        if (!best.empty()) msg += "; did you mean '" + best + "'?";
        validation_error(e.section + "." + e.key, msg, e.line);
    }

    void apply(ExperimentConfig& cfg) {
        int family_dim = -1;
        int family_dim_line = 0;
        for (const Entry& e : entries_) {
            if (e.section == "target")
                apply_target(cfg, e);
            else if (e.section == "family")
                apply_family(cfg, e, family_dim, family_dim_line);
            else if (e.section == "algorithm")
                apply_algorithm(cfg, e);
            else if (e.section == "metrics")
                apply_metrics(cfg, e);
            else
                apply_run(cfg, e);
        }
        explicit_family_dim_ = family_dim;
        explicit_family_dim_line_ = family_dim_line;
    }

    void apply_target(ExperimentConfig& cfg, const Entry& e) {
        static const std::vector<std::string> known = {
            "kind", "dim",     "order", "n",   "p",        "hidden_dim",
            "classes", "test_n", "prior_variance", "tau", "data_seed", "beta"};
        TargetSpec& t = cfg.target;
        if (e.key == "kind") {
            if (e.value == "gaussian")
                t.kind = TargetKind::gaussian;
            else if (e.value == "gaussian_mixture")
                t.kind = TargetKind::gaussian_mixture;
            else if (e.value == "bayes_logistic")
                t.kind = TargetKind::bayes_logistic;
            else if (e.value == "bayes_mlp")
                t.kind = TargetKind::bayes_mlp;
            else
                parse_error(e.line, e.key, "unknown target kind '" + e.value + "'");
        } else if (e.key == "dim")
            to_int(e, t.dim);
        else if (e.key == "order")
            to_int(e, t.order);
        else if (e.key == "n")
            to_int(e, t.n);
        else if (e.key == "p")
            to_int(e, t.p);
        else if (e.key == "hidden_dim")
            to_int(e, t.hidden_dim);
        else if (e.key == "classes")
            to_int(e, t.classes);
        else if (e.key == "test_n")
            to_int(e, t.test_n);
        else if (e.key == "prior_variance")
            to_double(e, t.prior_variance);
        else if (e.key == "tau")
            to_double(e, t.tau);
        else if (e.key == "data_seed")
            to_u64(e, t.data_seed);
        else if (e.key == "beta")
            apply_beta_list(cfg, e);
        else
            unknown_key(e, known);
    }

    void apply_family(ExperimentConfig& cfg, const Entry& e, int& family_dim,
                      int& family_dim_line) {
        static const std::vector<std::string> known = {
            "family", "k", "gumbel_temperature", "init", "small_eig_value", "dim"};
        FamilySpec& f = cfg.family;
        if (e.key == "family") {
            static const std::set<std::string> kFamilies = {"gauss_diag", "gauss_full",
                                                            "gauss_mixture", "planar_flow"};
            if (!kFamilies.count(e.value))
                parse_error(e.line, e.key, "unknown family '" + e.value + "'");
            else
                f.family = e.value;
        } else if (e.key == "k")
            to_int(e, f.k);
        else if (e.key == "gumbel_temperature")
            to_double(e, f.gumbel_temperature);
        else if (e.key == "init") {
            if (e.value != "random" && e.value != "small_eig")
                parse_error(e.line, e.key, "init must be 'random' or 'small_eig'");
            else
                f.init = e.value;
        } else if (e.key == "small_eig_value")
            to_double(e, f.small_eig_value);
        else if (e.key == "dim") {
            to_int(e, family_dim);
            family_dim_line = e.line;
        } else
            unknown_key(e, known);
    }

    void apply_algorithm(ExperimentConfig& cfg, const Entry& e) {
        static const std::vector<std::string> known = {
            "algo",     "T",     "N",       "S",          "eta",
            "learning_rate", "advi_eta", "optimizer", "beta1", "beta2", "epsilon",
            "momentum", "schedule", "schedule_constant", "reset_inner_optimizer",
            "batch_size"};
        AlgorithmSpec& a = cfg.algorithm;
        if (e.key == "algo") {
            a.algos.clear();
            for (const std::string& name : split_list(e.value)) {
                if (name != "proximal_sm" && name != "advi" && name != "perfect_min")
                    parse_error(e.line, e.key, "unknown algorithm '" + name + "'");
                else
                    a.algos.push_back(name);
            }
        } else if (e.key == "T")
            to_long(e, a.outer_iterations);
        else if (e.key == "N")
            to_long(e, a.inner_steps);
        else if (e.key == "S") {
            a.mc_samples.clear();
            for (const std::string& item : split_list(e.value)) {
                Entry sub = e;
                sub.value = item;
                int v = 0;
                if (to_int(sub, v)) a.mc_samples.push_back(v);
            }
        } else if (e.key == "eta" || e.key == "learning_rate")
            to_double(e, a.eta);
        else if (e.key == "advi_eta")
            to_double(e, a.advi_eta);
        else if (e.key == "optimizer") {
            if (e.value == "adam")
                a.optimizer.kind = OptimizerKind::adam;
            else if (e.value == "sgd")
                a.optimizer.kind = OptimizerKind::sgd;
            else
                parse_error(e.line, e.key, "optimizer must be 'adam' or 'sgd'");
        } else if (e.key == "beta1")
            to_double(e, a.optimizer.beta1);
        else if (e.key == "beta2")
            to_double(e, a.optimizer.beta2);
        else if (e.key == "epsilon")
            to_double(e, a.optimizer.epsilon);
        else if (e.key == "momentum")
            to_double(e, a.optimizer.momentum);
        else if (e.key == "schedule") {
            a.schedules.clear();
            for (const std::string& item : split_list(e.value)) {
                AlphaSchedule s;
                if (item == "linear")
                    s.kind = ScheduleKind::linear;
                else if (item == "constant")
                    s.kind = ScheduleKind::constant;
                else if (item == "zero")
                    s.kind = ScheduleKind::zero;
                else {
                    parse_error(e.line, e.key, "unknown schedule '" + item + "'");
                    continue;
                }
                a.schedules.push_back(s);
            }
        } else if (e.key == "schedule_constant") {
            double c = 0.5;
            if (to_double(e, c)) schedule_constant_ = c;
        } else if (e.key == "reset_inner_optimizer")
            to_bool(e, a.reset_inner_optimizer);
        else if (e.key == "batch_size")
            to_int(e, a.batch_size);
        else
            unknown_key(e, known);
    }

    void apply_metrics(ExperimentConfig& cfg, const Entry& e) {
        static const std::vector<std::string> known = {
            "which", "every_k_outer", "fkl_samples", "nelbo_samples", "ece_bins",
            "posterior_predictive_samples"};
        MetricSchedule& m = cfg.metrics;
        if (e.key == "which") {
            m.which.clear();
            static const std::set<std::string> kMetrics = {"fkl",  "nelbo", "param_err",
                                                           "ece", "nll",   "loss"};
            for (const std::string& item : split_list(e.value)) {
                if (!kMetrics.count(item))
                    parse_error(e.line, e.key, "unknown metric '" + item + "'");
                else
                    m.which.push_back(item);
            }
        } else if (e.key == "every_k_outer") {
            long v;
            if (to_long(e, v)) m.every_k_outer = v;
        } else if (e.key == "fkl_samples")
            to_int(e, m.fkl_samples);
        else if (e.key == "nelbo_samples")
            to_int(e, m.nelbo_samples);
        else if (e.key == "ece_bins")
            to_int(e, m.ece_bins);
        else if (e.key == "posterior_predictive_samples")
            to_int(e, m.posterior_predictive_samples);
        else
            unknown_key(e, known);
    }

    void apply_run(ExperimentConfig& cfg, const Entry& e) {
        static const std::vector<std::string> known = {"name", "seeds", "beta", "output_dir"};
        if (e.key == "name")
            cfg.name = e.value;
        else if (e.key == "seeds") {
            cfg.seeds.clear();
            for (const std::string& item : split_list(e.value)) {
                Entry sub = e;
                sub.value = item;
                std::uint64_t v = 0;
                if (to_u64(sub, v)) cfg.seeds.push_back(v);
            }
        } else if (e.key == "beta")
            apply_beta_list(cfg, e);
        else if (e.key == "output_dir")
            cfg.output_dir = e.value;
        else
            unknown_key(e, known);
    }

    void apply_beta_list(ExperimentConfig& cfg, const Entry& e) {
        cfg.betas.clear();
        for (const std::string& item : split_list(e.value)) {
            double v = 0.0;
            if (to_double(e, item, v)) cfg.betas.push_back(v);
        }
    }

    void validate(ExperimentConfig& cfg) {
        const TargetSpec& t = cfg.target;
        const bool synthetic =
            t.kind == TargetKind::gaussian || t.kind == TargetKind::gaussian_mixture;
        const bool bayesian = !synthetic;

        if (synthetic && t.dim < 1)
            validation_error("target.dim", "dim must be >= 1 for synthetic targets");
        if (t.kind == TargetKind::gaussian_mixture && t.order < 1)
            validation_error("target.order", "order must be >= 1");
        if (t.kind == TargetKind::bayes_logistic && (t.n < 2 || t.p < 1))
            validation_error("target.n", "bayes_logistic needs n >= 2 and p >= 1");
        if (t.kind == TargetKind::bayes_mlp &&
            (t.n < 1 || t.p < 1 || t.hidden_dim < 1 || t.classes < 1))
            validation_error("target.n", "bayes_mlp needs n, p, hidden_dim, classes >= 1");
        if (t.prior_variance <= 0.0)
            validation_error("target.prior_variance", "prior_variance must be > 0");
        if (t.tau <= 0.0) validation_error("target.tau", "tau must be > 0");
        if (t.test_n < 0) validation_error("target.test_n", "test_n must be >= 0");

        const int dim = target_dim(t);
        if (explicit_family_dim_ >= 0 && explicit_family_dim_ != dim)
            validation_error("family.dim",
                             "family dim " + std::to_string(explicit_family_dim_) +
                                 " conflicts with target dim " + std::to_string(dim),
                             explicit_family_dim_line_);

        const FamilySpec& f = cfg.family;
        if (f.k < 1) validation_error("family.k", "k must be >= 1");
        if (f.gumbel_temperature <= 0.0)
            validation_error("family.gumbel_temperature", "gumbel_temperature must be > 0");
        if (f.small_eig_value <= 0.0)
            validation_error("family.small_eig_value", "small_eig_value must be > 0");
        if (f.init == "small_eig" && f.family == "planar_flow")
            validation_error("family.init", "small_eig init applies to Gaussian families only");

        AlgorithmSpec& a = cfg.algorithm;
        if (a.algos.empty()) validation_error("algorithm.algo", "need at least one algorithm");
        if (a.outer_iterations < 1) validation_error("algorithm.T", "T must be >= 1");
        if (a.inner_steps < 1) validation_error("algorithm.N", "N must be >= 1");
        if (a.mc_samples.empty())
            validation_error("algorithm.S", "need at least one S value");
        for (int s : a.mc_samples)
            if (s < 1) validation_error("algorithm.S", "S values must be >= 1");
        if (a.eta <= 0.0) validation_error("algorithm.eta", "eta must be > 0");
        if (a.advi_eta < 0.0) validation_error("algorithm.advi_eta", "advi_eta must be >= 0");
        if (schedule_constant_) {
            if (*schedule_constant_ < 0.0 || *schedule_constant_ > 1.0)
                validation_error("algorithm.schedule_constant",
                                 "schedule_constant must lie in [0, 1]");
            for (AlphaSchedule& s : a.schedules)
                if (s.kind == ScheduleKind::constant) s.constant = *schedule_constant_;
        }
        if (a.schedules.empty())
            validation_error("algorithm.schedule", "need at least one schedule");
        if (a.batch_size < 0)
            validation_error("algorithm.batch_size", "batch_size must be >= 0");
        if (a.batch_size > 0 && !bayesian)
            validation_error("algorithm.batch_size",
                             "batch_size applies to Bayesian targets only");
        if (a.batch_size > 0 && bayesian && a.batch_size > t.n)
            validation_error("algorithm.batch_size", "batch_size exceeds dataset size");
        for (const std::string& algo : a.algos) {
            if (algo == "perfect_min" &&
                (t.kind != TargetKind::gaussian || cfg.family.family != "gauss_full"))
                validation_error("algorithm.algo",
                                 "perfect_min requires a gaussian target and gauss_full family");
        }

        const MetricSchedule& m = cfg.metrics;
        if (m.which.empty()) validation_error("metrics.which", "need at least one metric");
        if (m.every_k_outer < 1)
            validation_error("metrics.every_k_outer", "every_k_outer must be >= 1");
        if (m.fkl_samples < 1 || m.nelbo_samples < 1 || m.ece_bins < 1 ||
            m.posterior_predictive_samples < 1)
            validation_error("metrics", "all metric sample counts must be >= 1");
        for (const std::string& name : m.which) {
            if (name == "fkl" && !synthetic)
                validation_error("metrics.which", "fkl needs a samplable (synthetic) target");
            if (name == "param_err" &&
                (t.kind != TargetKind::gaussian ||
                 (f.family != "gauss_diag" && f.family != "gauss_full")))
                validation_error("metrics.which",
                                 "param_err needs a gaussian target and Gaussian family");
            if ((name == "ece" || name == "nll") && (!bayesian || t.test_n < 1))
                validation_error("metrics.which",
                                 name + " needs a Bayesian target with test_n >= 1");
        }

        for (double b : cfg.betas)
            if (b < 0.0) validation_error("run.beta", "beta values must be >= 0");
        if (cfg.betas.empty()) validation_error("run.beta", "need at least one beta");
        if (cfg.seeds.empty()) validation_error("run.seeds", "need at least one seed");
        if (cfg.name.empty()) validation_error("run.name", "name must not be empty");
    }

  public:
    static int target_dim(const TargetSpec& t) {
        switch (t.kind) {
            case TargetKind::gaussian:
            case TargetKind::gaussian_mixture: return t.dim;
            case TargetKind::bayes_logistic: return t.p;
            case TargetKind::bayes_mlp:
                return (t.p + 1) * t.hidden_dim + (t.hidden_dim + 1) * t.classes;
        }
        return 0;
    }

  private:
    std::optional<double> schedule_constant_;
    int explicit_family_dim_ = -1;
    int explicit_family_dim_line_ = 0;
};

} // namespace

ParseResult parse_config(const std::string& text) { return Parser(text).result(); }

std::string canonical_form(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "name=" << cfg.name << '\n';
    const TargetSpec& t = cfg.target;
    out << "target.kind=" << to_string(t.kind) << '\n';
    out << "target.dim=" << t.dim << '\n';
    out << "target.order=" << t.order << '\n';
    out << "target.n=" << t.n << '\n';
    out << "target.p=" << t.p << '\n';
    out << "target.hidden_dim=" << t.hidden_dim << '\n';
    out << "target.classes=" << t.classes << '\n';
    out << "target.test_n=" << t.test_n << '\n';
    out << "target.prior_variance=" << format_double(t.prior_variance) << '\n';
    out << "target.tau=" << format_double(t.tau) << '\n';
    out << "target.data_seed=" << t.data_seed << '\n';
    const FamilySpec& f = cfg.family;
    out << "family.family=" << f.family << '\n';
    out << "family.k=" << f.k << '\n';
    out << "family.gumbel_temperature=" << format_double(f.gumbel_temperature) << '\n';
    out << "family.init=" << f.init << '\n';
    out << "family.small_eig_value=" << format_double(f.small_eig_value) << '\n';
    const AlgorithmSpec& a = cfg.algorithm;
    out << "algorithm.algo=";
    for (std::size_t i = 0; i < a.algos.size(); ++i)
        out << (i ? "," : "") << a.algos[i];
    out << '\n';
    out << "algorithm.T=" << a.outer_iterations << '\n';
    out << "algorithm.N=" << a.inner_steps << '\n';
    out << "algorithm.S=";
    for (std::size_t i = 0; i < a.mc_samples.size(); ++i)
        out << (i ? "," : "") << a.mc_samples[i];
    out << '\n';
    out << "algorithm.eta=" << format_double(a.eta) << '\n';
    out << "algorithm.advi_eta=" << format_double(a.advi_eta) << '\n';
    out << "algorithm.optimizer="
        << (a.optimizer.kind == OptimizerKind::adam ? "adam" : "sgd") << '\n';
    out << "algorithm.beta1=" << format_double(a.optimizer.beta1) << '\n';
    out << "algorithm.beta2=" << format_double(a.optimizer.beta2) << '\n';
    out << "algorithm.epsilon=" << format_double(a.optimizer.epsilon) << '\n';
    out << "algorithm.momentum=" << format_double(a.optimizer.momentum) << '\n';
    out << "algorithm.schedule=";
    for (std::size_t i = 0; i < a.schedules.size(); ++i) {
        out << (i ? "," : "");
        switch (a.schedules[i].kind) {
            case ScheduleKind::linear: out << "linear"; break;
            case ScheduleKind::zero: out << "zero"; break;
            case ScheduleKind::constant:
                out << "constant(" << format_double(a.schedules[i].constant) << ")";
                break;
        }
    }
    out << '\n';
    out << "algorithm.reset_inner_optimizer=" << (a.reset_inner_optimizer ? "true" : "false")
        << '\n';
    out << "algorithm.batch_size=" << a.batch_size << '\n';
    const MetricSchedule& m = cfg.metrics;
    out << "metrics.which=";
    for (std::size_t i = 0; i < m.which.size(); ++i) out << (i ? "," : "") << m.which[i];
    out << '\n';
    out << "metrics.every_k_outer=" << m.every_k_outer << '\n';
    out << "metrics.fkl_samples=" << m.fkl_samples << '\n';
    out << "metrics.nelbo_samples=" << m.nelbo_samples << '\n';
    out << "metrics.ece_bins=" << m.ece_bins << '\n';
    out << "metrics.posterior_predictive_samples=" << m.posterior_predictive_samples << '\n';
    out << "run.beta=";
    for (std::size_t i = 0; i < cfg.betas.size(); ++i)
        out << (i ? "," : "") << format_double(cfg.betas[i]);
    out << '\n';
    out << "run.seeds=";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
    out << '\n';
    return out.str();
}

namespace {

struct PresetDef {
    const char* name;
    const char* description;
    const char* text;
};

const PresetDef kPresets[] = {
    {"gauss_d3", "Random 3-d Gaussian target, full-covariance Gaussian q, ours vs ADVI.",
     R"(
[target]
kind = gaussian
dim = 3
data_seed = 2024

[family]
family = gauss_full
init = random

[algorithm]
algo = proximal_sm, advi
T = 500
N = 20
S = 1
eta = 0.1
advi_eta = 0.05

[metrics]
which = fkl, param_err, nelbo
every_k_outer = 10

[run]
name = gauss_d3
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/gauss_d3
)"},
    {"gauss_small_eig",
     "Gaussian target with the variational covariance initialized at tiny eigenvalues.",
     R"(
[target]
kind = gaussian
dim = 3
data_seed = 2024

[family]
family = gauss_full
init = small_eig
small_eig_value = 1e-4

[algorithm]
algo = proximal_sm, advi
T = 62
N = 600
S = 8
eta = 0.02
advi_eta = 0.05

[metrics]
which = fkl, param_err
every_k_outer = 10

[run]
name = gauss_small_eig
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/gauss_small_eig
)"},
    {"mog2_match", "Order-2 Gaussian-mixture target fitted by an order-2 mixture q.",
     R"(
[target]
kind = gaussian_mixture
dim = 3
order = 2
data_seed = 2024

[family]
family = gauss_mixture
k = 2

[algorithm]
algo = proximal_sm
T = 1000
N = 20
S = 1
eta = 0.05

[metrics]
which = fkl
every_k_outer = 10

[run]
name = mog2_match
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/mog2_match
)"},
    {"mog3_mismatch", "Order-2 mixture target fitted by an order-3 mixture q (model mismatch).",
     R"(
[target]
kind = gaussian_mixture
dim = 3
order = 2
data_seed = 2024

[family]
family = gauss_mixture
k = 3

[algorithm]
algo = proximal_sm
T = 1000
N = 20
S = 1
eta = 0.05

[metrics]
which = fkl
every_k_outer = 10

[run]
name = mog3_mismatch
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/mog3_mismatch
)"},
    {"mog5", "Order-5 mixture target fitted by an order-5 mixture q.",
     R"(
[target]
kind = gaussian_mixture
dim = 3
order = 5
data_seed = 2024

[family]
family = gauss_mixture
k = 5

[algorithm]
algo = proximal_sm
T = 1500
N = 20
S = 1
eta = 0.05

[metrics]
which = fkl
every_k_outer = 10

[run]
name = mog5
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/mog5
)"},
    {"mog_d30", "Order-2 mixture target in 30 dimensions.",
     R"(
[target]
kind = gaussian_mixture
dim = 30
order = 2
data_seed = 2024

[family]
family = gauss_mixture
k = 2

[algorithm]
algo = proximal_sm
T = 1500
N = 20
S = 1
eta = 0.05

[metrics]
which = fkl
every_k_outer = 20

[run]
name = mog_d30
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/mog_d30
)"},
    {"mismatch_gauss_q",
     "Order-2 mixture target approximated by a single Gaussian q, ours vs ADVI.",
     R"(
[target]
kind = gaussian_mixture
dim = 3
order = 2
data_seed = 2024

[family]
family = gauss_full

[algorithm]
algo = proximal_sm, advi
T = 1000
N = 20
S = 1
eta = 0.05
advi_eta = 0.05

[metrics]
which = fkl, nelbo
every_k_outer = 10

[run]
name = mismatch_gauss_q
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/mismatch_gauss_q
)"},
    {"noise_sweep", "Score-noise robustness sweep over beta, ours vs ADVI.",
     R"(
[target]
kind = gaussian
dim = 3
data_seed = 2024

[family]
family = gauss_full

[algorithm]
algo = proximal_sm, advi
T = 25000
N = 10
S = 8
eta = 0.001
advi_eta = 0.05

[metrics]
which = nelbo, fkl
every_k_outer = 1000

[run]
name = noise_sweep
seeds = 1, 2, 3, 4, 5
beta = 0, 0.5, 1, 2, 4
output_dir = out/noise_sweep
)"},
    {"ablation_alpha", "Proximal-anchor ablation: linear alpha schedule vs alpha = 0.",
     R"(
[target]
kind = gaussian_mixture
dim = 3
order = 5
data_seed = 2024

[family]
family = gauss_mixture
k = 5

[algorithm]
algo = proximal_sm
T = 6000
N = 100
S = 8
eta = 0.02
schedule = linear, zero

[metrics]
which = fkl
every_k_outer = 200
fkl_samples = 2000

[run]
name = ablation_alpha
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/ablation_alpha
)"},
    {"ablation_S", "Monte Carlo sample-count ablation S in {1, 5, 10, 20}.",
     R"(
[target]
kind = gaussian_mixture
dim = 3
order = 5
data_seed = 2024

[family]
family = gauss_mixture
k = 5

[algorithm]
algo = proximal_sm
T = 1500
N = 20
S = 1, 5, 10, 20
eta = 0.05

[metrics]
which = fkl
every_k_outer = 1

[run]
name = ablation_S
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/ablation_S
)"},
    {"blr_minibatch", "Bayesian logistic regression with mini-batch scores.",
     R"(
[target]
kind = bayes_logistic
n = 200
p = 5
test_n = 200
prior_variance = 1
data_seed = 2024

[family]
family = gauss_diag
init = small_eig
small_eig_value = 4

[algorithm]
algo = proximal_sm, advi
T = 1000
N = 20
S = 1
eta = 0.02
advi_eta = 0.02
batch_size = 20

[metrics]
which = nelbo, nll, ece
every_k_outer = 20

[run]
name = blr_minibatch
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/blr_minibatch
)"},
    {"mlp_lowdata", "Small tanh MLP posterior on blob data in the low-data regime.",
     R"(
[target]
kind = bayes_mlp
n = 60
p = 2
hidden_dim = 16
classes = 3
test_n = 300
tau = 1
prior_variance = 1
data_seed = 2024

[family]
family = gauss_diag

[algorithm]
algo = proximal_sm, advi
T = 1500
N = 20
S = 1
eta = 0.02
advi_eta = 0.02

[metrics]
which = nelbo, nll, ece
every_k_outer = 25

[run]
name = mlp_lowdata
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/mlp_lowdata
)"},
    {"flow_d1", "One-dimensional Gaussian target fitted by a planar flow, ours vs ADVI.",
     R"(
[target]
kind = gaussian
dim = 1
data_seed = 2024

[family]
family = planar_flow

[algorithm]
algo = proximal_sm, advi
T = 500
N = 20
S = 4
eta = 0.05
advi_eta = 0.05

[metrics]
which = fkl, nelbo
every_k_outer = 10

[run]
name = flow_d1
seeds = 1, 2, 3, 4, 5
beta = 0
output_dir = out/flow_d1
)"},
};

const PresetDef* find_preset(const std::string& name) {
    for (const PresetDef& p : kPresets)
        if (name == p.name) return &p;
    return nullptr;
}

} // namespace

ExperimentConfig preset(const std::string& name) {
    const PresetDef* def = find_preset(name);
    if (!def) throw UnknownPreset("unknown preset '" + name + "'");
    ParseResult res = parse_config(def->text);
    if (!res.ok()) {
        std::string msg = "preset '" + name + "' failed to parse:";
        for (const auto& err : res.errors) msg += " " + err.message + ";";
        throw Error(msg);
    }
    return *res.config;
}

std::vector<std::pair<std::string, std::string>> preset_catalog() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const PresetDef& p : kPresets) out.emplace_back(p.name, p.description);
    return out;
}

std::string preset_text(const std::string& name) {
    const PresetDef* def = find_preset(name);
    if (!def) throw UnknownPreset("unknown preset '" + name + "'");
    return def->text;
}

} // namespace proxvi
