#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "proxvi/errors.hpp"
#include "proxvi/harness.hpp"
#include "proxvi/svg_plot.hpp"

namespace {

namespace fs = std::filesystem;
using namespace proxvi;

// 0: everything completed; 2: some runs aborted or failed; 1: config/IO error.
constexpr int kOk = 0;
constexpr int kConfigFailure = 1;
constexpr int kRunsAborted = 2;

void print_errors(const std::vector<ConfigError>& errors) {
    for (const ConfigError& e : errors) {
        std::cerr << (e.kind == ConfigError::Kind::parse ? "parse error" : "validation error");
        if (e.line > 0) std::cerr << " (line " << e.line << ")";
        if (!e.key.empty()) std::cerr << " [" << e.key << "]";
        std::cerr << ": " << e.message << "\n";
    }
}

int load_config(const std::string& config_path, const std::string& preset_name,
                ExperimentConfig& out) {
    std::string text;
    if (!preset_name.empty()) {
        try {
            text = preset_text(preset_name);
        } catch (const UnknownPreset& e) {
            std::cerr << e.what() << "\n";
            std::cerr << "available presets:\n";
            for (const auto& [name, desc] : preset_catalog())
                std::cerr << "  " << name << "\n";
            return kConfigFailure;
        }
    } else {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "cannot read config file '" << config_path << "'\n";
            return kConfigFailure;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    ParseResult res = parse_config(text);
    if (!res.ok()) {
        print_errors(res.errors);
        return kConfigFailure;
    }
    out = std::move(*res.config);
    return kOk;
}

int cmd_run(const std::string& config_path, const std::string& preset_name,
            const std::string& out_dir, int parallel, long long seed_override) {
    ExperimentConfig cfg;
    if (int rc = load_config(config_path, preset_name, cfg); rc != kOk) return rc;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};

    const std::size_t total =
        variant_labels(cfg).size() * cfg.betas.size() * cfg.seeds.size();
    std::cout << "experiment '" << cfg.name << "': " << total << " runs on " << parallel
              << (parallel == 1 ? " thread\n" : " threads\n");

    std::vector<RunResult> results;
    std::vector<fs::path> written;
    try {
        results = run_matrix(cfg, parallel);
        written = write_matrix_outputs(results, cfg, cfg.output_dir);
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return kConfigFailure;
    }

    bool clean = true;
    std::printf("%-18s %-22s %-8s %-6s %-18s %s\n", "run_id", "algo", "beta", "seed", "status",
                "elapsed");
    for (const RunResult& r : results) {
        if (r.outcome.status != RunStatus::completed) clean = false;
        std::printf("%-18s %-22s %-8s %-6llu %-18s %.2fs\n", r.run_id.c_str(), r.algo.c_str(),
                    format_double(r.beta).c_str(), static_cast<unsigned long long>(r.seed),
                    to_string(r.outcome.status).c_str(), r.elapsed_seconds);
        if (!r.error.empty()) std::printf("    error: %s\n", r.error.c_str());
    }
    std::cout << "wrote " << written.size() << " files under " << cfg.output_dir << "\n";
    return clean ? kOk : kRunsAborted;
}

int cmd_list_presets() {
    std::size_t width = 0;
    for (const auto& [name, desc] : preset_catalog()) width = std::max(width, name.size());
    for (const auto& [name, desc] : preset_catalog())
        std::printf("%-*s  %s\n", static_cast<int>(width), name.c_str(), desc.c_str());
    return kOk;
}

int cmd_plot(const std::string& metric, const std::string& in_dir, const std::string& out_file) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(in_dir, ec)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("run_") && name.ends_with(".csv"))
            files.push_back(entry.path());
    }
    if (ec) {
        std::cerr << "cannot read directory '" << in_dir << "'\n";
        return kConfigFailure;
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "no run_*.csv files in '" << in_dir << "'\n";
        return kConfigFailure;
    }
    try {
        std::vector<TraceRow> rows;
        for (const fs::path& f : files) {
            std::vector<TraceRow> part = read_csv(f);
            rows.insert(rows.end(), part.begin(), part.end());
        }
        render_convergence_svg(rows, metric, out_file);
    } catch (const std::exception& e) {
        std::cerr << "plot failed: " << e.what() << "\n";
        return kConfigFailure;
    }
    std::cout << "wrote " << out_file << "\n";
    return kOk;
}

int cmd_validate(const std::string& config_path) {
    ExperimentConfig cfg;
    if (int rc = load_config(config_path, "", cfg); rc != kOk) return rc;
    std::cout << "config ok: experiment '" << cfg.name << "', "
              << variant_labels(cfg).size() * cfg.betas.size() * cfg.seeds.size()
              << " runs\n";
    std::cout << canonical_form(cfg);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"proximal score-matching VI experiment runner"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out_dir;
    int parallel = default_parallelism();
    long long seed_override = -1;

    CLI::App* run = app.add_subcommand("run", "execute an experiment matrix");
    CLI::Option* opt_config = run->add_option("--config", config_path, "config file path");
    CLI::Option* opt_preset = run->add_option("--preset", preset_name, "preset name");
    opt_config->excludes(opt_preset);
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--seed-override", seed_override, "run a single seed instead of the list")
        ->check(CLI::NonNegativeNumber);

    CLI::App* list = app.add_subcommand("list-presets", "list available presets");

    std::string metric = "fkl", in_dir, plot_out = "plot.svg";
    CLI::App* plot = app.add_subcommand("plot", "render a convergence SVG from run CSVs");
    plot->add_option("--metric", metric, "metric to plot");
    plot->add_option("--in", in_dir, "directory containing run_*.csv")->required();
    plot->add_option("--out", plot_out, "output SVG path");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
    validate->add_option("--config", validate_path, "config file path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigFailure;
    }

    if (run->parsed()) {
        if (config_path.empty() && preset_name.empty()) {
            std::cerr << "run needs --config or --preset\n";
            return kConfigFailure;
        }
        return cmd_run(config_path, preset_name, out_dir, parallel, seed_override);
    }
    if (list->parsed()) return cmd_list_presets();
    if (plot->parsed()) return cmd_plot(metric, in_dir, plot_out);
    if (validate->parsed()) return cmd_validate(validate_path);
    return kConfigFailure;
}
