#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "proxvi/algorithms.hpp"
#include "proxvi/config.hpp"

namespace proxvi {

/// One cell of the experiment matrix: an algorithm variant at one (beta, seed).
struct RunResult {
    std::string run_id; // 16 hex chars, stable across re-runs of the same config
    std::string algo;   // variant label, e.g. "proximal_sm", "advi", "proximal_sm:S5"
    std::string target;
    std::string family;
    double beta = 0.0;
    std::uint64_t seed = 0;
    RunOutcome outcome;
    double elapsed_seconds = 0.0;
    std::string error; // populated when status == failed
};

/// PROXI_SCORE_VI_THREADS when set and positive, else hardware concurrency.
int default_parallelism();

/// Algorithm variant labels the config expands to: each algo crossed with the
/// S sweep and (for proximal_sm) the schedule sweep, suffixed only when the
/// corresponding list has more than one entry.
std::vector<std::string> variant_labels(const ExperimentConfig& cfg);

/// Stable joinable identifier: hash of the canonical config, the variant
/// label, beta, and the seed.
std::string run_identifier(const ExperimentConfig& cfg, const std::string& label, double beta,
                           std::uint64_t seed);

/// Executes every (variant, beta, seed) combination on a bounded worker pool.
/// Each combination is deterministic regardless of parallelism, and a failing
/// run never disturbs any other run's result.
std::vector<RunResult> run_matrix(const ExperimentConfig& cfg, int parallelism);

/// Writes header run_id,algo,target,family,seed,outer_t,score_calls,metric,value
/// then the rows sorted by (run_id, outer_t, metric); UTF-8, LF, shortest
/// round-trip floats. IoError when the file cannot be written.
void write_csv(std::vector<TraceRow> rows, const std::filesystem::path& path);
void write_csv(const std::vector<RunResult>& results, const std::filesystem::path& path);

/// Reads a file written by write_csv. IoError / malformed-content Error.
std::vector<TraceRow> read_csv(const std::filesystem::path& path);

/// Writes run_<id>.csv per run plus aggregate.csv (per algorithm x beta:
/// mean and sample std of each final metric over completed seeds). Returns
/// every path written, aggregate last.
std::vector<std::filesystem::path> write_matrix_outputs(const std::vector<RunResult>& results,
                                                        const ExperimentConfig& cfg,
                                                        const std::filesystem::path& dir);

} // namespace proxvi
