#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace proxvi {

struct TraceRow {
    std::string run_id;
    std::string algo;
    std::string target;
    std::string family;
    std::uint64_t seed = 0;
    long outer_t = 0;
    long long score_calls = 0;
    std::string metric;
    double value = 0.0;
};

/// Flat metric log keyed by outer iteration and cumulative score calls.
struct MetricTrace {
    std::vector<TraceRow> rows;

    void add(std::string metric, double value, long outer_t, long long score_calls) {
        rows.push_back(TraceRow{run_id, algo, target, family, seed, outer_t, score_calls,
                                std::move(metric), value});
    }

    // Identity stamped onto every row added through add().
    std::string run_id;
    std::string algo;
    std::string target;
    std::string family;
    std::uint64_t seed = 0;
};

} // namespace proxvi
