#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace proxvi {

/// Counter-based pseudo-random generator (Philox4x32-10).
///
/// State is (seed, stream_id, counter). Every (seed, stream_id) pair names an
/// independent stream of at least 2^64 128-bit blocks; the draw sequence is a
/// pure function of that pair, so replays are exact and streams handed to
/// different runs never overlap. Copying a SeededRng forks the position too,
/// so derive fresh streams with child() instead of copying when independence
/// is required.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n). Requires n > 0.
    std::size_t uniform_index(std::size_t n);

    /// Standard normal via Box-Muller. Each call consumes one uniform pair
    /// and returns the cosine branch; no spare is cached, so the mapping from
    /// counter position to output is stateless.
    double normal();
    /// Fills out with i.i.d. standard normals, consuming ceil(n/2) pairs and
    /// using both branches of each pair.
    void fill_normal(std::span<double> out);
    std::vector<double> normals(std::size_t n);

    /// Derives an independent stream from (seed, stream_id, key). The child
    /// starts at counter 0 and is a pure function of its inputs: position of
    /// the parent does not matter.
    SeededRng child(std::uint64_t key) const;

  private:
    void refill();

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 4; // 4 = exhausted, refill on next draw
};

/// SplitMix64 finalizer; used for stream-id derivation and seed hashing.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace proxvi
