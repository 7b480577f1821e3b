#include "proxvi/rng.hpp"

#include <cmath>
#include <numbers>

#include "proxvi/errors.hpp"

namespace proxvi {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
inline std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

inline void philox_round(std::array<std::uint32_t, 4>& x, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * x[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * x[2];
    const std::array<std::uint32_t, 4> y = {
        hi32(p1) ^ x[1] ^ k0,
        lo32(p1),
        hi32(p0) ^ x[3] ^ k1,
        lo32(p0),
    };
    x = y;
}

std::array<std::uint32_t, 4> philox4x32_10(std::uint64_t counter, std::uint64_t stream_id,
                                           std::uint64_t seed) {
    std::array<std::uint32_t, 4> x = {lo32(counter), hi32(counter), lo32(stream_id),
                                      hi32(stream_id)};
    std::uint32_t k0 = lo32(seed);
    std::uint32_t k1 = hi32(seed);
    for (int round = 0; round < 10; ++round) {
        philox_round(x, k0, k1);
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return x;
}

} // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

void SeededRng::refill() {
    block_ = philox4x32_10(counter_, stream_id_, seed_);
    ++counter_;
    block_pos_ = 0;
}

std::uint32_t SeededRng::next_u32() {
    if (block_pos_ == 4) refill();
    return block_[block_pos_++];
}

std::uint64_t SeededRng::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
}

double SeededRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t SeededRng::uniform_index(std::size_t n) {
    if (n == 0) throw EmptyInput("uniform_index: n must be positive");
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return static_cast<std::size_t>(v % bound);
}

double SeededRng::normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SeededRng::fill_normal(std::span<double> out) {
    std::size_t i = 0;
    while (i < out.size()) {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i++] = r * std::cos(2.0 * std::numbers::pi * u2);
        if (i < out.size()) out[i++] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
}

std::vector<double> SeededRng::normals(std::size_t n) {
    std::vector<double> out(n);
    fill_normal(out);
    return out;
}

SeededRng SeededRng::child(std::uint64_t key) const {
    const std::uint64_t derived =
        splitmix64(stream_id_ ^ (0x9E3779B97F4A7C15ull * (key + 1)));
    return SeededRng(seed_, derived);
}

} // namespace proxvi
