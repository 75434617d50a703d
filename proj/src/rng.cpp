#include "otflow/rng.hpp"

#include <cmath>

namespace otflow {

namespace {
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t RngStream::mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed), stream_index_(stream_index) {
    key_ = mix64(master_seed + kWeyl * mix64(stream_index + 0x632BE59BD9B4E019ULL));
}

RngStream RngStream::substream(std::uint64_t label) const {
    return RngStream(master_seed_, mix64(stream_index_ * kWeyl + label) | 1ULL);
}

std::uint64_t RngStream::next_u64() {
    return mix64(key_ + kWeyl * ++counter_);
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // u1 in (0, 1] keeps the log finite.
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

std::vector<double> RngStream::normal_vector(int dim) {
    std::vector<double> out(static_cast<std::size_t>(dim));
    for (auto& v : out) v = normal();
    return out;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
    // Rejection-free modulo is fine here; streams are not adversarial and n
    // is tiny compared with 2^64, so the bias is negligible.
    return next_u64() % n;
}

}  // namespace otflow
