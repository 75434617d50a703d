#pragma once

#include <cstdint>
#include <vector>

namespace otflow {

// Counter-based random stream. Each draw mixes (master_seed, stream_index,
// counter) through a SplitMix64-style finalizer, so a stream is fully
// determined by its (seed, index) pair and independent streams can be handed
// to parallel workers without sharing state.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    // Deterministically derived child stream; used to fan work out to
    // workers while keeping the (seed, index) reproducibility contract.
    RngStream substream(std::uint64_t label) const;

    std::uint64_t next_u64();
    // Uniform on [0, 1), 53-bit resolution.
    double next_double();
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller; the paired draw is cached.
    double normal();
    std::vector<double> normal_vector(int dim);
    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n);

    static std::uint64_t mix64(std::uint64_t z);

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace otflow
