#pragma once

#include <cstdint>

namespace vcim {

/**
 * Deterministic xoshiro256++ stream with splitmix64 seeding.
 *
 * Every replication owns its own stream keyed by seed ^ rep_index, so the
 * draws are independent of scheduling and thread count.  Gaussian draws use
 * Box-Muller (no rejection), chi-squares are sums of squared Gaussians;
 * both are reproducible bit-for-bit for a fixed seed.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1).
    double uniform();

    /// Standard normal draw.
    double normal();

    /// Chi-square draw with integer degrees of freedom.
    double chisq(int df);

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

} // namespace vcim
