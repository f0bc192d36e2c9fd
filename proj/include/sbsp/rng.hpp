#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sbsp {

// Deterministic uniform generator (PCG64 XSL-RR) with explicitly addressed
// streams.  Two streams with different stream_id are statistically
// independent, and the same (seed, stream_id) pair reproduces an identical
// draw sequence on every platform: all distribution samplers below are
// implemented in-house rather than via std::<distribution>, whose output is
// implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53 random bits.
    double next_double();

    // Uniform on the open interval (0,1); safe to pass to log().
    double next_open();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    unsigned __int128 state_;
    unsigned __int128 inc_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

// Negative binomial with real-valued size r > 0 and success probability
// p in (0,1]:  pmf(k) = C(k+r-1, k) p^r (1-p)^k,  mean r(1-p)/p.
// p = 1 is the degenerate law at 0.
struct NegBinLaw {
    double r;
    double p;

    double mean() const { return r * (1.0 - p) / p; }
    double log_pmf(long long k) const;
};

double sample_normal(RngStream& rng);
double sample_exponential(RngStream& rng);

// Gamma(shape, rate), mean shape/rate.  Marsaglia-Tsang squeeze, with the
// usual U^{1/shape} boost for shape < 1.
double sample_gamma(double shape, double rate, RngStream& rng);

// Beta(a, b) via a pair of Gamma draws.
double sample_beta(double a, double b, RngStream& rng);

// Poisson(mean).  Knuth multiplication below mean 30, Hormann's PTRS
// transformed rejection above (O(1) per draw regardless of mean).
long long sample_poisson(double mean, RngStream& rng);

// Gamma-Poisson mixture: lambda ~ Gamma(r, p/(1-p)), K | lambda ~ Poisson.
long long sample_negbin(const NegBinLaw& law, RngStream& rng);

// One categorical draw from unnormalised log-weights (log-sum-exp
// normalisation).  For repeated draws from the same weights build a
// CategoricalSampler once instead.
std::size_t sample_categorical_logw(std::span<const double> log_weights, RngStream& rng);

// Precomputed CDF table over a fixed finite support; draws cost one uniform
// plus a binary search.
class CategoricalSampler {
public:
    explicit CategoricalSampler(std::span<const double> log_weights);
    std::size_t operator()(RngStream& rng) const;
    std::size_t size() const { return cdf_.size(); }

private:
    std::vector<double> cdf_;
};

}  // namespace sbsp
