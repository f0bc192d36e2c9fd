#include "sbsp/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sbsp {

namespace {

constexpr unsigned __int128 kPcgMult =
    (static_cast<unsigned __int128>(2549297995355413924ULL) << 64) |
    4865540595714422341ULL;

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double lgamma_pos(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t s = seed;
    const std::uint64_t s_hi = splitmix64(s);
    const std::uint64_t s_lo = splitmix64(s);
    std::uint64_t t = stream_id ^ 0xda3e39cb94b95bdbULL;
    const std::uint64_t i_hi = splitmix64(t);
    const std::uint64_t i_lo = splitmix64(t);

    inc_ = (((static_cast<unsigned __int128>(i_hi) << 64) | i_lo) << 1) | 1;
    state_ = 0;
    state_ = state_ * kPcgMult + inc_;
    state_ += (static_cast<unsigned __int128>(s_hi) << 64) | s_lo;
    state_ = state_ * kPcgMult + inc_;
}

std::uint64_t RngStream::next_u64() {
    state_ = state_ * kPcgMult + inc_;
    const std::uint64_t xored =
        static_cast<std::uint64_t>(state_ >> 64) ^ static_cast<std::uint64_t>(state_);
    const unsigned rot = static_cast<unsigned>(state_ >> 122);
    return std::rotr(xored, static_cast<int>(rot));
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double NegBinLaw::log_pmf(long long k) const {
    if (k < 0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) {
        return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    const double kk = static_cast<double>(k);
    return lgamma_pos(kk + r) - lgamma_pos(r) - lgamma_pos(kk + 1.0) +
           r * std::log(p) + kk * std::log1p(-p);
}

double sample_normal(RngStream& rng) {
    // Box-Muller, cosine branch only; deterministic and allocation-free.
    const double u1 = rng.next_open();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

double sample_exponential(RngStream& rng) {
    return -std::log(rng.next_open());
}

double sample_gamma(double shape, double rate, RngStream& rng) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("sample_gamma: shape and rate must be positive, got shape=" +
                                    std::to_string(shape) + " rate=" + std::to_string(rate));
    }
    if (shape < 1.0) {
        const double g = sample_gamma(shape + 1.0, 1.0, rng);
        return g * std::pow(rng.next_open(), 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = sample_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.next_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double sample_beta(double a, double b, RngStream& rng) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("sample_beta: shapes must be positive");
    }
    const double x = sample_gamma(a, 1.0, rng);
    const double y = sample_gamma(b, 1.0, rng);
    return x / (x + y);
}

long long sample_poisson(double mean, RngStream& rng) {
    if (!(mean >= 0.0)) {
        throw std::invalid_argument("sample_poisson: mean must be >= 0, got " +
                                    std::to_string(mean));
    }
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        const double limit = std::exp(-mean);
        long long k = 0;
        double prod = rng.next_open();
        while (prod > limit) {
            ++k;
            prod *= rng.next_open();
        }
        return k;
    }
    // PTRS (Hormann 1993).
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_open();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const double k = kf;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_mean - mean - lgamma_pos(k + 1.0)) {
            return static_cast<long long>(kf);
        }
    }
}

long long sample_negbin(const NegBinLaw& law, RngStream& rng) {
    if (!(law.r > 0.0) || !(law.p > 0.0) || law.p > 1.0) {
        throw std::invalid_argument("sample_negbin: need r > 0 and p in (0,1]");
    }
    if (law.p >= 1.0) return 0;
    const double lambda = sample_gamma(law.r, law.p / (1.0 - law.p), rng);
    return sample_poisson(lambda, rng);
}

std::size_t sample_categorical_logw(std::span<const double> log_weights, RngStream& rng) {
    CategoricalSampler sampler(log_weights);
    return sampler(rng);
}

CategoricalSampler::CategoricalSampler(std::span<const double> log_weights) {
    if (log_weights.empty()) {
        throw std::invalid_argument("CategoricalSampler: empty weight vector");
    }
    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) max_lw = std::max(max_lw, lw);
    if (!(max_lw > -std::numeric_limits<double>::infinity())) {
        throw std::invalid_argument("CategoricalSampler: all weights are zero");
    }
    cdf_.resize(log_weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        acc += std::exp(log_weights[i] - max_lw);
        cdf_[i] = acc;
    }
}

std::size_t CategoricalSampler::operator()(RngStream& rng) const {
    const double u = rng.next_double() * cdf_.back();
    std::size_t lo = 0, hi = cdf_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cdf_[mid] <= u) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return lo;
}

}  // namespace sbsp
