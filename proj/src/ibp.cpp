#include "sbsp/ibp.hpp"

#include "sbsp/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sbsp {

namespace {

double arrival_mass(double c, long long d) {
    // S(c) = sum_{i=1}^d c / (c + i - 1)
    double s = 0.0;
    for (long long i = 1; i <= d; ++i) {
        s += c / (c + static_cast<double>(i - 1));
    }
    return s;
}

double per_user_terms(const SufficientStats& stats, double c) {
    const double d = static_cast<double>(stats.d);
    const auto hist = stats.histogram();
    double acc = 0.0;
    for (long long m = 1; m <= stats.d; ++m) {
        const long long cnt = hist[static_cast<std::size_t>(m)];
        if (cnt == 0) continue;
        acc += static_cast<double>(cnt) *
               (std::log(c) + log_beta(static_cast<double>(m), d - static_cast<double>(m) + c));
    }
    return acc;
}

// Profile log marginal with theta_hat(c) = N_d / S(c) substituted in.
double profile_value(const SufficientStats& stats, double log_c) {
    const double c = std::exp(log_c);
    const double n = static_cast<double>(stats.n_users());
    const double s = arrival_mass(c, stats.d);
    return n * std::log(n / s) - n + per_user_terms(stats, c);
}

}  // namespace

void IbpParams::validate() const {
    if (!(theta > 0.0)) {
        throw std::invalid_argument("IbpParams: theta must be positive, got " +
                                    std::to_string(theta));
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("IbpParams: c must be positive, got " + std::to_string(c));
    }
}

double ibp_log_marginal(const SufficientStats& stats, const IbpParams& params) {
    params.validate();
    stats.validate();
    if (stats.kind != ModelKind::bernoulli) {
        throw std::invalid_argument("ibp_log_marginal: requires Bernoulli statistics");
    }
    const double n = static_cast<double>(stats.n_users());
    return n * std::log(params.theta) - params.theta * arrival_mass(params.c, stats.d) +
           per_user_terms(stats, params.c);
}

IbpParams ibp_fit(const SufficientStats& stats, const FitConfig& cfg) {
    stats.validate();
    if (stats.kind != ModelKind::bernoulli) {
        throw std::invalid_argument("ibp_fit: requires Bernoulli statistics");
    }
    if (stats.n_users() < 1) {
        throw std::invalid_argument("ibp_fit: cannot fit with zero observed users");
    }

    // Coarse sweep over log c, then golden-section refinement of the best
    // bracket.
    constexpr double kLogLo = -7.0;   // c ~ 1e-3
    constexpr double kLogHi = 14.0;   // c ~ 1.2e6
    constexpr int kGridPoints = 106;
    double best_x = kLogLo;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int g = 0; g < kGridPoints; ++g) {
        const double x = kLogLo + (kLogHi - kLogLo) * static_cast<double>(g) /
                                      static_cast<double>(kGridPoints - 1);
        const double v = profile_value(stats, x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
        }
    }

    const double step = (kLogHi - kLogLo) / static_cast<double>(kGridPoints - 1);
    double a = std::max(kLogLo, best_x - step);
    double b = std::min(kLogHi, best_x + step);
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = profile_value(stats, x1);
    double f2 = profile_value(stats, x2);
    const double tol = std::max(cfg.tol, 1e-10);
    for (int it = 0; it < cfg.max_iters && (b - a) > tol; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = profile_value(stats, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = profile_value(stats, x1);
        }
    }

    IbpParams params;
    params.c = std::exp(0.5 * (a + b));
    params.theta = static_cast<double>(stats.n_users()) / arrival_mass(params.c, stats.d);
    return params;
}

double ibp_predict_new_users(const IbpParams& params, long long d, long long horizon,
                             bool shifted_index) {
    params.validate();
    if (d < 0) throw std::invalid_argument("ibp_predict_new_users: d must be >= 0");
    if (horizon < 1) throw std::invalid_argument("ibp_predict_new_users: horizon must be >= 1");
    double s = 0.0;
    for (long long j = d + 1; j <= d + horizon; ++j) {
        const double denom = params.c + static_cast<double>(shifted_index ? j : j - 1);
        s += params.c / denom;
    }
    return params.theta * s;
}

}  // namespace sbsp
