#include "sbsp/models.hpp"

#include "sbsp/special_functions.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sbsp {

namespace {

inline double lgamma_pos(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

void require_kind(const SufficientStats& stats, ModelKind kind, const char* fn) {
    if (stats.kind != kind) {
        throw std::invalid_argument(std::string(fn) + ": sufficient statistics have the wrong kind");
    }
}

double gamma_window(const HyperParams& hyper, long long d) {
    return d >= 1 ? gamma_accum(hyper.alpha, 0, d) : 0.0;
}

}  // namespace

void HyperParams::validate() const {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("HyperParams: alpha must lie in (0,1), got " +
                                    std::to_string(alpha));
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("HyperParams: c must be positive, got " + std::to_string(c));
    }
    if (!(beta > 0.0)) {
        throw std::invalid_argument("HyperParams: beta must be positive, got " +
                                    std::to_string(beta));
    }
}

double log_marginal_given_gamma(const SufficientStats& stats, const HyperParams& hyper,
                                double gamma_d) {
    hyper.validate();
    stats.validate();
    const double n = static_cast<double>(stats.n_users());
    const double d = static_cast<double>(stats.d);

    double lp = n * std::log(hyper.alpha) + (hyper.c + 1.0) * std::log(hyper.beta) -
                (n + hyper.c + 1.0) * std::log(hyper.beta + gamma_d) +
                lgamma_pos(n + hyper.c + 1.0) - lgamma_pos(hyper.c + 1.0);

    const auto hist = stats.histogram();
    if (stats.kind == ModelKind::bernoulli) {
        for (long long m = 1; m <= stats.d; ++m) {
            const long long cnt = hist[static_cast<std::size_t>(m)];
            if (cnt == 0) continue;
            lp += static_cast<double>(cnt) *
                  log_beta(static_cast<double>(m) - hyper.alpha, d - static_cast<double>(m) + 1.0);
        }
    } else {
        // A user first active on day y contributes B(1 - a, y): the chance of
        // staying silent for y - 1 days and triggering on day y, mixed over jumps.
        for (long long y = 1; y <= stats.d; ++y) {
            const long long cnt = hist[static_cast<std::size_t>(y)];
            if (cnt == 0) continue;
            lp += static_cast<double>(cnt) *
                  log_beta(1.0 - hyper.alpha, static_cast<double>(y));
        }
    }
    return lp;
}

double log_marginal_bernoulli(const SufficientStats& stats, const HyperParams& hyper) {
    require_kind(stats, ModelKind::bernoulli, "log_marginal_bernoulli");
    return log_marginal_given_gamma(stats, hyper, gamma_window(hyper, stats.d));
}

double log_marginal_geometric(const SufficientStats& stats, const HyperParams& hyper) {
    require_kind(stats, ModelKind::geometric, "log_marginal_geometric");
    return log_marginal_given_gamma(stats, hyper, gamma_window(hyper, stats.d));
}

PosteriorState posterior(const SufficientStats& stats, const HyperParams& hyper) {
    hyper.validate();
    stats.validate();
    PosteriorState post;
    post.hyper = hyper;
    post.stats = stats;
    post.gamma_d = gamma_window(hyper, stats.d);
    post.delta_shape = static_cast<double>(stats.n_users()) + hyper.c + 1.0;
    post.delta_rate = hyper.beta + post.gamma_d;
    return post;
}

PosteriorState prior_state(const HyperParams& hyper) {
    SufficientStats empty;
    empty.kind = ModelKind::geometric;
    empty.d = 0;
    return posterior(empty, hyper);
}

std::vector<double> sample_seen_user_jumps(const PosteriorState& post, RngStream& rng) {
    std::vector<double> jumps;
    jumps.reserve(post.stats.counts.size());
    const double alpha = post.hyper.alpha;
    const double d = static_cast<double>(post.stats.d);
    if (post.stats.kind == ModelKind::bernoulli) {
        for (long long m : post.stats.counts) {
            jumps.push_back(
                sample_beta(static_cast<double>(m) - alpha, d - static_cast<double>(m) + 1.0, rng));
        }
    } else {
        for (long long y : post.stats.counts) {
            jumps.push_back(sample_beta(1.0 - alpha, static_cast<double>(y), rng));
        }
    }
    return jumps;
}

NegBinLaw predict_new_users_law(const PosteriorState& post, long long horizon) {
    if (horizon < 1) {
        throw std::invalid_argument("predict_new_users_law: horizon must be >= 1");
    }
    const double gamma_ahead = gamma_accum(post.hyper.alpha, post.stats.d, horizon);
    return NegBinLaw{post.delta_shape, post.delta_rate / (post.delta_rate + gamma_ahead)};
}

std::vector<double> predictive_trajectory_means(const PosteriorState& post, long long horizon) {
    if (horizon < 1) {
        throw std::invalid_argument("predictive_trajectory_means: horizon must be >= 1");
    }
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(horizon));
    GammaAccumulant acc(post.hyper.alpha, post.stats.d);
    const double n = static_cast<double>(post.stats.n_users());
    const double scale = post.delta_shape / post.delta_rate;
    for (long long l = 1; l <= horizon; ++l) {
        means.push_back(n + scale * acc.extend_to(l));
    }
    return means;
}

}  // namespace sbsp
