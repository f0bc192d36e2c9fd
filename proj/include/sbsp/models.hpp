#pragma once

#include "sbsp/data_model.hpp"
#include "sbsp/rng.hpp"

#include <vector>

namespace sbsp {

// Hyperparameters of the scaled stable-Beta prior: stability index
// alpha in (0,1), shape c > 0 and rate beta > 0 of the latent scale.
struct HyperParams {
    double alpha = 0.5;
    double c = 1.0;
    double beta = 1.0;

    void validate() const;
};

// Conjugate posterior summary after observing d days.  The transformed
// scale Delta^{-alpha} is Gamma(delta_shape, delta_rate) with
//   delta_shape = N_d + c + 1,   delta_rate = beta + gamma_d,
// where gamma_d accumulates the arrival-rate mass of the observed window.
// The per-user statistics are retained for jump resampling.
struct PosteriorState {
    HyperParams hyper;
    SufficientStats stats;
    double gamma_d = 0.0;
    double delta_shape = 0.0;
    double delta_rate = 0.0;

    long long n_users() const { return stats.n_users(); }
    long long days() const { return stats.d; }
};

// Log marginal likelihood of the observed panel under each observation model.
// Both share the prefactor
//   N_d log(alpha) + (c+1) log(beta) - (N_d+c+1) log(beta + gamma_d)
//     + lgamma(N_d+c+1) - lgamma(c+1)
// and differ in the per-user Beta terms:
//   bernoulli:  sum_i log B(M_i - alpha, d - M_i + 1)
//   geometric:  sum_i log B(1 - alpha, Y_i)
// Users enter only through the histogram of their counts, so evaluation is
// O(d) after the one-off reduction.
double log_marginal_bernoulli(const SufficientStats& stats, const HyperParams& hyper);
double log_marginal_geometric(const SufficientStats& stats, const HyperParams& hyper);

// Core used by both entry points (and by the fitter, which caches gamma_d
// across objective evaluations sharing the same alpha).
double log_marginal_given_gamma(const SufficientStats& stats, const HyperParams& hyper,
                                double gamma_d);

// Conjugate update.  d = 0 with an empty sample yields the prior state.
PosteriorState posterior(const SufficientStats& stats, const HyperParams& hyper);

// Prior state (no data, d = 0): Delta^{-alpha} ~ Gamma(c+1, beta).
PosteriorState prior_state(const HyperParams& hyper);

// Independent posterior jump draws for the seen users:
//   bernoulli:  J_i ~ Beta(M_i - alpha, d - M_i + 1)
//   geometric:  J_i ~ Beta(1 - alpha, Y_i)
// independent of the scale draw.
std::vector<double> sample_seen_user_jumps(const PosteriorState& post, RngStream& rng);

// Law of the number of new users over the next horizon days: negative
// binomial with size delta_shape and success probability
//   p = delta_rate / (delta_rate + gamma_accum(alpha, d, horizon)).
// Identical for both observation models.
NegBinLaw predict_new_users_law(const PosteriorState& post, long long horizon);

// Expected cumulative user counts over the horizon; entry l (1-based) is
//   N_d + delta_shape / delta_rate * gamma_accum(alpha, d, l).
std::vector<double> predictive_trajectory_means(const PosteriorState& post, long long horizon);

}  // namespace sbsp
