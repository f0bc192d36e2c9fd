#pragma once

#include "sbsp/data_model.hpp"
#include "sbsp/fit.hpp"

namespace sbsp {

// Two-parameter Indian buffet process baseline: mass theta > 0 and
// concentration c > 0 of a homogeneous Beta-process prior.  Unlike the
// scaled-stable model, its posterior predictive for unseen users depends on
// the data only through the fitted parameters, not on N_d.
struct IbpParams {
    double theta = 1.0;
    double c = 1.0;

    void validate() const;
};

// Log marginal of a Bernoulli activity panel:
//   N_d log(theta) - theta * S(c) + sum_i [log c + log B(M_i, d - M_i + c)]
// with S(c) = sum_{i=1}^d c / (c + i - 1).
double ibp_log_marginal(const SufficientStats& stats, const IbpParams& params);

// Maximum marginal-likelihood fit.  theta profiles out in closed form,
// theta_hat(c) = N_d / S(c), leaving a 1-D search over log c (coarse grid
// plus golden-section refinement; cfg.tol bounds the bracket width).
IbpParams ibp_fit(const SufficientStats& stats, const FitConfig& cfg = FitConfig{});

// Expected number of new users over the next horizon days after day d:
//   theta * sum_{j=d+1}^{d+horizon} c / (c + j - 1).
// The shifted_index variant uses c / (c + j) instead, for comparison with
// conventions that index arrivals from zero.
double ibp_predict_new_users(const IbpParams& params, long long d, long long horizon,
                             bool shifted_index = false);

}  // namespace sbsp
