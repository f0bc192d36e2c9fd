#pragma once

#include "sbsp/models.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace sbsp {

// Empirical-Bayes fit of (alpha, c, beta) by maximising the log marginal
// likelihood.  The search runs Nelder-Mead in the unconstrained coordinates
// (logit alpha, log c, log beta) from the best n_starts points of a fixed
// multistart grid, so results are deterministic for a given dataset and
// configuration.
struct FitConfig {
    ModelKind model = ModelKind::geometric;
    int n_starts = 8;
    int max_iters = 2000;        // Nelder-Mead iterations per start
    double tol = 1e-8;           // objective spread convergence threshold
    double simplex_tol = 1e-6;   // simplex diameter convergence threshold
    bool keep_trace = false;
    std::optional<std::vector<HyperParams>> start_grid;  // overrides the default grid
};

struct FitResult {
    HyperParams hyper;
    double log_marginal = 0.0;
    bool converged = false;
    long long n_evals = 0;
    std::vector<double> trace;  // best objective per iteration of the winning start
};

// The default multistart grid: alpha in {.1,.3,.5,.7,.9} x c in
// {1,10,1e2,1e3,1e4} x beta in {.1,1,10}.
std::vector<HyperParams> default_start_grid();

// Fits the model named in cfg to the statistics (which must have matching
// kind).  Throws std::invalid_argument for an empty sample.
FitResult fit(const SufficientStats& stats, const FitConfig& cfg);

// Log marginal likelihood evaluated over an explicit grid, e.g. for
// diagnostic likelihood surfaces.  Returns (point, log marginal) pairs in
// grid order.
std::vector<std::pair<HyperParams, double>> profile_objective(
    const SufficientStats& stats, ModelKind model, const std::vector<HyperParams>& grid);

}  // namespace sbsp
