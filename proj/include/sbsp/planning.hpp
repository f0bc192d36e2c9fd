#pragma once

#include "sbsp/models.hpp"

#include <optional>
#include <vector>

namespace sbsp {

// Pointwise envelope of the predictive cumulative-user trajectories that
// remain after discarding the lowest-density fraction of simulated tuples.
// Entry l (0-based index l-1) refers to day d + l; lo/hi are cumulative user
// counts including the N_d users already seen, and mean is the analytic
// predictive mean trajectory.
struct CredibleBand {
    double level = 0.0;
    long long d = 0;
    long long n_d = 0;
    long long horizon = 0;
    long long trajectories_kept = 0;
    std::vector<long long> lo;
    std::vector<long long> hi;
    std::vector<double> mean;
};

// Days-to-target summary.  All day counts are relative to the end of the
// observed window (a value of l means day d + l).  A missing upper end means
// the target was not reached within the explored horizon (right-censored);
// point is absent only when it cannot be determined at all.
struct DmInterval {
    long long target_m = 0;
    double level = 0.0;
    std::string method;
    long long lower = 0;
    std::optional<long long> upper;
    std::optional<long long> point;
};

// Trigger days (absolute, in d+1 .. d+d_up) of one simulated batch of future
// new users.
struct NewUserDraw {
    std::vector<long long> trigger_days;

    long long count() const { return static_cast<long long>(trigger_days.size()); }
};

struct PosteriorDmResult {
    DmInterval interval;
    std::vector<long long> samples;  // finite day counts, sorted ascending
    long long censored_draws = 0;
    std::optional<long long> mean_point;    // ceil of the sample mean (finite draws only)
    std::optional<long long> median_point;  // sample median across all draws
    long long d_up_final = 0;               // largest horizon reached while redrawing
};

// Truncation policy for the jump-by-jump sampler: stop once the current jump
// would trigger inside the next horizon_days with probability below delta.
struct TruncationRule {
    long long horizon_days = 0;
    double delta = 1e-4;
    long long max_jumps = 1000000;
};

struct FergusonKlassDraw {
    double zeta = 0.0;                    // Delta^{-alpha} draw
    std::vector<double> jumps;            // decreasing, in (0,1)
    std::vector<long long> trigger_days;  // absolute day of first activity, > d
};

// Smallest number of additional days l such that the predictive mean
// trajectory reaches target_m, searching up to d_cap days ahead.  Returns 0
// when the target is already attained and nullopt when the mean stays below
// the target within d_cap.
std::optional<long long> point_estimate_dm(const PosteriorState& post, long long target_m,
                                           long long d_cap);

// Simulates q tuples (scale draw, daily new-user counts over the horizon),
// scores each by its exact joint log density, keeps the ceil(level * q)
// densest tuples (ties broken toward earlier draws) and returns the pointwise
// envelope of their cumulative trajectories.
CredibleBand global_band(const PosteriorState& post, double level, long long horizon,
                         long long q, RngStream& rng);

// Reads a days-to-target interval off a band: lower is the first day the
// upper envelope reaches the target, upper the first day the lower envelope
// does.  Throws std::runtime_error when even the upper envelope never gets
// there (band too short).  The point estimate comes from the band's mean
// trajectory, clamped into [lower, upper].
DmInterval invert_band(const CredibleBand& band, long long target_m);

// One draw of the future new-user batch over the next d_up days: batch size
// K from the negative binomial predictive law, then K i.i.d. trigger days
// with weights B(1 - alpha, y) on d+1 .. d+d_up.
NewUserDraw sample_new_user_triggers(const PosteriorState& post, long long d_up, RngStream& rng);

// Monte Carlo posterior of the days-to-target: each replication draws a new
// user batch over an adaptive horizon (starting at 3x the point estimate and
// doubling up to 6 times while the batch is too small to ever reach the
// target) and records the day the target is hit.  The interval is the
// equal-tailed (level) range of the recorded day counts; replications that
// exhaust all doublings are kept as right-censored.
PosteriorDmResult posterior_dm(const PosteriorState& post, long long target_m, long long k_mc,
                               double level, RngStream& rng, long long d_cap = 36500);

// Jump-by-jump draw of the posterior measure of unseen users (inverse-Levy /
// Ferguson-Klass): zeta = Delta^{-alpha} from its Gamma law, then jumps
// tau_1 > tau_2 > ... solved from alpha * zeta * T(tau_l) = E_l with E_l a
// standard Poisson process, each jump paired with a geometric first-activity
// day conditioned to land after day d.
FergusonKlassDraw ferguson_klass_new_measure(const PosteriorState& post,
                                             const TruncationRule& rule, RngStream& rng);

// Root solve used by the sampler: the tau in (0,1) with
// alpha * zeta * T(tau) = e.  Exposed for direct verification against the
// closed form available at d = 0.  Bisection to 1e-12 within 200 iterations.
double fk_invert_tail(double zeta, double e, long long d, double alpha);

}  // namespace sbsp
