#pragma once

#include "sbsp/data_model.hpp"
#include "sbsp/models.hpp"
#include "sbsp/rng.hpp"

#include <vector>

namespace sbsp {

// Heavy-tailed synthetic population: pool_size potential users, user i active
// on any given day independently with probability i^{-tail_gamma}.
struct ZipfPopulation {
    long long pool_size = 0;
    double tail_gamma = 1.0;
};

// Sequential draw from the Bernoulli-observation prior.  Day j first flips
// each seen user with probability (M_i - alpha) / (j - alpha), then appends a
// negative binomial batch of new users (size law NegBin(N_{j-1} + c + 1,
// (beta + gamma_{j-1}) / (beta + gamma_j))), each active on day j.
ActivityMatrix generate_bernoulli_prior(const HyperParams& hyper, long long days,
                                        RngStream& rng);

// Draw from the Geometric-observation prior over a fixed window: total user
// count K ~ NegBin(c + 1, beta / (beta + gamma_days)), then K i.i.d. first
// days with weights B(1 - alpha, y) on 1..days.
TriggerData generate_geometric_prior(const HyperParams& hyper, long long days, RngStream& rng);

// Misspecification stress generator: first days from the Geometric prior,
// then sparse post-trigger activity - user i is active on day j > Y_i with
// probability eps_i (1 - alpha) / (1 - alpha + Y_i), eps_i ~ U(0, 0.5), and
// never before Y_i.
ActivityMatrix generate_dg2(const HyperParams& hyper, long long days, RngStream& rng);

// Zipf panel over the given window.  Only users with at least one active day
// are materialised; the pool is scanned with an exact thinning skip (the
// ever-active probabilities decrease in i), so large pools with few active
// users cost little.
ActivityMatrix generate_zipf(const ZipfPopulation& pop, long long days, RngStream& rng);

// First-activity day of every pool member (geometric with success i^{-gamma},
// unbounded horizon).  This is the trigger-level view of generate_zipf, used
// when ground-truth days-to-target beyond a fixed window are needed.
std::vector<long long> zipf_first_trigger_days(const ZipfPopulation& pop, RngStream& rng);

}  // namespace sbsp
