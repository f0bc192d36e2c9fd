#include "sbsp/generators.hpp"

#include "sbsp/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sbsp {

namespace {

std::string user_name(long long index) {
    return "u" + std::to_string(index);
}

void require_days(long long days, const char* fn) {
    if (days < 1) {
        throw std::invalid_argument(std::string(fn) + ": days must be >= 1");
    }
}

// Truncated geometric on 1..days given at least one success in the window.
long long conditional_first_day(double p, long long days, RngStream& rng) {
    if (p >= 1.0) return 1;
    const double q_window = -std::expm1(static_cast<double>(days) * std::log1p(-p));
    const double u = rng.next_open() * q_window;
    const double f = std::ceil(std::log1p(-u) / std::log1p(-p));
    return std::clamp<long long>(static_cast<long long>(f), 1, days);
}

}  // namespace

ActivityMatrix generate_bernoulli_prior(const HyperParams& hyper, long long days,
                                        RngStream& rng) {
    hyper.validate();
    require_days(days, "generate_bernoulli_prior");

    ActivityMatrix out;
    out.d = days;
    std::vector<long long> active_count;  // M_i so far, aligned with out.users

    GammaAccumulant acc(hyper.alpha, 0);
    double gamma_prev = 0.0;
    for (long long j = 1; j <= days; ++j) {
        // Seen users first: activity probability (M_i - alpha) / (j - alpha).
        const double denom = static_cast<double>(j) - hyper.alpha;
        for (std::size_t i = 0; i < out.users.size(); ++i) {
            const double p = (static_cast<double>(active_count[i]) - hyper.alpha) / denom;
            if (rng.next_double() < p) {
                out.users[i].active_days.push_back(j);
                ++active_count[i];
            }
        }
        // Then the day's batch of new users.
        const double gamma_j = acc.extend_to(j);
        const NegBinLaw batch_law{static_cast<double>(out.users.size()) + hyper.c + 1.0,
                                  (hyper.beta + gamma_prev) / (hyper.beta + gamma_j)};
        const long long arrivals = sample_negbin(batch_law, rng);
        for (long long a = 0; a < arrivals; ++a) {
            out.users.push_back({user_name(static_cast<long long>(out.users.size()) + 1), {j}});
            active_count.push_back(1);
        }
        gamma_prev = gamma_j;
    }
    return out;
}

TriggerData generate_geometric_prior(const HyperParams& hyper, long long days, RngStream& rng) {
    hyper.validate();
    require_days(days, "generate_geometric_prior");

    const double gamma_window = gamma_accum(hyper.alpha, 0, days);
    const NegBinLaw total_law{hyper.c + 1.0, hyper.beta / (hyper.beta + gamma_window)};
    const long long k = sample_negbin(total_law, rng);

    // First-day profile: P(y) is proportional to B(1 - a, y), the marginal
    // weight of a user staying silent for y - 1 days and triggering on day y.
    std::vector<double> log_w(static_cast<std::size_t>(days));
    for (long long y = 1; y <= days; ++y) {
        log_w[static_cast<std::size_t>(y - 1)] =
            log_beta(1.0 - hyper.alpha, static_cast<double>(y));
    }
    CategoricalSampler day_sampler(log_w);

    std::vector<long long> first_days(static_cast<std::size_t>(k));
    for (auto& f : first_days) f = 1 + static_cast<long long>(day_sampler(rng));
    std::sort(first_days.begin(), first_days.end());

    TriggerData out;
    out.d = days;
    out.triggers.reserve(static_cast<std::size_t>(k));
    for (long long i = 0; i < k; ++i) {
        out.triggers.push_back({user_name(i + 1), first_days[static_cast<std::size_t>(i)]});
    }
    return out;
}

ActivityMatrix generate_dg2(const HyperParams& hyper, long long days, RngStream& rng) {
    const TriggerData triggers = generate_geometric_prior(hyper, days, rng);

    ActivityMatrix out;
    out.d = days;
    out.users.reserve(triggers.triggers.size());
    for (const auto& t : triggers.triggers) {
        const double eps = 0.5 * rng.next_double();
        const double rate =
            eps * (1.0 - hyper.alpha) / (1.0 - hyper.alpha + static_cast<double>(t.first_day));
        ActivityMatrix::UserActivity u;
        u.user_id = t.user_id;
        u.active_days.push_back(t.first_day);
        for (long long j = t.first_day + 1; j <= days; ++j) {
            if (rng.next_double() < rate) u.active_days.push_back(j);
        }
        out.users.push_back(std::move(u));
    }
    return out;
}

ActivityMatrix generate_zipf(const ZipfPopulation& pop, long long days, RngStream& rng) {
    if (pop.pool_size < 1) throw std::invalid_argument("generate_zipf: pool_size must be >= 1");
    if (!(pop.tail_gamma > 0.0)) {
        throw std::invalid_argument("generate_zipf: tail_gamma must be positive");
    }
    require_days(days, "generate_zipf");

    ActivityMatrix out;
    out.d = days;

    // q_i = P(user i active at least once) = 1 - (1 - i^-g)^days decreases in
    // i, so scan with an exact thinning skip: propose the next candidate under
    // the current majorant q_bar, then accept with q_j / q_bar.  Unaccepted
    // users are exactly the ever-inactive ones.
    long long i = 1;
    while (i <= pop.pool_size) {
        const double p_bar = std::pow(static_cast<double>(i), -pop.tail_gamma);
        const double q_bar = -std::expm1(static_cast<double>(days) * std::log1p(-p_bar));
        if (q_bar <= 0.0) break;  // the rest of the pool can never appear

        long long j;
        if (q_bar >= 1.0 - 1e-14) {
            j = i;
        } else {
            const double u = rng.next_open();
            const double skip = std::floor(std::log1p(-u) / std::log1p(-q_bar));
            if (skip >= static_cast<double>(pop.pool_size - i + 1)) break;
            j = i + static_cast<long long>(skip);
        }

        const double p_j = std::pow(static_cast<double>(j), -pop.tail_gamma);
        const double q_j = -std::expm1(static_cast<double>(days) * std::log1p(-p_j));
        if (q_bar >= 1.0 - 1e-14 || rng.next_double() * q_bar < q_j) {
            ActivityMatrix::UserActivity u;
            u.user_id = user_name(j);
            const long long first = conditional_first_day(p_j, days, rng);
            u.active_days.push_back(first);
            for (long long day = first + 1; day <= days; ++day) {
                if (rng.next_double() < p_j) u.active_days.push_back(day);
            }
            out.users.push_back(std::move(u));
        }
        i = j + 1;
    }
    return out;
}

std::vector<long long> zipf_first_trigger_days(const ZipfPopulation& pop, RngStream& rng) {
    if (pop.pool_size < 1) {
        throw std::invalid_argument("zipf_first_trigger_days: pool_size must be >= 1");
    }
    if (!(pop.tail_gamma > 0.0)) {
        throw std::invalid_argument("zipf_first_trigger_days: tail_gamma must be positive");
    }
    std::vector<long long> first_days(static_cast<std::size_t>(pop.pool_size));
    for (long long i = 1; i <= pop.pool_size; ++i) {
        const double p = std::pow(static_cast<double>(i), -pop.tail_gamma);
        if (p >= 1.0) {
            first_days[static_cast<std::size_t>(i - 1)] = 1;
            continue;
        }
        const double u = rng.next_open();
        const double f = std::ceil(std::log1p(-u) / std::log1p(-p));
        first_days[static_cast<std::size_t>(i - 1)] = std::max<long long>(1, static_cast<long long>(f));
    }
    return first_days;
}

}  // namespace sbsp
