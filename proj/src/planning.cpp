#include "sbsp/planning.hpp"

#include "sbsp/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
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

// Equal-tailed empirical quantile over the multiset given by the sorted
// finite values followed by `censored` right-censored draws.  Returns nullopt
// when the order statistic falls into the censored block.
std::optional<long long> quantile_with_censoring(const std::vector<long long>& sorted_finite,
                                                 long long censored, double prob) {
    const long long total = static_cast<long long>(sorted_finite.size()) + censored;
    long long idx = static_cast<long long>(std::ceil(prob * static_cast<double>(total))) - 1;
    idx = std::clamp<long long>(idx, 0, total - 1);
    if (idx >= static_cast<long long>(sorted_finite.size())) return std::nullopt;
    return sorted_finite[static_cast<std::size_t>(idx)];
}

// Geometric(tau) on {1, 2, ...} by inversion.
long long geometric_first_success(double tau, RngStream& rng) {
    if (tau >= 1.0) return 1;
    const double u = rng.next_open();
    const double g = std::ceil(std::log1p(-u) / std::log1p(-tau));
    return std::max<long long>(1, static_cast<long long>(g));
}

}  // namespace

std::optional<long long> point_estimate_dm(const PosteriorState& post, long long target_m,
                                           long long d_cap) {
    if (target_m < 0) throw std::invalid_argument("point_estimate_dm: target must be >= 0");
    if (d_cap < 1) throw std::invalid_argument("point_estimate_dm: d_cap must be >= 1");
    if (target_m <= post.n_users()) return 0;

    const double n = static_cast<double>(post.n_users());
    const double scale = post.delta_shape / post.delta_rate;
    GammaAccumulant acc(post.hyper.alpha, post.stats.d);
    for (long long l = 1; l <= d_cap; ++l) {
        if (n + scale * acc.extend_to(l) >= static_cast<double>(target_m)) return l;
    }
    return std::nullopt;
}

CredibleBand global_band(const PosteriorState& post, double level, long long horizon,
                         long long q, RngStream& rng) {
    if (!(level > 0.0) || !(level < 1.0)) {
        throw std::invalid_argument("global_band: level must lie in (0,1)");
    }
    if (horizon < 1) throw std::invalid_argument("global_band: horizon must be >= 1");
    if (q < 100) throw std::invalid_argument("global_band: need at least 100 trajectories");

    const double alpha = post.hyper.alpha;
    const long long d = post.stats.d;

    // Per-day Poisson rate factors alpha * B(1 - alpha, l) for l = d+1 .. d+horizon;
    // the day-l mean given the scale draw z is z * rate[l].
    std::vector<double> rate(static_cast<std::size_t>(horizon));
    std::vector<double> log_rate(static_cast<std::size_t>(horizon));
    for (long long i = 0; i < horizon; ++i) {
        const double lb = log_beta(1.0 - alpha, static_cast<double>(d + i + 1));
        rate[static_cast<std::size_t>(i)] = alpha * std::exp(lb);
        log_rate[static_cast<std::size_t>(i)] = std::log(alpha) + lb;
    }

    const double lg_shape = lgamma_pos(post.delta_shape);
    const double log_rate_const = post.delta_shape * std::log(post.delta_rate);

    std::vector<std::vector<long long>> counts(static_cast<std::size_t>(q));
    std::vector<double> score(static_cast<std::size_t>(q));
    for (long long t = 0; t < q; ++t) {
        const double z = sample_gamma(post.delta_shape, post.delta_rate, rng);
        double lp = log_rate_const - lg_shape + (post.delta_shape - 1.0) * std::log(z) -
                    post.delta_rate * z;
        auto& row = counts[static_cast<std::size_t>(t)];
        row.resize(static_cast<std::size_t>(horizon));
        for (long long i = 0; i < horizon; ++i) {
            const double mean = z * rate[static_cast<std::size_t>(i)];
            const long long k = sample_poisson(mean, rng);
            row[static_cast<std::size_t>(i)] = k;
            lp += static_cast<double>(k) * (std::log(z) + log_rate[static_cast<std::size_t>(i)]) -
                  mean - lgamma_pos(static_cast<double>(k) + 1.0);
        }
        score[static_cast<std::size_t>(t)] = lp;
    }

    // Keep the ceil(level * q) highest-density tuples; ties resolve toward
    // the earlier draw.
    const long long keep = static_cast<long long>(
        std::ceil(level * static_cast<double>(q)));
    std::vector<long long> order(static_cast<std::size_t>(q));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](long long a, long long b) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });

    CredibleBand band;
    band.level = level;
    band.d = d;
    band.n_d = post.n_users();
    band.horizon = horizon;
    band.trajectories_kept = keep;
    band.lo.assign(static_cast<std::size_t>(horizon), std::numeric_limits<long long>::max());
    band.hi.assign(static_cast<std::size_t>(horizon), std::numeric_limits<long long>::min());
    for (long long r = 0; r < keep; ++r) {
        const auto& row = counts[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
        long long cum = post.n_users();
        for (long long i = 0; i < horizon; ++i) {
            cum += row[static_cast<std::size_t>(i)];
            auto& lo = band.lo[static_cast<std::size_t>(i)];
            auto& hi = band.hi[static_cast<std::size_t>(i)];
            lo = std::min(lo, cum);
            hi = std::max(hi, cum);
        }
    }
    band.mean = predictive_trajectory_means(post, horizon);
    return band;
}

DmInterval invert_band(const CredibleBand& band, long long target_m) {
    if (target_m <= band.n_d) {
        throw std::invalid_argument("invert_band: target must exceed the observed user count");
    }

    DmInterval out;
    out.target_m = target_m;
    out.level = band.level;
    out.method = "inversion";

    std::optional<long long> lower;
    for (long long i = 0; i < band.horizon; ++i) {
        if (band.hi[static_cast<std::size_t>(i)] >= target_m) {
            lower = i + 1;
            break;
        }
    }
    if (!lower) {
        throw std::runtime_error(
            "invert_band: the band never reaches the target within its horizon (" +
            std::to_string(band.horizon) + " days); rebuild with a longer horizon");
    }
    out.lower = *lower;

    for (long long i = *lower - 1; i < band.horizon; ++i) {
        if (band.lo[static_cast<std::size_t>(i)] >= target_m) {
            out.upper = i + 1;
            break;
        }
    }

    for (long long i = 0; i < band.horizon; ++i) {
        if (band.mean[static_cast<std::size_t>(i)] >= static_cast<double>(target_m)) {
            out.point = i + 1;
            break;
        }
    }
    // The envelope of a finite sample can in principle miss the analytic mean
    // curve; clamp so that lower <= point <= upper always holds.
    if (out.point) {
        *out.point = std::max(*out.point, out.lower);
        if (out.upper) *out.point = std::min(*out.point, *out.upper);
    } else if (out.upper) {
        out.point = out.upper;
    }
    return out;
}

NewUserDraw sample_new_user_triggers(const PosteriorState& post, long long d_up,
                                     RngStream& rng) {
    if (d_up < 1) throw std::invalid_argument("sample_new_user_triggers: d_up must be >= 1");
    const NegBinLaw law = predict_new_users_law(post, d_up);
    const long long k = sample_negbin(law, rng);

    std::vector<double> log_w(static_cast<std::size_t>(d_up));
    for (long long i = 0; i < d_up; ++i) {
        log_w[static_cast<std::size_t>(i)] =
            log_beta(1.0 - post.hyper.alpha, static_cast<double>(post.stats.d + i + 1));
    }
    CategoricalSampler day_sampler(log_w);

    NewUserDraw draw;
    draw.trigger_days.reserve(static_cast<std::size_t>(k));
    for (long long j = 0; j < k; ++j) {
        draw.trigger_days.push_back(post.stats.d + 1 +
                                    static_cast<long long>(day_sampler(rng)));
    }
    return draw;
}

PosteriorDmResult posterior_dm(const PosteriorState& post, long long target_m, long long k_mc,
                               double level, RngStream& rng, long long d_cap) {
    if (target_m <= post.n_users()) {
        throw std::invalid_argument("posterior_dm: target must exceed the observed user count");
    }
    if (k_mc < 100) throw std::invalid_argument("posterior_dm: need at least 100 replications");
    if (!(level > 0.0) || !(level < 1.0)) {
        throw std::invalid_argument("posterior_dm: level must lie in (0,1)");
    }

    if (d_cap < 1) throw std::invalid_argument("posterior_dm: d_cap must be >= 1");

    const long long need = target_m - post.n_users();
    const long long d_hat = point_estimate_dm(post, target_m, d_cap).value_or(d_cap);

    // Ladder of look-ahead windows: start at three times the point estimate and
    // double on every shortfall, never exceeding the hard cap.  Duplicate
    // rungs would redraw the same window, so the ladder stops at the cap.
    constexpr int kMaxDoublings = 6;
    std::vector<long long> ladder;
    for (int a = 0; a <= kMaxDoublings; ++a) {
        const long long d_up =
            std::min(d_cap, std::max<long long>(1, 3 * d_hat) << a);
        if (!ladder.empty() && d_up == ladder.back()) break;
        ladder.push_back(d_up);
    }

    // The categorical day table and batch-size law only depend on the window,
    // which takes at most 7 distinct values; build each lazily once.
    struct Level {
        long long d_up = 0;
        NegBinLaw law;
        std::unique_ptr<CategoricalSampler> days;
    };
    std::vector<Level> levels(ladder.size());
    auto level_at = [&](std::size_t attempt) -> Level& {
        Level& lv = levels[attempt];
        if (!lv.days) {
            lv.d_up = ladder[attempt];
            lv.law = predict_new_users_law(post, lv.d_up);
            std::vector<double> log_w(static_cast<std::size_t>(lv.d_up));
            for (long long i = 0; i < lv.d_up; ++i) {
                log_w[static_cast<std::size_t>(i)] =
                    log_beta(1.0 - post.hyper.alpha, static_cast<double>(post.stats.d + i + 1));
            }
            lv.days = std::make_unique<CategoricalSampler>(log_w);
        }
        return lv;
    };

    PosteriorDmResult result;
    result.d_up_final = ladder.front();
    std::vector<long long> day_buffer;
    for (long long rep = 0; rep < k_mc; ++rep) {
        bool recorded = false;
        for (std::size_t attempt = 0; attempt < ladder.size(); ++attempt) {
            Level& lv = level_at(attempt);
            result.d_up_final = std::max(result.d_up_final, lv.d_up);
            const long long k = sample_negbin(lv.law, rng);
            if (k < need) continue;  // batch cannot reach the target: widen and redraw
            day_buffer.clear();
            day_buffer.reserve(static_cast<std::size_t>(k));
            for (long long j = 0; j < k; ++j) {
                day_buffer.push_back(1 + static_cast<long long>((*lv.days)(rng)));
            }
            // Day count on which the target is hit: the need-th smallest day.
            std::nth_element(day_buffer.begin(), day_buffer.begin() + (need - 1),
                             day_buffer.end());
            result.samples.push_back(day_buffer[static_cast<std::size_t>(need - 1)]);
            recorded = true;
            break;
        }
        if (!recorded) ++result.censored_draws;
    }

    std::sort(result.samples.begin(), result.samples.end());
    const double eps = 1.0 - level;
    const auto lower = quantile_with_censoring(result.samples, result.censored_draws, eps / 2.0);
    const auto upper =
        quantile_with_censoring(result.samples, result.censored_draws, 1.0 - eps / 2.0);
    if (!lower) {
        throw std::runtime_error(
            "posterior_dm: nearly all replications censored; the target appears out of "
            "reach within the explored horizons");
    }

    if (!result.samples.empty() && result.censored_draws == 0) {
        const double mean = std::accumulate(result.samples.begin(), result.samples.end(), 0.0) /
                            static_cast<double>(result.samples.size());
        result.mean_point = static_cast<long long>(std::ceil(mean));
    }
    result.median_point = quantile_with_censoring(result.samples, result.censored_draws, 0.5);

    result.interval.target_m = target_m;
    result.interval.level = level;
    result.interval.method = "posterior";
    result.interval.lower = *lower;
    result.interval.upper = upper;
    result.interval.point = result.mean_point ? result.mean_point : result.median_point;
    if (result.interval.point) {
        *result.interval.point = std::max(*result.interval.point, result.interval.lower);
        if (result.interval.upper) {
            *result.interval.point = std::min(*result.interval.point, *result.interval.upper);
        }
    }
    return result;
}

double fk_invert_tail(double zeta, double e, long long d, double alpha) {
    if (!(zeta > 0.0) || !(e > 0.0)) {
        throw std::invalid_argument("fk_invert_tail: zeta and e must be positive");
    }
    const double target = e / (alpha * zeta);
    // T decreases from +inf at 0+ to 0 at 1-; bisect on the bracket (0,1).
    double lo = 0.0;
    double hi = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (stable_tail_integral(mid, d, alpha) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-12) return 0.5 * (lo + hi);
    }
    throw std::runtime_error("fk_invert_tail: bisection failed to localise the root to 1e-12");
}

FergusonKlassDraw ferguson_klass_new_measure(const PosteriorState& post,
                                             const TruncationRule& rule, RngStream& rng) {
    if (rule.horizon_days < 1) {
        throw std::invalid_argument("ferguson_klass_new_measure: horizon_days must be >= 1");
    }
    if (!(rule.delta > 0.0) || !(rule.delta < 1.0)) {
        throw std::invalid_argument("ferguson_klass_new_measure: delta must lie in (0,1)");
    }

    FergusonKlassDraw draw;
    draw.zeta = sample_gamma(post.delta_shape, post.delta_rate, rng);
    const double alpha = post.hyper.alpha;
    const long long d = post.stats.d;

    double e = 0.0;
    for (long long l = 0; l < rule.max_jumps; ++l) {
        e += sample_exponential(rng);
        double tau;
        if (d == 0) {
            // Closed form: T(v) = (v^{-alpha} - 1)/alpha.
            tau = std::pow(1.0 + e / draw.zeta, -1.0 / alpha);
        } else {
            tau = fk_invert_tail(draw.zeta, e, d, alpha);
        }
        // Truncation: the chance this jump triggers inside the horizon is
        // 1 - (1-tau)^horizon; once that falls below delta, this jump and all
        // smaller ones are negligible.
        const double p_window = -std::expm1(static_cast<double>(rule.horizon_days) *
                                            std::log1p(-tau));
        if (p_window < rule.delta) return draw;
        draw.jumps.push_back(tau);
        draw.trigger_days.push_back(d + geometric_first_success(tau, rng));
    }
    throw std::runtime_error("ferguson_klass_new_measure: jump budget exhausted before truncation");
}

}  // namespace sbsp
