#include "sbsp/fit.hpp"

#include "sbsp/special_functions.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace sbsp {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 to_unconstrained(const HyperParams& h) {
    return {std::log(h.alpha / (1.0 - h.alpha)), std::log(h.c), std::log(h.beta)};
}

HyperParams from_unconstrained(const Vec3& x) {
    HyperParams h;
    // The box keeps the likelihood numerically trustworthy: past c ~ 1e10 the
    // term lgamma(n + c + 1) - lgamma(c + 1) cancels catastrophically and the
    // optimizer would climb rounding noise.  Near-homogeneous fits (c, beta
    // large with c / beta fixed) are already indistinguishable at the cap.
    const double t = std::clamp(x[0], -13.8, 13.8);  // alpha in ~(1e-6, 1 - 1e-6)
    h.alpha = 1.0 / (1.0 + std::exp(-t));
    h.c = std::exp(std::clamp(x[1], -23.0, 23.0));
    h.beta = std::exp(std::clamp(x[2], -23.0, 23.0));
    return h;
}

double simplex_diameter(const std::array<Vec3, 4>& pts) {
    double diam = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double dist2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double dx = pts[i][k] - pts[j][k];
                dist2 += dx * dx;
            }
            diam = std::max(diam, std::sqrt(dist2));
        }
    }
    return diam;
}

struct NmOutcome {
    Vec3 x;
    double value;
    bool converged;
    std::vector<double> trace;
};

// Nelder-Mead with the standard reflection/expansion/contraction/shrink
// coefficients (1, 2, 0.5, 0.5).
NmOutcome nelder_mead(const std::function<double(const Vec3&)>& f, const Vec3& start,
                      int max_iters, double value_tol, double diameter_tol,
                      bool keep_trace) {
    constexpr double kStep = 0.5;
    std::array<Vec3, 4> pts;
    std::array<double, 4> vals;
    pts[0] = start;
    vals[0] = f(start);
    for (int i = 0; i < 3; ++i) {
        Vec3 p = start;
        p[i] += kStep;
        pts[i + 1] = p;
        vals[i + 1] = f(p);
    }

    NmOutcome out;
    out.converged = false;
    auto order = [&] {
        std::array<int, 4> idx{0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        std::array<Vec3, 4> p2;
        std::array<double, 4> v2;
        for (int i = 0; i < 4; ++i) {
            p2[i] = pts[idx[i]];
            v2[i] = vals[idx[i]];
        }
        pts = p2;
        vals = v2;
    };
    order();

    for (int iter = 0; iter < max_iters; ++iter) {
        if (keep_trace) out.trace.push_back(vals[0]);
        if (vals[3] - vals[0] < value_tol || simplex_diameter(pts) < diameter_tol) {
            out.converged = true;
            break;
        }

        Vec3 centroid{};
        for (int i = 0; i < 3; ++i) {
            centroid[0] += pts[i][0] / 3.0;
            centroid[1] += pts[i][1] / 3.0;
            centroid[2] += pts[i][2] / 3.0;
        }
        auto blend = [&](double coef) {
            Vec3 p;
            for (int k = 0; k < 3; ++k) p[k] = centroid[k] + coef * (centroid[k] - pts[3][k]);
            return p;
        };

        const Vec3 xr = blend(1.0);
        const double fr = f(xr);
        if (fr < vals[0]) {
            const Vec3 xe = blend(2.0);
            const double fe = f(xe);
            if (fe < fr) {
                pts[3] = xe;
                vals[3] = fe;
            } else {
                pts[3] = xr;
                vals[3] = fr;
            }
        } else if (fr < vals[2]) {
            pts[3] = xr;
            vals[3] = fr;
        } else {
            const bool outside = fr < vals[3];
            const Vec3 xc = blend(outside ? 0.5 : -0.5);
            const double fc = f(xc);
            if (fc < (outside ? fr : vals[3])) {
                pts[3] = xc;
                vals[3] = fc;
            } else {
                for (int i = 1; i < 4; ++i) {
                    for (int k = 0; k < 3; ++k) pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
                    vals[i] = f(pts[i]);
                }
            }
        }
        order();
    }

    out.x = pts[0];
    out.value = vals[0];
    return out;
}

}  // namespace

std::vector<HyperParams> default_start_grid() {
    static const double alphas[] = {0.1, 0.3, 0.5, 0.7, 0.9};
    static const double cs[] = {1.0, 10.0, 100.0, 1000.0, 10000.0};
    static const double betas[] = {0.1, 1.0, 10.0};
    std::vector<HyperParams> grid;
    grid.reserve(75);
    for (double a : alphas) {
        for (double c : cs) {
            for (double b : betas) {
                grid.push_back({a, c, b});
            }
        }
    }
    return grid;
}

FitResult fit(const SufficientStats& stats, const FitConfig& cfg) {
    stats.validate();
    if (stats.kind != cfg.model) {
        throw std::invalid_argument("fit: statistics kind does not match cfg.model");
    }
    if (stats.n_users() < 1) {
        throw std::invalid_argument("fit: cannot fit with zero observed users");
    }
    if (cfg.n_starts < 1) throw std::invalid_argument("fit: n_starts must be >= 1");

    // gamma_0^d depends only on alpha for fixed d; memoise it across the grid
    // sweep and the simplex iterations, which revisit alpha values often.
    std::unordered_map<std::uint64_t, double> gamma_cache;
    const long long d = stats.d;
    long long n_evals = 0;
    auto objective = [&](const Vec3& x) {
        const HyperParams h = from_unconstrained(x);
        const auto key = std::bit_cast<std::uint64_t>(h.alpha);
        auto it = gamma_cache.find(key);
        if (it == gamma_cache.end()) {
            it = gamma_cache.emplace(key, d >= 1 ? gamma_accum(h.alpha, 0, d) : 0.0).first;
        }
        ++n_evals;
        return -log_marginal_given_gamma(stats, h, it->second);
    };

    const std::vector<HyperParams> grid =
        cfg.start_grid ? *cfg.start_grid : default_start_grid();
    if (grid.empty()) throw std::invalid_argument("fit: empty start grid");

    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i].validate();
        ranked.emplace_back(objective(to_unconstrained(grid[i])), i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::size_t n_starts = std::min<std::size_t>(static_cast<std::size_t>(cfg.n_starts),
                                                       ranked.size());
    NmOutcome best;
    best.value = std::numeric_limits<double>::infinity();
    best.converged = false;
    for (std::size_t s = 0; s < n_starts; ++s) {
        const Vec3 start = to_unconstrained(grid[ranked[s].second]);
        NmOutcome run = nelder_mead(objective, start, cfg.max_iters, cfg.tol,
                                    cfg.simplex_tol, cfg.keep_trace);
        if (run.value < best.value) {
            best = std::move(run);
        }
    }

    FitResult result;
    result.hyper = from_unconstrained(best.x);
    result.log_marginal = -best.value;
    result.converged = best.converged;
    result.n_evals = n_evals;
    result.trace = std::move(best.trace);
    for (double& v : result.trace) v = -v;  // expose log-marginal values
    return result;
}

std::vector<std::pair<HyperParams, double>> profile_objective(
    const SufficientStats& stats, ModelKind model, const std::vector<HyperParams>& grid) {
    stats.validate();
    if (stats.kind != model) {
        throw std::invalid_argument("profile_objective: statistics kind does not match model");
    }
    std::vector<std::pair<HyperParams, double>> values;
    values.reserve(grid.size());
    std::unordered_map<std::uint64_t, double> gamma_cache;
    for (const auto& h : grid) {
        h.validate();
        const auto key = std::bit_cast<std::uint64_t>(h.alpha);
        auto it = gamma_cache.find(key);
        if (it == gamma_cache.end()) {
            it = gamma_cache.emplace(key, stats.d >= 1 ? gamma_accum(h.alpha, 0, stats.d) : 0.0)
                     .first;
        }
        values.emplace_back(h, log_marginal_given_gamma(stats, h, it->second));
    }
    return values;
}

}  // namespace sbsp
