#include "sbsp/special_functions.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sbsp {

namespace {

// Thread-safe lgamma for strictly positive arguments.  glibc's lgamma writes
// the global signgam, which lgamma_r avoids.
inline double lgamma_pos(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double integrand_transformed(double t, double inv_alpha_neg, long long d) {
    // (1 - t^{-1/alpha})^d, written with exp/log1p to stay accurate when the
    // base is close to 0 or 1.
    const double u = std::pow(t, inv_alpha_neg);  // t^{-1/alpha} in (0,1]
    if (u >= 1.0) return 0.0;
    return std::exp(static_cast<double>(d) * std::log1p(-u));
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth,
                        double inv_alpha_neg, long long d) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = integrand_transformed(lm, inv_alpha_neg, d);
    const double frm = integrand_transformed(rm, inv_alpha_neg, d);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1,
                            inv_alpha_neg, d) +
           adaptive_simpson(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1,
                            inv_alpha_neg, d);
}

}  // namespace

double log_beta(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) {
        throw std::invalid_argument("log_beta: arguments must be positive, got x=" +
                                    std::to_string(x) + " y=" + std::to_string(y));
    }
    return lgamma_pos(x) + lgamma_pos(y) - lgamma_pos(x + y);
}

double gamma_accum(double alpha, long long a, long long b) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("gamma_accum: alpha must lie in (0,1), got " +
                                    std::to_string(alpha));
    }
    if (a < 0) throw std::invalid_argument("gamma_accum: a must be >= 0");
    if (b < 1) throw std::invalid_argument("gamma_accum: b must be >= 1");
    GammaAccumulant acc(alpha, a);
    return acc.extend_to(b);
}

GammaAccumulant::GammaAccumulant(double alpha, long long a)
    : alpha_(alpha), a_(a) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("GammaAccumulant: alpha must lie in (0,1), got " +
                                    std::to_string(alpha));
    }
    if (a < 0) throw std::invalid_argument("GammaAccumulant: a must be >= 0");
    lg_one_minus_alpha_ = lgamma_pos(1.0 - alpha);
}

double GammaAccumulant::extend_to(long long new_b) {
    if (new_b < b_) {
        throw std::invalid_argument("GammaAccumulant: horizon cannot shrink");
    }
    for (long long i = b_ + 1; i <= new_b; ++i) {
        // B(1 - alpha, a + i) = G(1-alpha) G(a+i) / G(a+i+1-alpha)
        const double y = static_cast<double>(a_ + i);
        const double lb = lg_one_minus_alpha_ + lgamma_pos(y) - lgamma_pos(y + 1.0 - alpha_);
        value_ += alpha_ * std::exp(lb);
    }
    b_ = new_b;
    return value_;
}

double stable_tail_integral(double v, long long d, double alpha) {
    if (!(v > 0.0) || !(v < 1.0)) {
        throw std::invalid_argument("stable_tail_integral: v must lie in (0,1), got " +
                                    std::to_string(v));
    }
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw std::invalid_argument("stable_tail_integral: alpha must lie in (0,1)");
    }
    if (d < 0) throw std::invalid_argument("stable_tail_integral: d must be >= 0");

    if (d <= 60) {
        // Exact alternating expansion; long double softens the cancellation.
        long double acc = 0.0L;
        long double binom = 1.0L;  // C(d, k), updated multiplicatively
        for (long long k = 0; k <= d; ++k) {
            const long double e = static_cast<long double>(k) - static_cast<long double>(alpha);
            const long double term =
                binom * (1.0L - powl(static_cast<long double>(v), e)) / e;
            acc += (k % 2 == 0) ? term : -term;
            binom *= static_cast<long double>(d - k) / static_cast<long double>(k + 1);
        }
        return static_cast<double>(acc);
    }

    const double upper = std::pow(v, -alpha);
    const double inv_alpha_neg = -1.0 / alpha;
    const double fa = integrand_transformed(1.0, inv_alpha_neg, d);
    const double fb = integrand_transformed(upper, inv_alpha_neg, d);
    const double fm = integrand_transformed(0.5 * (1.0 + upper), inv_alpha_neg, d);
    const double whole = (upper - 1.0) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = std::max(1e-12 * std::abs(whole), 1e-15);
    const double integral = adaptive_simpson(1.0, upper, fa, fm, fb, whole, tol, 60,
                                             inv_alpha_neg, d);
    return integral / alpha;
}

}  // namespace sbsp
