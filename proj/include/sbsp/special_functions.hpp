#pragma once

namespace sbsp {

// ln B(x, y) for x, y > 0.  Throws std::invalid_argument outside the domain.
double log_beta(double x, double y);

// Accumulated arrival-rate mass over a block of days:
//
//   gamma_accum(alpha, a, b) = alpha * sum_{i=1}^{b} B(1 - alpha, a + i)
//
// for alpha in (0,1), a >= 0, b >= 1.  This quantity drives every marginal
// and predictive law in the model; it is additive across adjacent blocks:
//
//   gamma_accum(al, 0, d + D) = gamma_accum(al, 0, d) + gamma_accum(al, d, D)
//
// Each Beta term is evaluated in log space and exponentiated, so the sum is
// stable for large day indices.
double gamma_accum(double alpha, long long a, long long b);

// Incremental form of gamma_accum for day-by-day horizon scans.  Starts at
// horizon 0 with value 0 and extends one day at a time; extending to b gives
// exactly gamma_accum(alpha, a, b).
class GammaAccumulant {
public:
    GammaAccumulant(double alpha, long long a);

    // Extends the sum up to new_b (>= current horizon) and returns the value.
    double extend_to(long long new_b);

    double value() const { return value_; }
    long long horizon() const { return b_; }
    double alpha() const { return alpha_; }
    long long offset() const { return a_; }

private:
    double alpha_;
    long long a_;
    long long b_ = 0;
    double value_ = 0.0;
    double lg_one_minus_alpha_;
};

// Tail of the unit-interval jump intensity after d observed days:
//
//   T(v) = int_v^1 (1 - s)^d s^{-1-alpha} ds,   v in (0,1).
//
// For d <= 60 the integrand is expanded binomially and integrated term by
// term:  T(v) = sum_{k=0}^{d} C(d,k) (-1)^k (1 - v^{k-alpha}) / (k - alpha).
// Above d = 60 the alternating sum loses too many digits, so the integral is
// evaluated by adaptive quadrature after the substitution t = s^{-alpha},
// which maps it to (1/alpha) int_1^{v^-alpha} (1 - t^{-1/alpha})^d dt with a
// bounded, monotone integrand.
double stable_tail_integral(double v, long long d, double alpha);

}  // namespace sbsp
