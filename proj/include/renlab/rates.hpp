#pragma once

#include <cmath>
#include <numbers>

#include "renlab/numeric.hpp"
#include "renlab/tail_model.hpp"

namespace renlab {

/// b_k(x) = A(|x|)^k / (|x| v 1); b_1 is the rate on the right hand side of
/// the strong renewal asymptotics.
inline double rate_b(const TailModel& model, int k, double x) {
    if (k < 0) throw DomainError("rate_b: k must be >= 0");
    const double ax = std::abs(x);
    return std::pow(model.eval(ax), k) / std::max(ax, 1.0);
}

enum class BtildeMethod { integral, sum };

namespace detail {

/// integral of A(t)^k / (t v 1)^2 over [lo, hi] with 0 <= lo <= hi <= 1,
/// where A(t) = (1+t)/2 on [0,1].
inline double btilde_unit_segment(int k, double lo, double hi) {
    auto prim = [k](double t) {
        return 2.0 / (k + 1) * std::pow(0.5 * (1.0 + t), k + 1);
    };
    return prim(hi) - prim(lo);
}

inline double btilde_tail_segment(const TailModel& model, int k, double lo, double hi) {
    if (model.family() == SlowVariation::constant) {
        const double e = k * model.alpha() - 1.0;  // integrand t^(e-1)
        if (std::abs(e) < 1e-13) return std::log(hi / lo);
        return (std::pow(hi, e) - std::pow(lo, e)) / e;
    }
    auto f = [&](double t) {
        const double a = model.eval(t);
        return std::pow(a, k) / (t * t);
    };
    // integrate in u = log t to keep the adaptive rule efficient on wide ranges
    auto g = [&](double u) {
        const double t = std::exp(u);
        return f(t) * t;
    };
    return adaptive_simpson(g, std::log(lo), std::log(hi), 1e-12);
}

}  // namespace detail

/// btilde_k(z, x) = integral of b_k(t)/(t v 1) dt over [|x|, |z|]; zero when
/// |x| > |z|. The `sum` method evaluates the companion quantity
/// sum_{A(|x|) <= n <= A(|z|)} n^(k-1) / a_n, which matches the integral up
/// to multiplicative constants.
inline double rate_btilde(const TailModel& model, int k, double z, double x,
                          BtildeMethod method = BtildeMethod::integral) {
    if (k < 0) throw DomainError("rate_btilde: k must be >= 0");
    const double lo = std::abs(x);
    const double hi = std::abs(z);
    if (lo >= hi) return 0.0;
    if (method == BtildeMethod::integral) {
        double total = 0.0;
        if (lo < 1.0) total += detail::btilde_unit_segment(k, lo, std::min(hi, 1.0));
        if (hi > 1.0) total += detail::btilde_tail_segment(model, k, std::max(lo, 1.0), hi);
        return total;
    }
    const long long n_lo = safe_ceil(model.eval(lo));
    const long long n_hi = safe_floor(model.eval(hi));
    KahanSum s;
    for (long long n = std::max(1LL, n_lo); n <= n_hi; ++n) {
        s.add(std::pow(static_cast<double>(n), k - 1) / model.norming(static_cast<double>(n)));
    }
    return s.value();
}

/// kappa_alpha = floor(1/alpha) - 1, the chain depth of the characterization.
inline int kappa_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("kappa_alpha: alpha must lie in (0,1)");
    return static_cast<int>(safe_floor(1.0 / alpha)) - 1;
}

/// One-sided closed form of the renewal constant: C = sin(pi*alpha)/pi.
/// The Monte Carlo route for general rho lives next to the stable sampler.
inline double srt_constant_one_sided(double alpha, double rho = 1.0) {
    if (rho != 1.0) throw DomainError("srt_constant_one_sided: closed form requires rho = 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("srt_constant_one_sided: alpha must lie in (0,1)");
    return std::sin(std::numbers::pi * alpha) / std::numbers::pi;
}

}  // namespace renlab
