#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace renlab {

/// Neumaier-compensated accumulator. Summing long vectors of lattice masses
/// with plain `+=` loses ~n*eps of relative accuracy; the functionals and
/// the Fubini-identity checks need sums that are exact to a few ulps.
class KahanSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double stable_sum(std::span<const double> xs) noexcept {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DomainError(msg);
}

/// floor/ceil guarded against values that sit an ulp away from an integer
/// (e.g. 1/alpha when alpha itself was produced by a division).
inline long long safe_floor(double x) noexcept {
    return static_cast<long long>(std::floor(x + 1e-9));
}
inline long long safe_ceil(double x) noexcept {
    return static_cast<long long>(std::ceil(x - 1e-9));
}

/// Adaptive Simpson quadrature; tol is relative to the accumulated scale.
namespace detail {
template <typename F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double fa, double b, double fb, double m,
                            double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_step(f, a, fa, m, fm, lm, flm);
    const double right = simpson_step(f, m, fm, b, fb, rm, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-12, int max_depth = 48) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = detail::simpson_step(f, a, fa, b, fb, m, fm);
    const double scale = std::max(std::abs(whole), 1e-300);
    return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol * scale, max_depth);
}

}  // namespace renlab
