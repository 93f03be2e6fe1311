#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "renlab/fft.hpp"
#include "renlab/lattice_dist.hpp"
#include "renlab/mass_vector.hpp"
#include "renlab/numeric.hpp"

namespace renlab {

inline constexpr double kClipAbort = 1e-6;

namespace detail {

/// Crop a full convolution to the target window, moving off-window mass to
/// leakage and clipping transform noise below zero into the ledger.
inline MassVector finish_convolution(std::vector<double> full, std::int64_t full_lo,
                                     double budget_in, double clip_in, double span,
                                     std::optional<Window> window) {
    MassVector out;
    out.span = span;
    out.clip_ledger = clip_in;
    std::int64_t lo = full_lo;
    std::int64_t hi = full_lo + static_cast<std::int64_t>(full.size()) - 1;
    if (window) {
        lo = std::max(lo, window->lo);
        hi = std::min(hi, window->hi);
    }
    if (lo > hi) {
        out.lo = window ? window->lo : full_lo;
        out.v.clear();
        out.leakage = budget_in;
        return out;
    }
    out.lo = lo;
    out.v.assign(full.begin() + (lo - full_lo), full.begin() + (hi - full_lo + 1));
    for (double& x : out.v) {
        if (x < 0.0) {
            out.clip_ledger += -x;
            x = 0.0;
        }
    }
    if (out.clip_ledger > kClipAbort) {
        throw InvariantError("convolution: clipped-negative ledger exceeds 1e-6");
    }
    out.leakage = budget_in - out.total();
    if (out.leakage < 0.0) out.leakage = 0.0;
    return out;
}

}  // namespace detail

/// p * q restricted to `window`. Mass budget (values + leakage) is conserved
/// exactly: whatever the window cannot hold is added to the result leakage.
inline MassVector convolve(const MassVector& p, const MassVector& q,
                           std::optional<Window> window = {}) {
    if (p.span != q.span) throw DomainError("convolve: lattice span mismatch");
    if (p.v.empty() || q.v.empty()) {
        MassVector out;
        out.lo = window ? window->lo : 0;
        out.span = p.span;
        out.leakage = (p.total() + p.leakage) * (q.total() + q.leakage);
        out.clip_ledger = p.clip_ledger + q.clip_ledger;
        return out;
    }
    const double budget = (p.total() + p.leakage) * (q.total() + q.leakage);
    auto full = fft::convolve(p.v, q.v);
    return detail::finish_convolution(std::move(full), p.lo + q.lo, budget,
                                      p.clip_ledger + q.clip_ledger, p.span, window);
}

/// Engine for walk marginals P(S_n = .) of one step law, with an optional
/// cap on the running maximum: the kernel is F restricted to (-inf, m],
/// not renormalized, so n-fold convolution gives P(S_n = ., M_n <= m).
/// Keeps the kernel spectrum and the binary-power ladder cached.
class MarginalEngine {
public:
    MarginalEngine(const LatticeDist& dist, Window window,
                   std::optional<double> constraint_max = {})
        : window_(window), span_(dist.span()) {
        if (window.lo > window.hi) throw DomainError("MarginalEngine: empty window");
        kernel_.span = span_;
        kernel_.lo = std::max(window.lo, dist.lo());
        const std::int64_t k_hi0 = std::min(window.hi, dist.hi());
        std::int64_t k_hi = k_hi0;
        if (constraint_max) {
            k_hi = std::min(k_hi, static_cast<std::int64_t>(std::floor(*constraint_max)));
        }
        if (k_hi < kernel_.lo) {
            kernel_.v.clear();
        } else {
            kernel_.v.resize(static_cast<std::size_t>(k_hi - kernel_.lo + 1));
            for (std::int64_t x = kernel_.lo; x <= k_hi; ++x) {
                double m = dist.step_mass(x);
                kernel_.v[static_cast<std::size_t>(x - kernel_.lo)] = m;
            }
        }
        // window-truncated step mass (not cut by the constraint) is leakage
        KahanSum lost;
        for (std::int64_t x = dist.lo(); x <= dist.hi(); ++x) {
            if (x >= kernel_.lo && x <= k_hi) continue;
            if (constraint_max && static_cast<double>(x) > *constraint_max) continue;
            lost.add(dist.step_mass(x));
        }
        double trunc_tail = 0.0;  // far-atom mass: beyond-window tail of F
        if (!constraint_max || static_cast<double>(dist.hi()) <= *constraint_max) {
            trunc_tail += dist.truncation_mass_right();
        }
        if (!constraint_max || static_cast<double>(dist.lo()) <= *constraint_max) {
            trunc_tail += dist.truncation_mass_left();
        }
        kernel_.leakage = lost.value() + trunc_tail;
        constrained_ = constraint_max.has_value();
        prepare_plan();
    }

    [[nodiscard]] const MassVector& kernel() const noexcept { return kernel_; }
    [[nodiscard]] bool constrained() const noexcept { return constrained_; }
    [[nodiscard]] Window window() const noexcept { return window_; }

    /// P(S_n = .) (or the constrained sub-probability) by binary powering.
    MassVector marginal(int n) {
        if (n < 1) throw DomainError("MarginalEngine: n must be >= 1");
        MassVector acc;
        bool have = false;
        int bit = 0;
        for (int m = n; m > 0; m >>= 1, ++bit) {
            if (m & 1) {
                const MassVector& pw = power_of_two(bit);
                acc = have ? convolve_planned(acc, pw) : pw;
                have = true;
            }
        }
        return acc;
    }

    /// Sequential access: returns P(S_n = .) while advancing n by one each
    /// call, starting from n = 1. Cheaper than powering when all n <= N are
    /// needed.
    const MassVector& sequential_next() {
        if (seq_n_ == 0) {
            seq_ = clip_to_window(kernel_);
            seq_n_ = 1;
        } else {
            seq_ = convolve_planned(seq_, kernel_);
            ++seq_n_;
        }
        return seq_;
    }
    [[nodiscard]] int sequential_n() const noexcept { return seq_n_; }
    void sequential_reset() noexcept { seq_n_ = 0; }

private:
    void prepare_plan() {
        if (kernel_.v.empty()) return;
        const std::size_t max_out = static_cast<std::size_t>(window_.length()) + kernel_.v.size();
        plan_ = fft::plan_factor(kernel_.v, max_out);
    }

    MassVector clip_to_window(const MassVector& m) const {
        MassVector out = m;
        std::optional<Window> w = window_;
        return detail::finish_convolution(std::move(out.v), out.lo, m.total() + m.leakage,
                                          m.clip_ledger, span_, w);
    }

    MassVector convolve_planned(const MassVector& p, const MassVector& q) {
        if (p.v.empty() || q.v.empty()) {
            MassVector out;
            out.lo = window_.lo;
            out.span = span_;
            out.leakage = (p.total() + p.leakage) * (q.total() + q.leakage);
            out.clip_ledger = p.clip_ledger + q.clip_ledger;
            return out;
        }
        const double budget = (p.total() + p.leakage) * (q.total() + q.leakage);
        std::vector<double> full;
        const std::size_t out_len = p.v.size() + q.v.size() - 1;
        if (std::min(p.v.size(), q.v.size()) <= fft::kDirectCrossover) {
            full = fft::convolve_direct(p.v, q.v);
        } else if (&q == &kernel_ && plan_.fft_size >= fft::next_pow2(out_len)) {
            full = fft::convolve_with(p.v, plan_, out_len);
        } else {
            full = fft::convolve(p.v, q.v);
        }
        return detail::finish_convolution(std::move(full), p.lo + q.lo, budget,
                                          p.clip_ledger + q.clip_ledger, span_, window_);
    }

    const MassVector& power_of_two(int j) {
        auto it = powers_.find(j);
        if (it != powers_.end()) return it->second;
        if (j == 0) {
            return powers_.emplace(0, clip_to_window(kernel_)).first->second;
        }
        const MassVector& prev = power_of_two(j - 1);
        MassVector sq = convolve_planned(prev, prev);
        return powers_.emplace(j, std::move(sq)).first->second;
    }

    Window window_;
    double span_;
    MassVector kernel_;
    fft::PlannedFactor plan_;
    bool constrained_ = false;
    std::map<int, MassVector> powers_;
    MassVector seq_;
    int seq_n_ = 0;
};

/// One-shot marginal: P(S_n = .) or P(S_n = ., M_n <= constraint_max).
inline MassVector walk_marginal(const LatticeDist& dist, int n, Window window,
                                std::optional<double> constraint_max = {}) {
    MarginalEngine eng(dist, window, constraint_max);
    return eng.marginal(n);
}

// ---------------------------------------------------------------------------
// Renewal measure
// ---------------------------------------------------------------------------

enum class RenewalMethod { newton, direct };

struct RenewalTable {
    std::vector<double> u;  // u[x] = U({x}) for x in [0, X]
    double residual = 0.0;  // max |u - (delta_0 + f*u)| over the window
    RenewalMethod method = RenewalMethod::newton;

    [[nodiscard]] double at(std::int64_t x) const noexcept {
        if (x < 0 || x >= static_cast<std::int64_t>(u.size())) return 0.0;
        return u[static_cast<std::size_t>(x)];
    }
};

namespace detail {

inline std::vector<double> renewal_kernel(const LatticeDist& dist, std::int64_t X) {
    if (dist.lo() < 0) throw DomainError("renewal_mass: step law must live on the positive lattice");
    if (dist.step_mass(0) != 0.0) throw DomainError("renewal_mass: f(0) must be 0");
    std::vector<double> f(static_cast<std::size_t>(X) + 1, 0.0);
    for (std::int64_t x = 1; x <= std::min(X, dist.hi()); ++x) {
        f[static_cast<std::size_t>(x)] = dist.step_mass(x);
    }
    return f;
}

/// product of two power series truncated to `out_len` coefficients
inline std::vector<double> series_mul(const std::vector<double>& a, const std::vector<double>& b,
                                      std::size_t out_len) {
    const std::size_t la = std::min(a.size(), out_len);
    const std::size_t lb = std::min(b.size(), out_len);
    std::vector<double> ta(a.begin(), a.begin() + la);
    std::vector<double> tb(b.begin(), b.begin() + lb);
    std::vector<double> full;
    if (std::min(la, lb) <= fft::kDirectCrossover) {
        full = fft::convolve_direct(ta, tb);
    } else {
        full = fft::convolve(ta, tb);
    }
    full.resize(out_len, 0.0);
    return full;
}

}  // namespace detail

/// Solve u = delta_0 + f * u on [0, X]. `direct` runs the O(X^2) recursion
/// u(x) = sum_{y>=1} f(y) u(x-y); `newton` inverts the power series 1 - f by
/// quadratic iteration g <- g (2 - (1-f) g) with length doubling.
inline RenewalTable renewal_mass(const LatticeDist& dist, std::int64_t X,
                                 RenewalMethod method = RenewalMethod::newton) {
    auto f = detail::renewal_kernel(dist, X);
    const std::size_t len = f.size();
    RenewalTable table;
    table.method = method;
    if (method == RenewalMethod::direct) {
        std::vector<double> u(len, 0.0);
        u[0] = 1.0;
        for (std::size_t x = 1; x < len; ++x) {
            double s = 0.0;
            for (std::size_t y = 1; y <= x; ++y) s += f[y] * u[x - y];
            u[x] = s;
        }
        table.u = std::move(u);
    } else {
        std::vector<double> a(len);  // a = 1 - f
        a[0] = 1.0;
        for (std::size_t i = 1; i < len; ++i) a[i] = -f[i];
        std::vector<double> g{1.0};
        std::size_t cur = 1;
        while (cur < len) {
            cur = std::min(cur * 2, len);
            auto t = detail::series_mul(a, g, cur);       // (1-f) g
            for (double& x : t) x = -x;
            t[0] += 2.0;                                   // 2 - (1-f) g
            g = detail::series_mul(g, t, cur);
        }
        table.u = std::move(g);
    }
    // residual r = u - delta_0 - f*u on [0, X]
    auto fu = detail::series_mul(f, table.u, len);
    double res = 0.0;
    for (std::size_t x = 0; x < len; ++x) {
        const double rhs = (x == 0 ? 1.0 : 0.0) + fu[x];
        res = std::max(res, std::abs(table.u[x] - rhs));
    }
    table.residual = res;
    for (double& x : table.u) {
        if (x < 0.0) {
            if (-x > 1e-9) throw InvariantError("renewal_mass: negative renewal mass beyond tolerance");
            x = 0.0;
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Partial sums T_ell and the renewal ratio diagnostic
// ---------------------------------------------------------------------------

/// T_ell(delta; x) = sum_{1 <= n <= A(delta x)} n^ell P(S_n in x+I), with
/// I = (-h, 0], i.e. the single lattice site x. Marginals are exact on the
/// given window; for positive laws the default window [0, x] is lossless.
inline double partial_sum_T(const LatticeDist& dist, int ell, double delta, std::int64_t x,
                            std::optional<Window> window = {}) {
    if (x <= 0) throw DomainError("partial_sum_T: x must be positive");
    const double a_dx = dist.model().eval(delta * static_cast<double>(x) * dist.span());
    const long long N = safe_floor(a_dx);
    if (N < 1) return 0.0;
    Window w = window.value_or(
        dist.lo() >= 0 ? Window{0, x}
                       : Window{x - 8 * static_cast<std::int64_t>(delta * x) - 1024,
                                x + 8 * static_cast<std::int64_t>(delta * x) + 1024});
    MarginalEngine eng(dist, w);
    KahanSum s;
    for (long long n = 1; n <= N; ++n) {
        const MassVector& p = eng.sequential_next();
        s.add(std::pow(static_cast<double>(n), ell) * p.at(x));
    }
    return s.value();
}

/// Table of P(S_n = x_j) for n = 1..n_max and a fixed set of lattice points;
/// the building block for T-profiles over (delta, x) grids.
inline std::vector<std::vector<double>> marginal_point_table(const LatticeDist& dist, int n_max,
                                                             const std::vector<std::int64_t>& xs,
                                                             Window window) {
    MarginalEngine eng(dist, window);
    std::vector<std::vector<double>> table;
    table.reserve(static_cast<std::size_t>(n_max));
    for (int n = 1; n <= n_max; ++n) {
        const MassVector& p = eng.sequential_next();
        std::vector<double> row(xs.size());
        for (std::size_t j = 0; j < xs.size(); ++j) row[j] = p.at(xs[j]);
        table.push_back(std::move(row));
    }
    return table;
}

struct SrtRatioResult {
    double ratio = 0.0;
    double renewal_mass_at_x = 0.0;
    double truncation_error = 0.0;  // bound on the mass missing from the n-sum
    bool flagged = false;           // truncation error above 10% of the value
};

/// U((x-h, x]) * x / (h C A(x)) for a renewal (positive) law, from a renewal
/// table that covers x.
inline SrtRatioResult srt_ratio(const LatticeDist& dist, const RenewalTable& table,
                                std::int64_t x, double C) {
    if (x <= 0 || x >= static_cast<std::int64_t>(table.u.size())) {
        throw DomainError("srt_ratio: x outside the renewal table");
    }
    SrtRatioResult r;
    r.renewal_mass_at_x = table.at(x);
    const double ax = dist.model().eval(static_cast<double>(x) * dist.span());
    r.ratio = r.renewal_mass_at_x * static_cast<double>(x) / (C * ax);
    return r;
}

/// Two-sided variant: U(x+I) = sum_{n <= N} P(S_n = x) plus a truncation
/// error bound c2_hat * sum_{n > N} 1/a_n with c2_hat the measured sup of
/// a_n * sup_z P(S_n = z).
inline SrtRatioResult srt_ratio_two_sided(const LatticeDist& dist, std::int64_t x, double C,
                                          int n_max, Window window) {
    if (x <= 0) throw DomainError("srt_ratio: x must be positive");
    MarginalEngine eng(dist, window);
    KahanSum u;
    double c2_hat = 0.0;
    const auto& model = dist.model();
    for (int n = 1; n <= n_max; ++n) {
        const MassVector& p = eng.sequential_next();
        u.add(p.at(x));
        double sup = 0.0;
        for (double v : p.v) sup = std::max(sup, v);
        c2_hat = std::max(c2_hat, sup * model.norming(static_cast<double>(n)));
    }
    // tail sum_{n > N} 1/a_n by the midpoint integral in log n
    const double alpha = model.alpha();
    auto g = [&](double s) {
        const double n = std::exp(s);
        return n / model.norming(n);
    };
    const double lo = std::log(static_cast<double>(n_max) + 0.5);
    const double tail = adaptive_simpson(g, lo, lo + 60.0 * alpha / (1.0 - alpha) + 20.0, 1e-10);

    SrtRatioResult r;
    r.renewal_mass_at_x = u.value();
    const double ax = model.eval(static_cast<double>(x) * dist.span());
    r.ratio = r.renewal_mass_at_x * static_cast<double>(x) / (C * ax);
    r.truncation_error = c2_hat * tail * static_cast<double>(x) / (C * ax);
    r.flagged = r.truncation_error > 0.1 * std::abs(r.ratio);
    return r;
}

// ---------------------------------------------------------------------------
// Lemma-style exponential bound fit
// ---------------------------------------------------------------------------

struct BasicBoundFit {
    double c = 0.0;              // exponent constant, 1/2 inf_z A(z) F(z..inf)
    double C = 0.0;              // smallest prefactor covering the grid
    double max_violation = 0.0;  // should be exactly 0 by construction
    int argmax_n = 0;
    std::int64_t argmax_z = 0;
};

/// Fit P(S_n = z) <= (C/a_n) exp(-c n / A(z)) over the (n, z) grid; c is
/// chosen from the tail so the bound shape is honest, then C is the smallest
/// constant that covers every grid cell.
inline BasicBoundFit basic_bound_fit(const LatticeDist& dist, const std::vector<int>& n_grid,
                                     const std::vector<std::int64_t>& z_grid) {
    if (dist.lo() < 0) throw DomainError("basic_bound_fit: renewal-process case only");
    if (n_grid.empty() || z_grid.empty()) throw DomainError("basic_bound_fit: empty grid");
    const auto& model = dist.model();
    const std::int64_t z_max = *std::max_element(z_grid.begin(), z_grid.end());

    double inf_af = std::numeric_limits<double>::infinity();
    for (std::int64_t z = 0; z <= z_max; ++z) {
        const double af = model.eval(static_cast<double>(z) * dist.span()) * dist.upper_tail(z);
        inf_af = std::min(inf_af, af);
    }
    BasicBoundFit fit;
    fit.c = 0.5 * inf_af;
    if (!(fit.c > 0.0)) throw DomainError("basic_bound_fit: tail does not dominate (c <= 0)");

    const int n_max = *std::max_element(n_grid.begin(), n_grid.end());
    MarginalEngine eng(dist, Window{0, z_max});
    std::vector<bool> wanted(static_cast<std::size_t>(n_max) + 1, false);
    for (int n : n_grid) wanted[static_cast<std::size_t>(n)] = true;

    double best = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        const MassVector& p = eng.sequential_next();
        if (!wanted[static_cast<std::size_t>(n)]) continue;
        const double log_an = std::log(model.norming(static_cast<double>(n)));
        for (std::int64_t z : z_grid) {
            const double pz = p.at(z);
            if (pz <= 0.0) continue;
            const double az = model.eval(static_cast<double>(z) * dist.span());
            const double log_val = std::log(pz) + log_an + fit.c * static_cast<double>(n) / az;
            if (log_val > best) {
                best = log_val;
                fit.argmax_n = n;
                fit.argmax_z = z;
            }
        }
    }
    fit.C = std::exp(best);
    fit.max_violation = 0.0;
    return fit;
}

}  // namespace renlab
