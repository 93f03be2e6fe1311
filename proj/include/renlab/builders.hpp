#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "renlab/lattice_dist.hpp"
#include "renlab/numeric.hpp"
#include "renlab/rates.hpp"
#include "renlab/tail_model.hpp"

namespace renlab {

namespace detail {

/// sum_{n > M} c*alpha/(n A(n)) via the midpoint integral; the residual of
/// this approximation only shifts the truncation atom by O(1e-14).
inline double tail_beyond_window(const TailModel& model, double coef, std::int64_t M) {
    const double alpha = model.alpha();
    const double m = static_cast<double>(M) + 0.5;
    if (model.family() == SlowVariation::constant) {
        return coef * std::pow(m, -alpha);
    }
    auto g = [&](double s) { return coef * alpha / model.eval(std::exp(s)); };
    const double lo = std::log(m);
    const double hi = lo + 80.0 / alpha;
    return adaptive_simpson(g, lo, hi, 1e-13);
}

/// Scale a raw mass vector to total exactly 1; the closing residual goes to
/// the heaviest entry.
inline void exact_normalize(std::vector<double>& mass) {
    KahanSum s;
    for (double m : mass) s.add(m);
    const double total = s.value();
    if (total <= 0.0) throw ConstructionError("builder: cannot normalize zero mass");
    const double inv = 1.0 / total;
    for (double& m : mass) m *= inv;
    KahanSum s2;
    for (double m : mass) s2.add(m);
    const double residual = 1.0 - s2.value();
    auto it = std::max_element(mass.begin(), mass.end());
    *it += residual;
}

struct BaselineParts {
    std::vector<double> mass;  // window [lo, x_max]
    std::int64_t lo = 0;
    std::int64_t n0 = 1;
    double trunc_right = 0.0;
    double trunc_left = 0.0;
};

/// Mass c*alpha/(n A(n)) on each lattice site beyond n0, the remainder in an
/// atom at n0; mirrored with weight q on the negative side when q > 0. This
/// realizes tails F(x..inf) ~ p/A(x), F(-inf..-x] ~ q/A(x) by Karamata.
inline BaselineParts baseline_parts(const TailModel& model, double p, double q, std::int64_t x_max) {
    const double alpha = model.alpha();
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConstructionError("baseline: alpha must lie in (0,1)");
    if (x_max < 64) throw ConstructionError("baseline: window too small");
    if (p <= 0.0 || q < 0.0) throw ConstructionError("baseline: need p > 0, q >= 0");

    const bool two_sided = q > 0.0;
    auto site = [&](std::int64_t n) {
        return alpha / (static_cast<double>(n) * model.eval(static_cast<double>(n)));
    };

    // series total from n0+1 to infinity, both sides
    const double beyond_p = tail_beyond_window(model, p, x_max);
    const double beyond_q = two_sided ? tail_beyond_window(model, q, x_max) : 0.0;
    KahanSum placed_all;
    std::vector<double> site_mass(static_cast<std::size_t>(x_max) + 1, 0.0);
    for (std::int64_t n = 1; n <= x_max; ++n) {
        site_mass[static_cast<std::size_t>(n)] = site(n);
        placed_all.add(site_mass[static_cast<std::size_t>(n)] * (p + q));
    }
    double series_from_n0 = placed_all.value() + beyond_p + beyond_q;

    std::int64_t n0 = 1;
    while (series_from_n0 >= 0.9999) {
        series_from_n0 -= (p + q) * site_mass[static_cast<std::size_t>(n0)];
        ++n0;
        if (n0 > x_max / 16) {
            throw ConstructionError("baseline: cannot reach total mass < 1 by raising n0");
        }
    }

    BaselineParts parts;
    parts.n0 = n0;
    parts.lo = two_sided ? -x_max : 0;
    parts.mass.assign(static_cast<std::size_t>(x_max - parts.lo) + 1, 0.0);
    auto at = [&](std::int64_t x) -> double& {
        return parts.mass[static_cast<std::size_t>(x - parts.lo)];
    };
    KahanSum total;
    for (std::int64_t n = n0 + 1; n <= x_max; ++n) {
        const double s = site_mass[static_cast<std::size_t>(n)];
        at(n) += p * s;
        total.add(p * s);
        if (two_sided) {
            at(-n) += q * s;
            total.add(q * s);
        }
    }
    at(x_max) += beyond_p;
    total.add(beyond_p);
    parts.trunc_right = beyond_p;
    if (two_sided) {
        at(-x_max) += beyond_q;
        total.add(beyond_q);
        parts.trunc_left = beyond_q;
    }
    const double remainder = 1.0 - total.value();
    if (remainder < 0.0) throw ConstructionError("baseline: negative remainder after fill");
    if (two_sided) {
        at(n0) += remainder * p / (p + q);
        at(-n0) += remainder * q / (p + q);
    } else {
        at(n0) += remainder;
    }
    return parts;
}

}  // namespace detail

/// Positive baseline with F(x..inf)*A(x) -> tail_constant. Satisfies the
/// classical local condition F(x+I) <= C/(x A(x)) by construction.
inline LatticeDist build_baseline(const TailModel& model, std::int64_t x_max,
                                  double tail_constant = 1.0) {
    auto parts = detail::baseline_parts(model, tail_constant, 0.0, x_max);
    nlohmann::ordered_json constants;
    constants["n0"] = parts.n0;
    constants["tail_constant"] = tail_constant;
    return LatticeDist(parts.lo, std::move(parts.mass),
                       TailMeta{model.alpha(), tail_constant, 0.0, model},
                       Provenance::baseline_pos, 1.0, parts.trunc_right, 0.0,
                       std::move(constants));
}

inline LatticeDist build_baseline_two_sided(const TailModel& model, double p, double q,
                                            std::int64_t x_max) {
    auto parts = detail::baseline_parts(model, p, q, x_max);
    nlohmann::ordered_json constants;
    constants["n0"] = parts.n0;
    constants["p"] = p;
    constants["q"] = q;
    return LatticeDist(parts.lo, std::move(parts.mass), TailMeta{model.alpha(), p, q, model},
                       Provenance::baseline_two_sided, 1.0, parts.trunc_right, parts.trunc_left,
                       std::move(constants));
}

/// Mixture F = (F1 + F2)/2 where F1 is the tail-2 baseline and F2 places
/// atoms on a greedily thinned subsequence of (x_n, eps_n) so that
/// F({x_n}) >= eps_n/A(x_n) at every kept point, while the kept series
/// decays geometrically and the tail stays o(1/A).
inline LatticeDist build_spiky(const TailModel& model, const std::vector<std::int64_t>& x_seq,
                               const std::vector<double>& eps_seq, std::int64_t x_max) {
    if (x_seq.size() != eps_seq.size()) throw ConstructionError("spiky: sequence length mismatch");
    auto f1 = detail::baseline_parts(model, 2.0, 0.0, x_max);

    struct Spike {
        std::int64_t x;
        double ratio;  // eps/A(x)
    };
    std::vector<Spike> kept;
    double last = 0.0;
    for (std::size_t i = 0; i < x_seq.size(); ++i) {
        if (i > 0 && x_seq[i] <= x_seq[i - 1]) throw ConstructionError("spiky: x_seq must increase");
        if (x_seq[i] < 1 || x_seq[i] > x_max) continue;
        const double r = eps_seq[i] / model.eval(static_cast<double>(x_seq[i]));
        if (kept.empty() || r <= 0.5 * last) {
            kept.push_back({x_seq[i], r});
            last = r;
        }
    }
    auto series = [&]() {
        KahanSum s;
        for (const auto& sp : kept) s.add(sp.ratio);
        return s.value();
    };
    while (kept.size() > 3 && series() > 0.5) kept.erase(kept.begin());
    if (kept.size() < 3) throw ConstructionError("spiky: fewer than 3 admissible subsequence points");
    const double sum = series();
    if (sum > 0.5) throw ConstructionError("spiky: subsequence series exceeds 1/2, spikes too heavy");
    const double c2 = 1.0 / sum;

    std::vector<double> mass = std::move(f1.mass);
    for (double& m : mass) m *= 0.5;
    KahanSum f2_total;
    for (const auto& sp : kept) {
        mass[static_cast<std::size_t>(sp.x)] += 0.5 * c2 * sp.ratio;
        f2_total.add(c2 * sp.ratio);
    }
    // close the tiny normalization gap of F2 on its largest spike
    mass[static_cast<std::size_t>(kept.front().x)] += 0.5 * (1.0 - f2_total.value());

    nlohmann::ordered_json constants;
    constants["n0"] = f1.n0;
    constants["c2"] = c2;
    auto pts = nlohmann::ordered_json::array();
    for (const auto& sp : kept) pts.push_back({sp.x, sp.ratio});
    constants["spikes"] = std::move(pts);
    return LatticeDist(0, std::move(mass), TailMeta{model.alpha(), 1.0, 0.0, model},
                       Provenance::spiky, 1.0, 0.5 * f1.trunc_right, 0.0, std::move(constants));
}

/// Renewal counterexample: F = (F1 + F2)/2 where F2 spreads mass with
/// constant lattice density zeta(x_{n-1})/(x_n A(x_n)) over (x_n - z_n, x_n],
/// x_n = 2^n, z_n = x_n / (2 zeta(x_{n-1})^(1+theta)). The local masses grow
/// like zeta/(x A(x)), which is exactly what breaks the renewal asymptotics
/// once zeta is unbounded.
inline LatticeDist build_counter_renewal(const TailModel& model,
                                         const std::function<double(double)>& zeta,
                                         std::int64_t x_max) {
    const double alpha = model.alpha();
    if (!(alpha > 0.0 && alpha < 0.5)) throw ConstructionError("counter_renewal: alpha must lie in (0,1/2)");
    const double theta = std::min(1.0, (1.0 - 2.0 * alpha) / (8.0 * alpha));
    auto zeta_eff = [&](double x) { return std::min(zeta(x), std::log(x)); };

    const int n_top = static_cast<int>(std::floor(std::log2(static_cast<double>(x_max))));
    int n0 = 2;
    auto z_of = [&](int n) {
        const double xn = std::ldexp(1.0, n);
        return 0.5 * xn / std::pow(zeta_eff(0.5 * xn), 1.0 + theta);
    };
    while (n0 <= n_top && (zeta_eff(std::ldexp(1.0, n0 - 1)) < 1.0 || z_of(n0) < 1.0)) ++n0;
    if (n_top - n0 + 1 < 5) throw ConstructionError("counter_renewal: window holds fewer than 5 dyadic blocks");

    std::vector<double> f2(static_cast<std::size_t>(x_max) + 1, 0.0);
    struct Block {
        std::int64_t x_n;
        double z_n;
        double mass;
    };
    std::vector<Block> blocks;
    for (int n = n0; n <= n_top; ++n) {
        const std::int64_t xn = std::int64_t(1) << n;
        if (xn > x_max) break;
        const double zn = z_of(n);
        const double dens = zeta_eff(static_cast<double>(xn / 2)) /
                            (static_cast<double>(xn) * model.eval(static_cast<double>(xn)));
        const std::int64_t first = static_cast<std::int64_t>(std::floor(static_cast<double>(xn) - zn)) + 1;
        KahanSum bm;
        for (std::int64_t j = first; j <= xn; ++j) {
            f2[static_cast<std::size_t>(j)] += dens;
            bm.add(dens);
        }
        blocks.push_back({xn, zn, bm.value()});
    }
    detail::exact_normalize(f2);

    auto f1 = detail::baseline_parts(model, 2.0, 0.0, x_max);
    std::vector<double> mass = std::move(f1.mass);
    for (double& m : mass) m *= 0.5;
    for (std::size_t i = 0; i < f2.size(); ++i) mass[i] += 0.5 * f2[i];

    // effective normalizing constant of F2 relative to unit density scale
    KahanSum raw;
    for (const auto& b : blocks) raw.add(b.mass);
    const double c_eff = raw.value() > 0 ? 1.0 / raw.value() : 1.0;

    nlohmann::ordered_json constants;
    constants["theta"] = theta;
    constants["epsilon"] = (1.0 - 2.0 * alpha) / 8.0;
    constants["n0"] = n0;
    constants["c"] = c_eff;
    constants["baseline_n0"] = f1.n0;
    auto blk = nlohmann::ordered_json::array();
    for (const auto& b : blocks) blk.push_back({b.x_n, b.z_n, b.mass * c_eff});
    constants["blocks"] = std::move(blk);
    return LatticeDist(0, std::move(mass), TailMeta{alpha, 1.0, 0.0, model},
                       Provenance::counter_renewal, 1.0, 0.5 * f1.trunc_right, 0.0,
                       std::move(constants));
}

/// Random walk counterexample (pure power A only): F = (F1 + F2 + F3*)/3.
/// F2 has constant density on E_{n,k} = [2^n + 2^k, 2^n + 2^k + 2^k/(2 k^p)),
/// F3 on G_k = [2^k, 2^k + 2^k/k^p) reflected to the negative axis; chains of
/// one F2 jump followed by one reflected F3 jump make the depth-2 functional
/// blow up while the depth-1 one stays negligible.
inline LatticeDist build_two_sided_counter(double alpha, std::int64_t x_max) {
    if (!(alpha > 0.0 && alpha < 1.0 / 3.0)) throw DomainError("two_sided_counter: alpha must lie in (0,1/3)");
    const TailModel model = TailModel::pure_power(alpha);
    const double p_exp = 0.5 * (1.0 + 1.0 / (3.0 * alpha));
    auto ell = [](double n) { return std::log1p(n); };

    auto f1 = detail::baseline_parts(model, 3.0, 3.0, x_max);

    // F2 blocks
    std::vector<double> f2(static_cast<std::size_t>(x_max) + 1, 0.0);
    const int n_top = static_cast<int>(std::floor(std::log2(static_cast<double>(x_max) + 1.0))) - 1;
    if (n_top < 6) throw ConstructionError("two_sided_counter: window too small");
    for (int n = 2; n <= n_top; ++n) {
        const std::int64_t base = std::int64_t(1) << n;
        const double dens_n = 1.0 / (ell(n) * std::pow(static_cast<double>(base), 1.0 - alpha));
        for (int k = 1; k <= n - 1; ++k) {
            const std::int64_t start = base + (std::int64_t(1) << k);
            const double width = std::ldexp(1.0, k) / (2.0 * std::pow(static_cast<double>(k), p_exp));
            const std::int64_t count = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(width)));
            const double dens = dens_n / std::pow(std::ldexp(1.0, k), 2.0 * alpha);
            for (std::int64_t j = start; j < start + count && j <= x_max; ++j) {
                f2[static_cast<std::size_t>(j)] += dens;
            }
        }
    }
    detail::exact_normalize(f2);

    // F3 blocks (to be reflected)
    std::vector<double> f3(static_cast<std::size_t>(x_max) + 1, 0.0);
    for (int k = 2;; ++k) {
        const std::int64_t start = std::int64_t(1) << k;
        const double width = std::ldexp(1.0, k) / std::pow(static_cast<double>(k), p_exp);
        const std::int64_t count = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(width)));
        if (start + count - 1 > x_max) break;
        const double dens = std::pow(static_cast<double>(k), p_exp) /
                            (ell(k) * std::pow(std::ldexp(1.0, k), 1.0 + alpha));
        for (std::int64_t j = start; j < start + count; ++j) f3[static_cast<std::size_t>(j)] += dens;
    }
    detail::exact_normalize(f3);

    std::vector<double> mass = std::move(f1.mass);
    const std::size_t origin = static_cast<std::size_t>(x_max);  // index of lattice 0
    for (double& m : mass) m /= 3.0;
    for (std::int64_t j = 1; j <= x_max; ++j) {
        mass[origin + static_cast<std::size_t>(j)] += f2[static_cast<std::size_t>(j)] / 3.0;
        mass[origin - static_cast<std::size_t>(j)] += f3[static_cast<std::size_t>(j)] / 3.0;
    }

    nlohmann::ordered_json constants;
    constants["p"] = p_exp;
    constants["n_top"] = n_top;
    constants["baseline_n0"] = f1.n0;
    return LatticeDist(-x_max, std::move(mass), TailMeta{alpha, 1.0, 1.0, model},
                       Provenance::two_sided_counter, 1.0, f1.trunc_right / 3.0,
                       f1.trunc_left / 3.0, std::move(constants));
}

struct TailCheckPoint {
    std::int64_t x;
    double p_hat;
    double q_hat;
};

struct TailCheckReport {
    std::vector<TailCheckPoint> points;
    double band = 0.10;  // relative deviation allowed on the top decade
    bool pass = false;
};

/// F(x..inf)*A(x) and F(-inf..-x]*A(x) on a dyadic grid; passes when the top
/// decade of the window sits within `band` of the nominal (p, q).
inline TailCheckReport tail_check(const LatticeDist& dist, double band = 0.10) {
    TailCheckReport rep;
    rep.band = band;
    const std::int64_t top = std::max(dist.hi(), -dist.lo());
    std::vector<TailCheckPoint> pts;
    for (std::int64_t x = 8; x * 2 <= top; x *= 2) {
        const double a = dist.model().eval(static_cast<double>(x) * dist.span());
        pts.push_back({x, dist.upper_tail(x) * a, dist.lower_tail(x) * a});
    }
    rep.points = pts;
    if (pts.size() < 3) return rep;
    const double p = dist.tail_meta().p;
    const double q = dist.tail_meta().q;
    bool ok = true;
    const std::size_t first_top = pts.size() >= 4 ? pts.size() - 4 : 0;
    for (std::size_t i = first_top; i < pts.size(); ++i) {
        if (p > 0.0 && std::abs(pts[i].p_hat - p) > band * p) ok = false;
        if (q > 0.0 && std::abs(pts[i].q_hat - q) > band * q) ok = false;
        if (q == 0.0 && pts[i].q_hat > band * p) ok = false;
    }
    rep.pass = ok;
    return rep;
}

}  // namespace renlab
