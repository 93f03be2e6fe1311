#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "renlab/numeric.hpp"

namespace renlab {

enum class SlowVariation { constant, log_power, tabulated };

/// The reciprocal tail scale A of a step law: A is continuous, strictly
/// increasing, regularly varying with index alpha, pinned to A(0) = 1/2 and
/// A(1) = 1. On [0,1] it interpolates linearly between the two anchors.
///
/// Families:
///   constant   A(x) = x^alpha                              (x >= 1)
///   log_power  A(x) = x^alpha * (log(e+x)/log(e+1))^beta   (x >= 1)
///   tabulated  monotone cubic through (log x, log A) nodes, power-law
///              continuation past the last node (experimental)
class TailModel {
public:
    static TailModel pure_power(double alpha) { return TailModel(alpha, SlowVariation::constant, 0.0, {}); }

    static TailModel log_corrected(double alpha, double beta) {
        return TailModel(alpha, SlowVariation::log_power, beta, {});
    }

    /// nodes: (x, A(x)) pairs with x >= 1 strictly increasing; values are
    /// rescaled so that A(1) = 1.
    static TailModel tabulated(double alpha, std::vector<std::pair<double, double>> nodes) {
        return TailModel(alpha, SlowVariation::tabulated, 0.0, std::move(nodes));
    }

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] SlowVariation family() const noexcept { return family_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }

    [[nodiscard]] double operator()(double x) const { return eval(x); }

    [[nodiscard]] double eval(double x) const {
        if (x < 0.0) throw DomainError("TailModel: A(x) requires x >= 0");
        if (x <= 1.0) return 0.5 * (1.0 + x);
        switch (family_) {
            case SlowVariation::constant:
                return std::pow(x, alpha_);
            case SlowVariation::log_power:
                return std::pow(x, alpha_) * std::pow(std::log(std::numbers::e + x) / log_e1_, beta_);
            case SlowVariation::tabulated:
                return eval_table(x);
        }
        return 0.0;
    }

    /// a_u = A^{-1}(u) for u >= 1/2; closed form for the pure power family,
    /// bisection otherwise. Residual |A(a_u) - u| / u <= 1e-10.
    [[nodiscard]] double inverse(double u) const {
        if (u < 0.5) throw DomainError("TailModel: inverse requires u >= 1/2");
        if (u <= 1.0) return 2.0 * u - 1.0;
        if (family_ == SlowVariation::constant) return std::pow(u, 1.0 / alpha_);
        double lo = 1.0, hi = 2.0;
        while (eval(hi) < u) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) throw DomainError("TailModel: inverse target out of range");
        }
        for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (eval(mid) < u ? lo : hi) = mid;
        }
        const double r = 0.5 * (lo + hi);
        if (std::abs(eval(r) - u) > 1e-10 * u) {
            throw InvariantError("TailModel: inverse residual exceeds 1e-10");
        }
        return r;
    }

    /// Norming sequence a_n = A^{-1}(n).
    [[nodiscard]] double norming(double n) const { return inverse(n); }

    [[nodiscard]] nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["alpha"] = alpha_;
        switch (family_) {
            case SlowVariation::constant: j["family"] = "constant"; break;
            case SlowVariation::log_power:
                j["family"] = "log_power";
                j["beta"] = beta_;
                break;
            case SlowVariation::tabulated: {
                j["family"] = "table";
                auto arr = nlohmann::ordered_json::array();
                for (const auto& [x, a] : nodes_) arr.push_back({x, a});
                j["table"] = std::move(arr);
                break;
            }
        }
        return j;
    }

    static TailModel from_json(const nlohmann::json& j) {
        const double alpha = j.at("alpha").get<double>();
        const std::string fam = j.value("family", "constant");
        if (fam == "constant") return pure_power(alpha);
        if (fam == "log_power") return log_corrected(alpha, j.at("beta").get<double>());
        if (fam == "table") {
            std::vector<std::pair<double, double>> nodes;
            for (const auto& e : j.at("table")) nodes.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
            return tabulated(alpha, std::move(nodes));
        }
        throw DomainError("TailModel: unknown family '" + fam + "'");
    }

private:
    TailModel(double alpha, SlowVariation family, double beta,
              std::vector<std::pair<double, double>> nodes)
        : alpha_(alpha), family_(family), beta_(beta), nodes_(std::move(nodes)) {
        const bool ok_range = (alpha > 0.0 && alpha < 1.0) || (alpha > 1.0 && alpha < 2.0);
        if (!ok_range) throw DomainError("TailModel: alpha must lie in (0,1) or (1,2)");
        log_e1_ = std::log(std::numbers::e + 1.0);
        if (family_ == SlowVariation::log_power) check_log_power_monotone();
        if (family_ == SlowVariation::tabulated) prepare_table();
    }

    void check_log_power_monotone() const {
        if (beta_ >= 0.0) return;
        // d/dx log A = alpha/x + beta / ((e+x) log(e+x)); the second term's
        // worst case over x >= 1 is about -0.318*|beta| at x ~ 6.
        for (double x = 1.0; x < 1e9; x *= 1.25) {
            const double d = alpha_ / x + beta_ / ((std::numbers::e + x) * std::log(std::numbers::e + x));
            if (d <= 0.0) throw ConstructionError("TailModel: log_power family not increasing (alpha too small for beta)");
        }
    }

    void prepare_table() {
        if (nodes_.size() < 2) throw ConstructionError("TailModel: table needs at least 2 nodes");
        if (std::abs(nodes_.front().first - 1.0) > 1e-12) {
            throw ConstructionError("TailModel: first table node must be at x = 1");
        }
        const double scale = nodes_.front().second;
        lx_.clear();
        la_.clear();
        for (auto& [x, a] : nodes_) {
            a /= scale;
            if (!lx_.empty() && (std::log(x) <= lx_.back() || std::log(a) <= la_.back())) {
                throw ConstructionError("TailModel: table nodes must be strictly increasing in x and A");
            }
            lx_.push_back(std::log(x));
            la_.push_back(std::log(a));
        }
        // Fritsch-Carlson slopes for a monotone cubic in log-log space.
        const std::size_t n = lx_.size();
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (la_[i + 1] - la_[i]) / (lx_[i + 1] - lx_[i]);
        slope_.assign(n, 0.0);
        slope_[0] = d[0];
        slope_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            slope_[i] = (d[i - 1] + d[i]) > 0 ? 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]) : 0.0;
        }
    }

    [[nodiscard]] double eval_table(double x) const {
        const double t = std::log(x);
        if (t >= lx_.back()) {
            // power-law continuation with the terminal slope
            return std::exp(la_.back() + slope_.back() * (t - lx_.back()));
        }
        auto it = std::upper_bound(lx_.begin(), lx_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - lx_.begin()) - 1;
        const double h = lx_[i + 1] - lx_[i];
        const double s = (t - lx_[i]) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        const double v = h00 * la_[i] + h10 * h * slope_[i] + h01 * la_[i + 1] + h11 * h * slope_[i + 1];
        return std::exp(v);
    }

    double alpha_;
    SlowVariation family_;
    double beta_;
    std::vector<std::pair<double, double>> nodes_;
    std::vector<double> lx_, la_, slope_;
    double log_e1_ = 0.0;
};

}  // namespace renlab
