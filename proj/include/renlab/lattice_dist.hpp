#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "renlab/numeric.hpp"
#include "renlab/tail_model.hpp"

namespace renlab {

enum class Provenance {
    baseline_pos,
    baseline_two_sided,
    spiky,
    counter_renewal,
    two_sided_counter,
    custom,
};

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::baseline_pos: return "baseline_pos";
        case Provenance::baseline_two_sided: return "baseline_two_sided";
        case Provenance::spiky: return "spiky";
        case Provenance::counter_renewal: return "counter_renewal";
        case Provenance::two_sided_counter: return "two_sided_counter";
        case Provenance::custom: return "custom";
    }
    return "custom";
}

inline Provenance provenance_from_string(const std::string& s) {
    if (s == "baseline_pos") return Provenance::baseline_pos;
    if (s == "baseline_two_sided") return Provenance::baseline_two_sided;
    if (s == "spiky") return Provenance::spiky;
    if (s == "counter_renewal") return Provenance::counter_renewal;
    if (s == "two_sided_counter") return Provenance::two_sided_counter;
    if (s == "custom") return Provenance::custom;
    throw DomainError("unknown provenance tag '" + s + "'");
}

struct TailMeta {
    double alpha;
    double p;
    double q;
    TailModel model;
};

/// A step distribution on the lattice h*Z with a finite window of support.
/// Masses are indexed in lattice units (integers); `span` is the physical h.
///
/// Tail mass the window cannot hold is folded into far atoms at the window
/// ends and reported as truncation mass. Tail sums keep those atoms (they
/// stand for the true mass beyond the window); local-probability consumers
/// use step_mass(), which removes them.
///
/// Instances are immutable after construction and safe to share across
/// threads.
class LatticeDist {
public:
    LatticeDist(std::int64_t lo, std::vector<double> mass, TailMeta meta,
                Provenance prov = Provenance::custom, double span = 1.0,
                double trunc_right = 0.0, double trunc_left = 0.0,
                nlohmann::ordered_json constants = {})
        : lo_(lo),
          mass_(std::move(mass)),
          meta_(std::move(meta)),
          prov_(prov),
          span_(span),
          trunc_right_(trunc_right),
          trunc_left_(trunc_left),
          constants_(std::move(constants)) {
        if (mass_.empty()) throw ConstructionError("LatticeDist: empty mass vector");
        if (span_ <= 0.0) throw ConstructionError("LatticeDist: span must be positive");
        if (trunc_right_ < 0.0 || trunc_left_ < 0.0) throw ConstructionError("LatticeDist: negative truncation mass");
        validate_and_index();
    }

    [[nodiscard]] std::int64_t lo() const noexcept { return lo_; }
    [[nodiscard]] std::int64_t hi() const noexcept { return lo_ + static_cast<std::int64_t>(mass_.size()) - 1; }
    [[nodiscard]] double span() const noexcept { return span_; }
    [[nodiscard]] const TailMeta& tail_meta() const noexcept { return meta_; }
    [[nodiscard]] const TailModel& model() const noexcept { return meta_.model; }
    [[nodiscard]] Provenance provenance() const noexcept { return prov_; }
    [[nodiscard]] double truncation_mass() const noexcept { return trunc_left_ + trunc_right_; }
    [[nodiscard]] double truncation_mass_right() const noexcept { return trunc_right_; }
    [[nodiscard]] double truncation_mass_left() const noexcept { return trunc_left_; }
    [[nodiscard]] const nlohmann::ordered_json& constants() const noexcept { return constants_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return mass_; }

    /// Raw mass at lattice point x (0 outside the window).
    [[nodiscard]] double mass(std::int64_t x) const noexcept {
        if (x < lo() || x > hi()) return 0.0;
        return mass_[static_cast<std::size_t>(x - lo_)];
    }

    /// Mass at x with the truncation atoms removed: the value to use for
    /// local probabilities F({x}).
    [[nodiscard]] double step_mass(std::int64_t x) const noexcept {
        double m = mass(x);
        if (trunc_right_ > 0.0 && x == hi()) m -= trunc_right_;
        if (trunc_left_ > 0.0 && x == lo()) m -= trunc_left_;
        return m < 0.0 ? 0.0 : m;
    }

    /// F((x, +inf)), truncation atom included.
    [[nodiscard]] double upper_tail(std::int64_t x) const noexcept {
        if (x >= hi()) return 0.0;
        if (x < lo()) return total_;
        return suffix_[static_cast<std::size_t>(x - lo_) + 1];
    }

    /// F((-inf, -x]): the left tail at level x.
    [[nodiscard]] double lower_tail(std::int64_t x) const noexcept {
        const std::int64_t y = -x;
        if (y < lo()) return 0.0;
        if (y >= hi()) return total_;
        return total_ - suffix_[static_cast<std::size_t>(y - lo_) + 1];
    }

    /// F((a, b]) from cached cumulative sums (fast; accurate to ~eps of the
    /// total). Functionals that need full relative accuracy accumulate atoms
    /// directly instead.
    [[nodiscard]] double range_mass(std::int64_t a, std::int64_t b) const noexcept {
        if (b <= a) return 0.0;
        return upper_tail(a) - upper_tail(b);
    }

    [[nodiscard]] double total_mass() const noexcept { return total_; }

    [[nodiscard]] std::int64_t support_gcd() const noexcept { return gcd_; }

    [[nodiscard]] LatticeDist reflected() const {
        std::vector<double> rev(mass_.rbegin(), mass_.rend());
        TailMeta m = meta_;
        std::swap(m.p, m.q);
        return LatticeDist(-hi(), std::move(rev), std::move(m), prov_, span_, trunc_left_,
                           trunc_right_, constants_);
    }

    /// max |x| reachable in n steps (window arithmetic for engines).
    [[nodiscard]] std::int64_t reach(int n) const noexcept {
        return static_cast<std::int64_t>(n) * std::max(std::abs(lo()), std::abs(hi()));
    }

private:
    void validate_and_index() {
        KahanSum sum;
        gcd_ = 0;
        for (std::size_t i = 0; i < mass_.size(); ++i) {
            const double m = mass_[i];
            if (m < 0.0) throw ConstructionError("LatticeDist: negative mass at offset " + std::to_string(lo_ + static_cast<std::int64_t>(i)));
            if (m > 0.0) {
                sum.add(m);
                const std::int64_t x = lo_ + static_cast<std::int64_t>(i);
                gcd_ = std::gcd(gcd_, std::abs(x));
            }
        }
        total_ = sum.value();
        if (std::abs(total_ - 1.0) > 1e-12) {
            throw ConstructionError("LatticeDist: masses sum to " + std::to_string(total_) + ", expected 1 within 1e-12");
        }
        if (gcd_ != 1) {
            throw ConstructionError("LatticeDist: support gcd is " + std::to_string(gcd_) + ", span metadata would be wrong");
        }
        // suffix_[i] = sum of masses at indices >= i, built from the top so
        // every tail value is a sum of positives.
        suffix_.assign(mass_.size() + 1, 0.0);
        KahanSum tail;
        for (std::size_t i = mass_.size(); i-- > 0;) {
            tail.add(mass_[i]);
            suffix_[i] = tail.value();
        }
    }

    std::int64_t lo_;
    std::vector<double> mass_;
    TailMeta meta_;
    Provenance prov_;
    double span_;
    double trunc_right_;
    double trunc_left_;
    nlohmann::ordered_json constants_;

    double total_ = 0.0;
    std::int64_t gcd_ = 1;
    std::vector<double> suffix_;
};

}  // namespace renlab
