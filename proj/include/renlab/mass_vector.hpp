#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "renlab/numeric.hpp"

namespace renlab {

struct Window {
    std::int64_t lo;
    std::int64_t hi;
    [[nodiscard]] std::int64_t length() const noexcept { return hi - lo + 1; }
};

/// A (sub-)probability mass vector over a lattice window. `leakage` is the
/// mass lost to window truncation so far; `clip_ledger` accumulates the
/// magnitude of negative values clipped after inverse transforms.
struct MassVector {
    std::int64_t lo = 0;
    std::vector<double> v;
    double leakage = 0.0;
    double clip_ledger = 0.0;
    double span = 1.0;

    [[nodiscard]] std::int64_t hi() const noexcept {
        return lo + static_cast<std::int64_t>(v.size()) - 1;
    }

    [[nodiscard]] double at(std::int64_t x) const noexcept {
        if (x < lo || x > hi()) return 0.0;
        return v[static_cast<std::size_t>(x - lo)];
    }

    [[nodiscard]] double total() const noexcept { return stable_sum(v); }

    /// sum of values at lattice points < x (exact within the window).
    [[nodiscard]] double mass_below(std::int64_t x) const noexcept {
        KahanSum s;
        const std::int64_t stop = std::min(x, hi() + 1);
        for (std::int64_t j = lo; j < stop; ++j) s.add(v[static_cast<std::size_t>(j - lo)]);
        return s.value();
    }

    static MassVector delta(std::int64_t x, double span = 1.0) {
        MassVector m;
        m.lo = x;
        m.v = {1.0};
        m.span = span;
        return m;
    }
};

}  // namespace renlab
