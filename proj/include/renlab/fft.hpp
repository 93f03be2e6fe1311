#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "renlab/numeric.hpp"

namespace renlab::fft {

using cplx = std::complex<double>;

inline std::size_t next_pow2(std::size_t n) noexcept {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {

/// Twiddle table for size n: tw[k] = exp(-2*pi*i*k/n), k in [0, n/2).
/// Cached per thread; scans reuse a handful of sizes thousands of times.
inline const std::vector<cplx>& twiddles(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::vector<cplx>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> tw(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        tw[k] = cplx(std::cos(ang), std::sin(ang));
    }
    return cache.emplace(n, std::move(tw)).first->second;
}

inline void bit_reverse(std::vector<cplx>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
}

}  // namespace detail

/// In-place radix-2 transform; `a.size()` must be a power of two.
inline void transform(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    if ((n & (n - 1)) != 0) throw DomainError("fft: size must be a power of two");
    detail::bit_reverse(a);
    const auto& tw = detail::twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                cplx w = tw[j * step];
                if (inverse) w = std::conj(w);
                const cplx u = a[i + j];
                const cplx v = a[i + j + half] * w;
                a[i + j] = u + v;
                a[i + j + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double s = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= s;
    }
}

/// Real forward transform of length n (power of two, n >= 2) via a
/// half-size complex transform. Returns n/2 + 1 bins.
inline std::vector<cplx> rfft(const std::vector<double>& x, std::size_t n) {
    if ((n & (n - 1)) != 0 || n < 2) throw DomainError("rfft: size must be a power of two >= 2");
    const std::size_t h = n / 2;
    std::vector<cplx> z(h);
    for (std::size_t j = 0; j < h; ++j) {
        const double re = 2 * j < x.size() ? x[2 * j] : 0.0;
        const double im = 2 * j + 1 < x.size() ? x[2 * j + 1] : 0.0;
        z[j] = cplx(re, im);
    }
    transform(z, false);
    std::vector<cplx> spec(h + 1);
    const auto& tw = detail::twiddles(n);
    for (std::size_t k = 0; k <= h; ++k) {
        const cplx zk = (k == h) ? z[0] : z[k];
        const cplx zc = std::conj((k == 0) ? z[0] : z[h - k]);
        const cplx even = 0.5 * (zk + zc);
        const cplx odd = 0.5 * (zk - zc);
        const cplx w = (k == h) ? cplx(-1.0, 0.0) : tw[k];
        spec[k] = even + cplx(0, -1) * w * odd;
    }
    return spec;
}

/// Inverse of rfft: n/2 + 1 bins back to n real samples.
inline std::vector<double> irfft(const std::vector<cplx>& spec, std::size_t n) {
    if ((n & (n - 1)) != 0 || n < 2) throw DomainError("irfft: size must be a power of two >= 2");
    const std::size_t h = n / 2;
    if (spec.size() != h + 1) throw DomainError("irfft: spectrum size mismatch");
    std::vector<cplx> z(h);
    const auto& tw = detail::twiddles(n);
    for (std::size_t k = 0; k < h; ++k) {
        const cplx xk = spec[k];
        const cplx xc = std::conj(spec[h - k]);
        const cplx even = 0.5 * (xk + xc);
        const cplx odd = 0.5 * (xk - xc);
        const cplx w = std::conj(tw[k]);
        z[k] = even + cplx(0, 1) * w * odd;
    }
    transform(z, true);
    std::vector<double> x(n);
    for (std::size_t j = 0; j < h; ++j) {
        x[2 * j] = z[j].real();
        x[2 * j + 1] = z[j].imag();
    }
    return x;
}

/// Plain O(la*lb) convolution; the oracle for the transform path and the
/// fast path below the crossover length.
inline std::vector<double> convolve_direct(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
    }
    return out;
}

inline constexpr std::size_t kDirectCrossover = 96;

/// Cached spectrum of one operand, for repeated convolutions against it.
struct PlannedFactor {
    std::size_t fft_size = 0;
    std::size_t len = 0;
    std::vector<cplx> spec;
};

inline PlannedFactor plan_factor(const std::vector<double>& b, std::size_t out_len) {
    PlannedFactor p;
    p.len = b.size();
    p.fft_size = next_pow2(std::max<std::size_t>(out_len, 2));
    p.spec = rfft(b, p.fft_size);
    return p;
}

inline std::vector<double> convolve_with(const std::vector<double>& a, const PlannedFactor& b,
                                         std::size_t out_len) {
    auto sa = rfft(a, b.fft_size);
    for (std::size_t k = 0; k < sa.size(); ++k) sa[k] *= b.spec[k];
    auto full = irfft(sa, b.fft_size);
    full.resize(out_len);
    return full;
}

inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    if (std::min(a.size(), b.size()) <= kDirectCrossover) {
        return convolve_direct(a, b);
    }
    const auto plan = plan_factor(b, out_len);
    return convolve_with(a, plan, out_len);
}

}  // namespace renlab::fft
