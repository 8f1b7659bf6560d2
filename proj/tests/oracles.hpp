#pragma once

// Independent reference evaluations used by the tests. Nothing here touches
// the quadrature grid: triple products of Fourier modes are integrated
// exactly by expanding cos/sin into complex exponentials.

#include "lans/spectral_basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using lans::BasisPtr;
using lans::Parity;
using lans::SpectralField;
using lans::WaveVector;

/// A trigonometric factor cos(theta) or sin(theta), theta = 2 pi k.x / L.
struct Trig {
    WaveVector k;
    bool is_sin = false;
    double scale = 1.0;
};

/// Integral over [0, L]^2 of the product of three trig factors.
inline double triple_integral(const Trig& a, const Trig& b, const Trig& c, double L) {
    using cplx = std::complex<double>;
    const Trig* f[3] = {&a, &b, &c};
    cplx total = 0.0;
    for (int s = 0; s < 8; ++s) {
        cplx coeff = 1.0;
        int n1 = 0;
        int n2 = 0;
        for (int i = 0; i < 3; ++i) {
            const int sign = (s >> i) & 1 ? -1 : 1;
            // cos = (e^{i t} + e^{-i t}) / 2, sin = (e^{i t} - e^{-i t}) / (2 i)
            if (f[i]->is_sin)
                coeff *= (sign > 0 ? cplx(0.0, -0.5) : cplx(0.0, 0.5));
            else
                coeff *= 0.5;
            n1 += sign * f[i]->k.k1;
            n2 += sign * f[i]->k.k2;
        }
        if (n1 == 0 && n2 == 0)
            total += coeff;
    }
    return total.real() * L * L * a.scale * b.scale * c.scale;
}

/// Derivative of the mode profile: d/dtheta cos = -sin, d/dtheta sin = cos.
inline Trig derivative(const lans::Mode& m) {
    return m.parity == Parity::Cos ? Trig{m.k, true, -1.0} : Trig{m.k, false, 1.0};
}

inline Trig profile(const lans::Mode& m) { return Trig{m.k, m.parity == Parity::Sin, 1.0}; }

/// Coefficients of -P(u x curl v) by the exact spectral convolution.
inline std::vector<double> b_tilde(const SpectralField& u, const SpectralField& v) {
    const auto& basis = u.basis();
    const std::size_t n = basis.size();
    const double L = basis.L();
    const double a = std::sqrt(2.0) / L;
    auto pol = [&](std::size_t j) {
        const WaveVector k = basis.mode(j).k;
        const double norm = std::sqrt(static_cast<double>(k.norm2()));
        return std::array<double, 2>{-k.k2 / norm, k.k1 / norm};
    };
    std::vector<double> out(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        const auto pl = pol(l);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (u[i] == 0.0)
                continue;
            const auto pi = pol(i);
            const double cross = pi[0] * pl[1] - pi[1] * pl[0];
            if (cross == 0.0)
                continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (v[j] == 0.0)
                    continue;
                const double kj = std::sqrt(static_cast<double>(basis.mode(j).k.norm2()));
                const double curl_amp = a * 2.0 * std::numbers::pi * kj / L;
                const double I = triple_integral(derivative(basis.mode(j)), profile(basis.mode(i)),
                                                 profile(basis.mode(l)), L);
                // g = (-omega u2, omega u1), <g, e_l> = int omega (u1 e_l2 - u2 e_l1)
                acc += u[i] * v[j] * curl_amp * a * a * cross * I;
            }
        }
        out[l] = acc;
    }
    return out;
}

inline SpectralField random_field(const BasisPtr& basis, std::mt19937_64& gen, double scale = 1.0) {
    std::normal_distribution<double> normal;
    SpectralField u(basis);
    for (std::size_t j = 0; j < u.size(); ++j)
        u[j] = scale * normal(gen);
    return u;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace oracle
