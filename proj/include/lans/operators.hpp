#pragma once

#include "lans/spectral_basis.hpp"

namespace lans {

struct PhysicalParams {
    double nu = 1.0;    // viscosity
    double alpha = 0.0; // filter length; 0 gives plain Navier-Stokes
    double L = 1.0;     // box side
};

enum class HelmholtzMode { Apply, Solve };

/// A u: coefficient-wise multiplication by lambda_j.
SpectralField apply_stokes(const SpectralField& u);

/// (I + alpha^2 A) u, or its inverse applied to u.
SpectralField helmholtz(const SpectralField& u, double alpha, HelmholtzMode mode);

/// b(u, v, w) = <(u . grad) v, w>, exact by collocation on the M = 4N grid.
double b_form(const SpectralField& u, const SpectralField& v, const SpectralField& w);

/// Truncated B~(u, v) = -P_n (u x curl v). In 2D, u x curl v = (omega u2, -omega u1)
/// with omega = d1 v2 - d2 v1.
SpectralField b_tilde(const SpectralField& u, const SpectralField& v);

/// Same operator through -P[(grad v - grad v^T) u] with (grad v)_{ij} = d_i v_j.
/// Kept as an independent evaluation route for cross-checks.
SpectralField b_tilde_matrix(const SpectralField& u, const SpectralField& v);

/// Full right-hand side of the Galerkin system:
///   -nu A u - (I + alpha^2 A)^{-1} B~(u, u + alpha^2 A u).
SpectralField drift(const SpectralField& u, const PhysicalParams& p);

/// drift(u) + nu A u.
SpectralField nonlinear_term(const SpectralField& u, const PhysicalParams& p);

/// Derivative of drift at u in direction eta:
///   -nu A eta - (I + alpha^2 A)^{-1}[B~(eta, u + alpha^2 A u) + B~(u, eta + alpha^2 A eta)].
SpectralField linearized_drift(const SpectralField& u, const SpectralField& eta,
                               const PhysicalParams& p);

/// linearized_drift + nu A eta.
SpectralField linearized_nonlinear_term(const SpectralField& u, const SpectralField& eta,
                                        const PhysicalParams& p);

/// F(u) = |u|_2^2 + alpha^2 |grad u|_2^2.
double energy_functional(const SpectralField& u, double alpha);

/// |grad u|_2^2 + alpha^2 |A u|_2^2.
double dissipation(const SpectralField& u, double alpha);

} // namespace lans
