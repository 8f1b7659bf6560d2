#include "lans/operators.hpp"

#include <stdexcept>

namespace lans {

SpectralField apply_stokes(const SpectralField& u) {
    SpectralField out = u;
    const auto lambda = u.basis().eigenvalues();
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] *= lambda[j];
    return out;
}

SpectralField helmholtz(const SpectralField& u, double alpha, HelmholtzMode mode) {
    SpectralField out = u;
    const auto lambda = u.basis().eigenvalues();
    const double a2 = alpha * alpha;
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double factor = 1.0 + a2 * lambda[j];
        if (mode == HelmholtzMode::Apply)
            out[j] *= factor;
        else
            out[j] /= factor;
    }
    return out;
}

double b_form(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
    require_same_basis(u, v, "b_form");
    require_same_basis(u, w, "b_form");
    const GridVectorField ug = eval_on_grid(u);
    const GridVectorField wg = eval_on_grid(w);
    const GridGradient dv = gradient_on_grid(v);
    const std::size_t P = ug.x.size();
    double acc = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
        const double conv0 = ug.x[p] * dv.d[0][0][p] + ug.y[p] * dv.d[1][0][p];
        const double conv1 = ug.x[p] * dv.d[0][1][p] + ug.y[p] * dv.d[1][1][p];
        acc += conv0 * wg.x[p] + conv1 * wg.y[p];
    }
    return acc * u.basis().grid().weight;
}

SpectralField b_tilde(const SpectralField& u, const SpectralField& v) {
    require_same_basis(u, v, "b_tilde");
    GridVectorField g = eval_on_grid(u);
    const std::vector<double> omega = vorticity_on_grid(v);
    for (std::size_t p = 0; p < omega.size(); ++p) {
        const double u1 = g.x[p];
        const double u2 = g.y[p];
        g.x[p] = -omega[p] * u2;
        g.y[p] = omega[p] * u1;
    }
    return leray_project(g, u.basis_ptr());
}

SpectralField b_tilde_matrix(const SpectralField& u, const SpectralField& v) {
    require_same_basis(u, v, "b_tilde_matrix");
    GridVectorField g = eval_on_grid(u);
    const GridGradient dv = gradient_on_grid(v);
    for (std::size_t p = 0; p < g.x.size(); ++p) {
        const double u1 = g.x[p];
        const double u2 = g.y[p];
        // S = grad v - grad v^T, S_ij = d_i v_j - d_j v_i
        const double s01 = dv.d[0][1][p] - dv.d[1][0][p];
        g.x[p] = -(s01 * u2);
        g.y[p] = -(-s01 * u1);
    }
    return leray_project(g, u.basis_ptr());
}

SpectralField nonlinear_term(const SpectralField& u, const PhysicalParams& p) {
    SpectralField target = u;
    if (p.alpha != 0.0)
        target += apply_stokes(u) * (p.alpha * p.alpha);
    return -helmholtz(b_tilde(u, target), p.alpha, HelmholtzMode::Solve);
}

SpectralField drift(const SpectralField& u, const PhysicalParams& p) {
    SpectralField out = nonlinear_term(u, p);
    out -= apply_stokes(u) * p.nu;
    return out;
}

SpectralField linearized_nonlinear_term(const SpectralField& u, const SpectralField& eta,
                                        const PhysicalParams& p) {
    require_same_basis(u, eta, "linearized_drift");
    const double a2 = p.alpha * p.alpha;
    SpectralField u_target = u;
    SpectralField eta_target = eta;
    if (a2 != 0.0) {
        u_target += apply_stokes(u) * a2;
        eta_target += apply_stokes(eta) * a2;
    }
    SpectralField sum = b_tilde(eta, u_target);
    sum += b_tilde(u, eta_target);
    return -helmholtz(sum, p.alpha, HelmholtzMode::Solve);
}

SpectralField linearized_drift(const SpectralField& u, const SpectralField& eta,
                               const PhysicalParams& p) {
    SpectralField out = linearized_nonlinear_term(u, eta, p);
    out -= apply_stokes(eta) * p.nu;
    return out;
}

double energy_functional(const SpectralField& u, double alpha) {
    const auto lambda = u.basis().eigenvalues();
    const double a2 = alpha * alpha;
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j)
        acc += (1.0 + a2 * lambda[j]) * u[j] * u[j];
    return acc;
}

double dissipation(const SpectralField& u, double alpha) {
    const auto lambda = u.basis().eigenvalues();
    const double a2 = alpha * alpha;
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j)
        acc += lambda[j] * (1.0 + a2 * lambda[j]) * u[j] * u[j];
    return acc;
}

} // namespace lans
