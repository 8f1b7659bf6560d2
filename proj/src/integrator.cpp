#include "lans/integrator.hpp"

#include "lans/errors.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lans {

namespace {

SpectralField nonlinear_part(const SpectralField& u, const PhysicalParams& p,
                             const IntegratorConfig& cfg) {
    return cfg.nonlinear ? nonlinear_term(u, p) : SpectralField(u.basis_ptr());
}

SpectralField linearized_part(const SpectralField& u, const SpectralField& eta,
                              const PhysicalParams& p, const IntegratorConfig& cfg) {
    return cfg.nonlinear ? linearized_nonlinear_term(u, eta, p) : SpectralField(u.basis_ptr());
}

SpectralField full_drift(const SpectralField& u, const PhysicalParams& p,
                         const IntegratorConfig& cfg) {
    SpectralField out = nonlinear_part(u, p, cfg);
    out -= apply_stokes(u) * p.nu;
    return out;
}

SpectralField full_linearized(const SpectralField& u, const SpectralField& eta,
                              const PhysicalParams& p, const IntegratorConfig& cfg) {
    SpectralField out = linearized_part(u, eta, p, cfg);
    out -= apply_stokes(eta) * p.nu;
    return out;
}

// Linear-implicit or exponential update of `state` with explicit forcing `forcing`.
SpectralField linear_update(const SpectralField& state, const SpectralField& forcing,
                            const PhysicalParams& p, const IntegratorConfig& cfg) {
    SpectralField out = state;
    const auto lambda = state.basis().eigenvalues();
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (cfg.scheme == Scheme::ExponentialEM) {
            const double z = -p.nu * lambda[j] * cfg.dt;
            out[j] = std::exp(z) * state[j] + phi1(z) * cfg.dt * forcing[j];
        } else {
            out[j] = (state[j] + cfg.dt * forcing[j]) / (1.0 + cfg.dt * p.nu * lambda[j]);
        }
    }
    return out;
}

void check_finite(const SpectralField& u, double t) {
    if (!u.all_finite()) {
        std::ostringstream msg;
        msg << "integrate: non-finite coefficient at t = " << t;
        throw BlowUpError(t, msg.str());
    }
}

} // namespace

double phi1(double z) {
    if (std::abs(z) < 1e-6)
        return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
}

BrownianSource::BrownianSource(RngStream& rng, double dt, int substeps)
    : rng_(&rng), fine_scale_(0.0), substeps_(substeps) {
    if (!(dt > 0.0))
        throw std::invalid_argument("BrownianSource: dt must be positive");
    if (substeps < 1)
        throw std::invalid_argument("BrownianSource: substeps must be at least 1");
    fine_scale_ = std::sqrt(dt / substeps);
}

void BrownianSource::next(std::span<double> dB) {
    for (double& x : dB)
        x = 0.0;
    for (int s = 0; s < substeps_; ++s)
        for (double& x : dB)
            x += rng_->normal();
    for (double& x : dB)
        x *= fine_scale_;
}

std::string to_string(Scheme scheme) {
    switch (scheme) {
    case Scheme::SemiImplicitEM:
        return "semi_implicit_em";
    case Scheme::ExponentialEM:
        return "exponential_em";
    case Scheme::RK4Deterministic:
        return "rk4_deterministic";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "semi_implicit_em")
        return Scheme::SemiImplicitEM;
    if (name == "exponential_em")
        return Scheme::ExponentialEM;
    if (name == "rk4_deterministic")
        return Scheme::RK4Deterministic;
    throw std::invalid_argument("unknown scheme '" + name + "'");
}

std::size_t IntegratorConfig::step_count() const {
    return static_cast<std::size_t>(std::llround(t_end / dt));
}

void validate(const IntegratorConfig& cfg, const NoiseSpec& spec) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
        throw std::invalid_argument("integrator: dt must be positive");
    if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end))
        throw std::invalid_argument("integrator: t_end must be non-negative");
    if (cfg.t_end > 0.0 && cfg.dt > cfg.t_end)
        throw std::invalid_argument("integrator: dt exceeds t_end");
    if (cfg.record_every < 1)
        throw std::invalid_argument("integrator: record_every must be at least 1");
    const double steps = cfg.t_end / cfg.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw std::invalid_argument("integrator: t_end is not a whole number of steps");
    if (cfg.scheme == Scheme::RK4Deterministic && spec.sigma != 0.0)
        throw std::invalid_argument("integrator: rk4_deterministic requires sigma = 0");
}

std::vector<double> injected_increment(const PhysicalParams& p, const NoiseSpec& spec,
                                       const IntegratorConfig& cfg, std::span<const double> dB) {
    std::vector<double> out(dB.begin(), dB.end());
    if (cfg.scheme == Scheme::ExponentialEM) {
        const auto lambda = spec.basis->eigenvalues();
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] *= std::sqrt(phi1(-2.0 * p.nu * lambda[j] * cfg.dt));
    }
    return out;
}

SpectralField step_with_increment(const SpectralField& u, const PhysicalParams& p,
                                  const NoiseSpec& spec, const IntegratorConfig& cfg,
                                  std::span<const double> dB) {
    if (!u.basis().same_as(*spec.basis))
        throw std::invalid_argument("step: state and noise live on different bases");
    if (cfg.scheme == Scheme::RK4Deterministic) {
        if (spec.sigma != 0.0)
            throw std::invalid_argument("step: rk4_deterministic requires sigma = 0");
        const double dt = cfg.dt;
        const SpectralField k1 = full_drift(u, p, cfg);
        const SpectralField k2 = full_drift(u + k1 * (dt / 2.0), p, cfg);
        const SpectralField k3 = full_drift(u + k2 * (dt / 2.0), p, cfg);
        const SpectralField k4 = full_drift(u + k3 * dt, p, cfg);
        return u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    if (dB.size() != u.size())
        throw std::invalid_argument("step: increment size does not match basis");

    const SpectralField forcing = nonlinear_part(u, p, cfg);
    const auto lambda = u.basis().eigenvalues();
    SpectralField out(u.basis_ptr());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double qj = spec.q[j];
        if (cfg.scheme == Scheme::ExponentialEM) {
            const double z = -p.nu * lambda[j] * cfg.dt;
            const double conv_std = std::sqrt(phi1(2.0 * z));
            out[j] = std::exp(z) * u[j] + phi1(z) * cfg.dt * forcing[j] + qj * conv_std * dB[j];
        } else {
            out[j] = (u[j] + cfg.dt * forcing[j] + qj * dB[j]) / (1.0 + cfg.dt * p.nu * lambda[j]);
        }
    }
    return out;
}

SpectralField step(const SpectralField& u, const PhysicalParams& p, const NoiseSpec& spec,
                   const IntegratorConfig& cfg, RngStream& rng) {
    if (cfg.scheme == Scheme::RK4Deterministic)
        return step_with_increment(u, p, spec, cfg, {});
    std::vector<double> dB(u.size());
    rng.fill_normal(dB);
    const double sdt = std::sqrt(cfg.dt);
    for (double& x : dB)
        x *= sdt;
    return step_with_increment(u, p, spec, cfg, dB);
}

SpectralField step_variation(const SpectralField& u, const SpectralField& eta,
                             const PhysicalParams& p, const IntegratorConfig& cfg) {
    require_same_basis(u, eta, "step_variation");
    if (cfg.scheme == Scheme::RK4Deterministic) {
        // RK4 on the coupled (u, eta) system; the u stages are recomputed.
        const double dt = cfg.dt;
        const SpectralField ku1 = full_drift(u, p, cfg);
        const SpectralField ke1 = full_linearized(u, eta, p, cfg);
        const SpectralField u2 = u + ku1 * (dt / 2.0);
        const SpectralField e2 = eta + ke1 * (dt / 2.0);
        const SpectralField ku2 = full_drift(u2, p, cfg);
        const SpectralField ke2 = full_linearized(u2, e2, p, cfg);
        const SpectralField u3 = u + ku2 * (dt / 2.0);
        const SpectralField e3 = eta + ke2 * (dt / 2.0);
        const SpectralField ku3 = full_drift(u3, p, cfg);
        const SpectralField ke3 = full_linearized(u3, e3, p, cfg);
        const SpectralField u4 = u + ku3 * dt;
        const SpectralField e4 = eta + ke3 * dt;
        const SpectralField ke4 = full_linearized(u4, e4, p, cfg);
        return eta + (ke1 + ke2 * 2.0 + ke3 * 2.0 + ke4) * (dt / 6.0);
    }
    return linear_update(eta, linearized_part(u, eta, p, cfg), p, cfg);
}

TrajectoryRecord integrate(const SpectralField& x0, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, RngStream& rng, const Observer& observer) {
    validate(cfg, spec);
    BrownianSource noise(rng, cfg.dt);
    return integrate(x0, p, spec, cfg, noise, observer);
}

TrajectoryRecord integrate(const SpectralField& x0, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, BrownianSource& noise,
                           const Observer& observer) {
    validate(cfg, spec);
    if (!x0.basis().same_as(*spec.basis))
        throw std::invalid_argument("integrate: initial state and noise live on different bases");
    check_finite(x0, 0.0);

    TrajectoryRecord rec;
    const std::size_t steps = cfg.step_count();
    SpectralField u = x0;
    double diss = dissipation(u, p.alpha);
    double diss_integral = 0.0;
    double mart = 0.0;
    rec.F_sup = energy_functional(u, p.alpha);

    auto record = [&](double t) {
        rec.times.push_back(t);
        rec.F_values.push_back(energy_functional(u, p.alpha));
        rec.dissipation_values.push_back(diss);
        rec.dissipation_integral.push_back(diss_integral);
        rec.martingale.push_back(mart);
        if (cfg.keep_snapshots)
            rec.snapshots.push_back(u);
        if (observer)
            observer(t, u);
    };
    record(0.0);

    const bool stochastic = cfg.scheme != Scheme::RK4Deterministic;
    std::vector<double> dB(u.size());
    for (std::size_t m = 0; m < steps; ++m) {
        const double t_next = static_cast<double>(m + 1) * cfg.dt;
        SpectralField next(u.basis_ptr());
        if (stochastic) {
            noise.next(dB);
            next = step_with_increment(u, p, spec, cfg, dB);
            if (spec.sigma != 0.0) {
                const auto dW = injected_increment(p, spec, cfg, dB);
                const SpectralField weighted = helmholtz(u, p.alpha, HelmholtzMode::Apply);
                for (std::size_t j = 0; j < u.size(); ++j)
                    mart += weighted[j] * spec.q[j] * dW[j];
            }
        } else {
            next = step_with_increment(u, p, spec, cfg, {});
        }
        check_finite(next, t_next);
        u = std::move(next);
        const double diss_next = dissipation(u, p.alpha);
        diss_integral += 0.5 * cfg.dt * (diss + diss_next);
        diss = diss_next;
        rec.F_sup = std::max(rec.F_sup, energy_functional(u, p.alpha));
        if ((m + 1) % static_cast<std::size_t>(cfg.record_every) == 0 || m + 1 == steps)
            record(t_next);
    }
    rec.final_state = std::move(u);
    return rec;
}

TrajectoryRecord integrate(const SpectralField& x0, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, const Observer& observer) {
    RngStream rng(spec.seed, 0);
    return integrate(x0, p, spec, cfg, rng, observer);
}

VariationResult integrate_variation(const SpectralField& x0, const SpectralField& h,
                                    const PhysicalParams& p, const NoiseSpec& spec,
                                    const IntegratorConfig& cfg, RngStream& rng) {
    validate(cfg, spec);
    BrownianSource noise(rng, cfg.dt);
    return integrate_variation(x0, h, p, spec, cfg, noise);
}

VariationResult integrate_variation(const SpectralField& x0, const SpectralField& h,
                                    const PhysicalParams& p, const NoiseSpec& spec,
                                    const IntegratorConfig& cfg, BrownianSource& noise) {
    validate(cfg, spec);
    require_same_basis(x0, h, "integrate_variation");
    if (!x0.basis().same_as(*spec.basis))
        throw std::invalid_argument("integrate_variation: state and noise live on different bases");

    VariationResult out{x0, h, 0.0};
    const std::size_t steps = cfg.step_count();
    const bool stochastic = cfg.scheme != Scheme::RK4Deterministic;
    const bool weighted = stochastic && spec.sigma > 0.0;
    std::vector<double> dB(x0.size());
    for (std::size_t m = 0; m < steps; ++m) {
        SpectralField eta_next = step_variation(out.u, out.eta, p, cfg);
        SpectralField u_next(x0.basis_ptr());
        if (stochastic) {
            noise.next(dB);
            if (weighted) {
                const auto dW = injected_increment(p, spec, cfg, dB);
                const SpectralField scaled = q_apply(spec, out.eta, -1);
                for (std::size_t j = 0; j < dW.size(); ++j)
                    out.girsanov_weight += scaled[j] * dW[j];
            }
            u_next = step_with_increment(out.u, p, spec, cfg, dB);
        } else {
            u_next = step_with_increment(out.u, p, spec, cfg, {});
        }
        const double t_next = static_cast<double>(m + 1) * cfg.dt;
        check_finite(u_next, t_next);
        check_finite(eta_next, t_next);
        out.u = std::move(u_next);
        out.eta = std::move(eta_next);
    }
    return out;
}

} // namespace lans
