#pragma once

#include "lans/noise.hpp"
#include "lans/operators.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lans {

enum class Scheme { SemiImplicitEM, ExponentialEM, RK4Deterministic };

std::string to_string(Scheme scheme);
/// Accepts "semi_implicit_em", "exponential_em", "rk4_deterministic".
Scheme parse_scheme(const std::string& name);

struct IntegratorConfig {
    Scheme scheme = Scheme::SemiImplicitEM;
    double dt = 1e-3;
    double t_end = 1.0;
    int record_every = 10;
    /// false drops the B~ term, leaving the Ornstein-Uhlenbeck system.
    bool nonlinear = true;
    bool keep_snapshots = false;

    std::size_t step_count() const;
};

/// Throws std::invalid_argument when the configuration cannot run with `spec`.
void validate(const IntegratorConfig& cfg, const NoiseSpec& spec);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> F_values;
    std::vector<double> dissipation_values;
    /// Trapezoidal integral of the dissipation over every step up to each record.
    std::vector<double> dissipation_integral;
    /// Running sum of <(I + alpha^2 A) u_m, Q dW_m>.
    std::vector<double> martingale;
    std::vector<SpectralField> snapshots;
    /// max of F over every step, not only recorded ones.
    double F_sup = 0.0;
    SpectralField final_state;

    std::size_t size() const { return times.size(); }
};

using Observer = std::function<void(double t, const SpectralField& u)>;

/// Brownian increments over steps of size dt, each formed by summing
/// `substeps` finer standard increments. Two sources on equal streams with
/// (dt, 2) and (dt / 2, 1) therefore drive the same Brownian path.
class BrownianSource {
public:
    BrownianSource(RngStream& rng, double dt, int substeps = 1);

    void next(std::span<double> dB);

private:
    RngStream* rng_;
    double fine_scale_;
    int substeps_;
};

/// One step driven by the Brownian increment dB (pre-Q, variance dt per mode).
SpectralField step_with_increment(const SpectralField& u, const PhysicalParams& p,
                                  const NoiseSpec& spec, const IntegratorConfig& cfg,
                                  std::span<const double> dB);

/// One step with a freshly drawn increment.
SpectralField step(const SpectralField& u, const PhysicalParams& p, const NoiseSpec& spec,
                   const IntegratorConfig& cfg, RngStream& rng);

/// Pre-Q increment actually injected by a step driven by dB. Equal to dB for
/// the Euler scheme; the exponential scheme rescales each mode to the exact
/// variance of its stochastic convolution.
std::vector<double> injected_increment(const PhysicalParams& p, const NoiseSpec& spec,
                                       const IntegratorConfig& cfg, std::span<const double> dB);

/// First-variation step along the carrying path point u (no noise term).
SpectralField step_variation(const SpectralField& u, const SpectralField& eta,
                             const PhysicalParams& p, const IntegratorConfig& cfg);

/// Runs a trajectory from x0. Throws BlowUpError at the first non-finite state.
TrajectoryRecord integrate(const SpectralField& x0, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, RngStream& rng,
                           const Observer& observer = {});

TrajectoryRecord integrate(const SpectralField& x0, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, BrownianSource& noise,
                           const Observer& observer = {});

/// Same as above on stream 0 of spec.seed.
TrajectoryRecord integrate(const SpectralField& x0, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, const Observer& observer = {});

struct VariationResult {
    SpectralField u;   // u(t_end; x)
    SpectralField eta; // D u(t_end; x) . h
    /// sum_m <Q^{-1} eta(t_m), dW_m>; zero when sigma = 0.
    double girsanov_weight = 0.0;
};

/// Co-integrates u and its first variation in direction h with shared increments.
VariationResult integrate_variation(const SpectralField& x0, const SpectralField& h,
                                    const PhysicalParams& p, const NoiseSpec& spec,
                                    const IntegratorConfig& cfg, RngStream& rng);
VariationResult integrate_variation(const SpectralField& x0, const SpectralField& h,
                                    const PhysicalParams& p, const NoiseSpec& spec,
                                    const IntegratorConfig& cfg, BrownianSource& noise);

/// phi_1(z) = (e^z - 1) / z with a series near zero.
double phi1(double z);

} // namespace lans
