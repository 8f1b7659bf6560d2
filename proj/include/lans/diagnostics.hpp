#pragma once

#include "lans/integrator.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lans {

// ---------------------------------------------------------------------------
// Ensemble plumbing

/// Worker count for ensembles: hardware concurrency, capped by LANS_THREADS.
std::size_t ensemble_threads();

/// Calls task(i) for every i in [0, count) on up to ensemble_threads() workers.
/// Each index is processed exactly once; callers store results by index so
/// the outcome is independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

/// Pairwise (cascade) summation in fixed order.
double pairwise_sum(std::span<const double> values);

struct MeanError {
    double mean = 0.0;
    double standard_error = 0.0; // sample standard deviation / sqrt(n)
};

/// Requires at least two samples.
MeanError mean_and_error(std::span<const double> samples);

/// Batch-means error bar for a correlated time series.
MeanError batch_means(std::span<const double> series, std::size_t batches = 20);

struct EnsembleReport {
    std::size_t sample_count = 0;
    double estimate = 0.0;
    double standard_error = 0.0;
    std::vector<double> times;
    std::vector<double> means;
    std::vector<double> standard_errors;
};

// ---------------------------------------------------------------------------
// Energy balance

/// R(t) = E[F(t)] + 2 nu E[int_0^t dissipation] - F(0) - Tr[Q*(I+alpha^2 A)Q] t.
/// Paths are stream i of spec.seed; `substeps` > 1 coarsens a finer Brownian
/// path so runs at dt and dt / 2 can share increments.
EnsembleReport ito_balance_report(const PhysicalParams& p, const NoiseSpec& spec,
                                  const IntegratorConfig& cfg, const SpectralField& x0,
                                  std::size_t M, int substeps = 1);

struct ItoBalanceStudy {
    EnsembleReport coarse;          // at cfg.dt
    EnsembleReport fine;            // at cfg.dt / 2, same Brownian paths
    double fitted_slope = 0.0;      // C in R(dt) ~ C dt
    double deterministic_coarse = 0.0; // sigma = 0 residual at cfg.dt
    double deterministic_fine = 0.0;   // sigma = 0 residual at cfg.dt / 2
    double deterministic_ratio = 0.0;
    /// 2 for the first-order schemes; 4 when the linear part is integrated
    /// exactly (exponential scheme without nonlinearity, or RK4).
    double expected_ratio = 2.0;
    bool balance_ok = false;  // |R| <= 3 SE + |C| dt
    bool halving_ok = false;  // deterministic_ratio within 30% of expected_ratio
};

ItoBalanceStudy ito_balance_study(const PhysicalParams& p, const NoiseSpec& spec,
                                  const IntegratorConfig& cfg, const SpectralField& x0,
                                  std::size_t M);

/// Pathwise residual F(t) + 2 nu int dissipation - F(0) - trace t - 2 martingale
/// at t_end, root-mean-square over M paths.
double pathwise_balance_rms(const PhysicalParams& p, const NoiseSpec& spec,
                            const IntegratorConfig& cfg, const SpectralField& x0, std::size_t M);

// ---------------------------------------------------------------------------
// Moments

/// Structural affine-growth check for a moment series m(t): the envelope slope
/// is the largest chord slope (m(t) - m(0)) / t over the first half of the
/// horizon; every point must sit below m(0) + slope t + 3 SE(t).
struct AffineEnvelope {
    double intercept = 0.0;  // least-squares a in a + c t
    double lsq_slope = 0.0;  // least-squares c
    double envelope_slope = 0.0;
    bool finite = false;
    bool bounded = false;
};

AffineEnvelope affine_envelope(const EnsembleReport& series, double initial_value);

struct MomentReport {
    int k = 1;
    EnsembleReport series;       // E[F^k(t)]
    MeanError sup_moment;        // E[sup_{t <= T} F^k]
    EnsembleReport weighted_dissipation; // E[int F^{k-1} dissipation]
    AffineEnvelope envelope;
};

MomentReport moment_report(const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, const SpectralField& x0, int k,
                           std::size_t M);

/// nu - 2 eps / lambda_1 Tr[Q*(I+alpha^2 A)Q]; exponential moments need this > 0.
double exp_moment_margin(const PhysicalParams& p, const NoiseSpec& spec, double eps_exp);

/// Human-readable form of the sign condition with its value.
std::string exp_moment_condition(const PhysicalParams& p, const NoiseSpec& spec, double eps_exp);

struct ExpMomentReport {
    double eps_exp = 0.0;
    double margin = 0.0;
    EnsembleReport series;               // E[exp(eps F(t))]
    EnsembleReport weighted_dissipation; // E[int exp(eps F) dissipation]
    AffineEnvelope envelope;
};

/// Throws PreconditionError when the sign condition fails; nothing is run then.
ExpMomentReport exp_moment_report(const PhysicalParams& p, const NoiseSpec& spec,
                                  const IntegratorConfig& cfg, const SpectralField& x0,
                                  double eps_exp, std::size_t M);

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck oracle

/// Stationary variance q_j^2 / (2 nu lambda_j) of dZ = -nu A Z dt + Q dW per mode.
std::vector<double> ou_stationary_oracle(const NoiseSpec& spec, const PhysicalParams& p);

struct OuVarianceTest {
    std::vector<double> oracle;
    std::vector<double> empirical;
    std::vector<double> rel_error;
    double max_rel_error = 0.0;
};

/// Long-run time average of u_j^2 for the linear system started at zero,
/// sampled every step after burn_in. Uses cfg.scheme and cfg.dt.
OuVarianceTest ou_variance_test(const PhysicalParams& p, const NoiseSpec& spec,
                                const IntegratorConfig& cfg, double T_long, double burn_in);

// ---------------------------------------------------------------------------
// Bismut-Elworthy derivative estimator

struct Observable {
    enum class Kind { Linear, Energy, ClippedEnergy };
    Kind kind = Kind::Linear;
    std::size_t mode = 0; // for Linear: <u, e_mode>
    double clip = 10.0;   // for ClippedEnergy: min(F, clip)
    double alpha = 0.0;   // filter length used by F

    double operator()(const SpectralField& u) const;
    std::string name() const;
};

/// "linear", "energy", "clipped_energy".
Observable::Kind parse_observable(const std::string& name);

struct BEEstimate {
    std::string observable;
    SpectralField direction;
    double time = 0.0;
    double value = 0.0;
    double standard_error = 0.0;
    std::optional<double> fd_reference;
    std::optional<double> fd_standard_error;
};

/// (1/t) E[phi(u(t, x)) sum_m <Q^{-1} eta^h(t_m), dW_m>] over M paths.
/// With fd_delta set, also the central difference (P_t phi(x + d h) -
/// P_t phi(x - d h)) / (2 d) on the same Brownian paths.
BEEstimate bismut_elworthy(const Observable& phi, const SpectralField& x, const SpectralField& h,
                           double t, std::size_t M, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, std::optional<double> fd_delta = {});

// ---------------------------------------------------------------------------
// Pathwise first variation check

struct VariationCheck {
    double fd_norm = 0.0;
    double eta_norm = 0.0;
    double rel_error = 0.0;
};

/// Compares (u(T; x + d h) - u(T; x)) / d with eta^h(T) on one Brownian path.
VariationCheck variation_check(const SpectralField& x, const SpectralField& h, double delta,
                               const PhysicalParams& p, const NoiseSpec& spec,
                               const IntegratorConfig& cfg, std::uint64_t stream = 0);

// ---------------------------------------------------------------------------
// Strong convergence

struct ConvergenceStudy {
    std::vector<double> dts;    // coarse step of each pair
    std::vector<double> errors; // RMS |u_dt(T) - u_{dt/2}(T)|_2
    double order = 0.0;
};

/// Levels dt_finest * 2^l for l = 0 .. levels-1, all driven by the finest
/// Brownian path of stream i. Errors compare consecutive levels.
ConvergenceStudy strong_convergence(const PhysicalParams& p, const NoiseSpec& spec,
                                    const IntegratorConfig& cfg, const SpectralField& x0,
                                    double dt_finest, int levels, std::size_t paths);

/// Least-squares slope of log(y) against log(x).
double fitted_order(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Invariant measure

struct InvariantStats {
    MeanError F;
    MeanError dissipation;
    MeanError exp_weighted_dissipation; // exp(eps F) dissipation
    double eps_exp = 0.0;
    double margin = 0.0;       // nu - eps / lambda_1 Tr[Q*(I+alpha^2 A)Q]
    double gate_margin = 0.0;  // nu - 2 eps / lambda_1 Tr[...]
    std::size_t samples = 0;
};

/// Time averages over (burn_in, T_long] of one trajectory per initial
/// condition (stream = position in the list), batch-means error bars.
std::vector<InvariantStats> invariant_stats(const PhysicalParams& p, const NoiseSpec& spec,
                                            const IntegratorConfig& cfg,
                                            const std::vector<SpectralField>& x0_list,
                                            double T_long, double burn_in, double eps_exp);

/// |a - b| <= k sqrt(se_a^2 + se_b^2).
bool agree_within(const MeanError& a, const MeanError& b, double k = 3.0);

} // namespace lans
