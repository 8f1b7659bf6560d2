#include "lans/diagnostics.hpp"

#include "lans/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lans {

namespace {

// Runs the stochastic system to cfg.t_end without recording anything.
SpectralField terminal_state(const SpectralField& x0, const PhysicalParams& p,
                             const NoiseSpec& spec, const IntegratorConfig& cfg,
                             BrownianSource& noise) {
    validate(cfg, spec);
    SpectralField u = x0;
    std::vector<double> dB(u.size());
    const std::size_t steps = cfg.step_count();
    const bool stochastic = cfg.scheme != Scheme::RK4Deterministic;
    for (std::size_t m = 0; m < steps; ++m) {
        if (stochastic)
            noise.next(dB);
        u = step_with_increment(u, p, spec, cfg, stochastic ? std::span<const double>(dB)
                                                            : std::span<const double>());
        if (!u.all_finite()) {
            const double t = static_cast<double>(m + 1) * cfg.dt;
            std::ostringstream msg;
            msg << "non-finite coefficient at t = " << t;
            throw BlowUpError(t, msg.str());
        }
    }
    return u;
}

NoiseSpec silent(const NoiseSpec& spec) {
    NoiseSpec out = spec;
    out.sigma = 0.0;
    std::fill(out.q.begin(), out.q.end(), 0.0);
    out.trace_Q = 0.0;
    out.trace_QAQ = 0.0;
    return out;
}

// Collapses per-path series (paths x records) into a report.
EnsembleReport reduce_series(const std::vector<double>& times,
                             const std::vector<std::vector<double>>& per_path) {
    EnsembleReport out;
    out.sample_count = per_path.size();
    out.times = times;
    std::vector<double> column(per_path.size());
    for (std::size_t r = 0; r < times.size(); ++r) {
        for (std::size_t i = 0; i < per_path.size(); ++i)
            column[i] = per_path[i][r];
        const MeanError me = mean_and_error(column);
        out.means.push_back(me.mean);
        out.standard_errors.push_back(me.standard_error);
    }
    if (!times.empty()) {
        out.estimate = out.means.back();
        out.standard_error = out.standard_errors.back();
    }
    return out;
}

std::vector<double> trapezoid_running(const std::vector<double>& t, const std::vector<double>& f) {
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t r = 1; r < t.size(); ++r)
        out[r] = out[r - 1] + 0.5 * (t[r] - t[r - 1]) * (f[r] + f[r - 1]);
    return out;
}

void require_samples(std::size_t M, const char* op) {
    if (M < 2)
        throw std::invalid_argument(std::string(op) + ": need at least two samples");
}

} // namespace

std::size_t ensemble_threads() {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LANS_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1)
            n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    }
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(count);
    const std::size_t workers = std::min(ensemble_threads(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        task(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool)
            th.join();
    }
    // lowest failing index wins so the reported error does not depend on scheduling
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double acc = 0.0;
        for (double v : values)
            acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanError mean_and_error(std::span<const double> samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("mean_and_error: need at least two samples");
    const double n = static_cast<double>(samples.size());
    const double mean = pairwise_sum(samples) / n;
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        sq[i] = (samples[i] - mean) * (samples[i] - mean);
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

MeanError batch_means(std::span<const double> series, std::size_t batches) {
    if (batches < 2 || series.size() < batches)
        throw std::invalid_argument("batch_means: series shorter than the batch count");
    const std::size_t len = series.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b)
        means[b] = pairwise_sum(series.subspan(b * len, len)) / static_cast<double>(len);
    MeanError out = mean_and_error(means);
    // the tail that does not fill a batch still counts toward the mean
    out.mean = pairwise_sum(series) / static_cast<double>(series.size());
    return out;
}

// ---------------------------------------------------------------------------

EnsembleReport ito_balance_report(const PhysicalParams& p, const NoiseSpec& spec,
                                  const IntegratorConfig& cfg, const SpectralField& x0,
                                  std::size_t M, int substeps) {
    require_samples(M, "ito_balance_report");
    validate(cfg, spec);
    const double F0 = energy_functional(x0, p.alpha);
    const double trace = spec.trace_alpha(p.alpha);
    std::vector<std::vector<double>> residuals(M);
    std::vector<double> times;
    parallel_for(M, [&](std::size_t i) {
        RngStream rng(spec.seed, i);
        BrownianSource noise(rng, cfg.dt, substeps);
        const TrajectoryRecord rec = integrate(x0, p, spec, cfg, noise);
        std::vector<double> r(rec.size());
        for (std::size_t k = 0; k < rec.size(); ++k)
            r[k] = rec.F_values[k] + 2.0 * p.nu * rec.dissipation_integral[k] - F0 -
                   trace * rec.times[k];
        residuals[i] = std::move(r);
        if (i == 0)
            times = rec.times;
    });
    return reduce_series(times, residuals);
}

ItoBalanceStudy ito_balance_study(const PhysicalParams& p, const NoiseSpec& spec,
                                  const IntegratorConfig& cfg, const SpectralField& x0,
                                  std::size_t M) {
    ItoBalanceStudy out;
    IntegratorConfig fine_cfg = cfg;
    fine_cfg.dt = cfg.dt / 2.0;
    fine_cfg.record_every = cfg.record_every * 2;
    out.coarse = ito_balance_report(p, spec, cfg, x0, M, 2);
    out.fine = ito_balance_report(p, spec, fine_cfg, x0, M, 1);
    out.fitted_slope = (out.coarse.estimate - out.fine.estimate) / (cfg.dt / 2.0);
    out.balance_ok = std::abs(out.coarse.estimate) <=
                     3.0 * out.coarse.standard_error + std::abs(out.fitted_slope) * cfg.dt;

    const NoiseSpec quiet = silent(spec);
    const double F0 = energy_functional(x0, p.alpha);
    auto deterministic_residual = [&](const IntegratorConfig& c) {
        RngStream rng(spec.seed, 0);
        const TrajectoryRecord rec = integrate(x0, p, quiet, c, rng);
        return rec.F_values.back() + 2.0 * p.nu * rec.dissipation_integral.back() - F0;
    };
    out.deterministic_coarse = deterministic_residual(cfg);
    out.deterministic_fine = deterministic_residual(fine_cfg);
    // the trapezoid rule caps the order at 2 once the linear part is exact
    if (cfg.scheme == Scheme::RK4Deterministic || (cfg.scheme == Scheme::ExponentialEM && !cfg.nonlinear))
        out.expected_ratio = 4.0;
    if (std::abs(out.deterministic_fine) > 0.0) {
        out.deterministic_ratio = out.deterministic_coarse / out.deterministic_fine;
        out.halving_ok = std::abs(out.deterministic_ratio / out.expected_ratio - 1.0) <= 0.3;
    } else {
        out.deterministic_ratio = std::numeric_limits<double>::quiet_NaN();
        out.halving_ok = out.deterministic_coarse == 0.0; // e.g. zero initial state
    }
    return out;
}

double pathwise_balance_rms(const PhysicalParams& p, const NoiseSpec& spec,
                            const IntegratorConfig& cfg, const SpectralField& x0, std::size_t M) {
    require_samples(M, "pathwise_balance_rms");
    const double F0 = energy_functional(x0, p.alpha);
    const double trace = spec.trace_alpha(p.alpha);
    std::vector<double> sq(M);
    parallel_for(M, [&](std::size_t i) {
        RngStream rng(spec.seed, i);
        const TrajectoryRecord rec = integrate(x0, p, spec, cfg, rng);
        const double r = rec.F_values.back() + 2.0 * p.nu * rec.dissipation_integral.back() - F0 -
                         trace * rec.times.back() - 2.0 * rec.martingale.back();
        sq[i] = r * r;
    });
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(M));
}

// ---------------------------------------------------------------------------

AffineEnvelope affine_envelope(const EnsembleReport& series, double initial_value) {
    AffineEnvelope out;
    const std::size_t n = series.times.size();
    out.finite = n > 0;
    for (std::size_t r = 0; r < n; ++r)
        out.finite = out.finite && std::isfinite(series.means[r]) &&
                     std::isfinite(series.standard_errors[r]);
    if (!out.finite || n < 2)
        return out;

    double st = 0, sm = 0, stt = 0, stm = 0;
    for (std::size_t r = 0; r < n; ++r) {
        st += series.times[r];
        sm += series.means[r];
        stt += series.times[r] * series.times[r];
        stm += series.times[r] * series.means[r];
    }
    const double dn = static_cast<double>(n);
    out.lsq_slope = (dn * stm - st * sm) / (dn * stt - st * st);
    out.intercept = (sm - out.lsq_slope * st) / dn;

    const double horizon = series.times.back();
    double slope = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double t = series.times[r];
        if (t > 0.0 && t <= 0.5 * horizon + 1e-12)
            slope = std::max(slope, (series.means[r] - initial_value) / t);
    }
    out.envelope_slope = slope;
    out.bounded = true;
    for (std::size_t r = 0; r < n; ++r) {
        const double bound = initial_value + slope * series.times[r] +
                             3.0 * series.standard_errors[r] +
                             1e-12 * std::max(1.0, std::abs(initial_value));
        out.bounded = out.bounded && series.means[r] <= bound;
    }
    return out;
}

MomentReport moment_report(const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, const SpectralField& x0, int k,
                           std::size_t M) {
    if (k < 1)
        throw std::invalid_argument("moment_report: k must be at least 1");
    require_samples(M, "moment_report");
    validate(cfg, spec);
    std::vector<std::vector<double>> moments(M), weighted(M);
    std::vector<double> sup(M);
    std::vector<double> times;
    parallel_for(M, [&](std::size_t i) {
        RngStream rng(spec.seed, i);
        const TrajectoryRecord rec = integrate(x0, p, spec, cfg, rng);
        std::vector<double> m(rec.size()), w(rec.size());
        for (std::size_t r = 0; r < rec.size(); ++r) {
            m[r] = std::pow(rec.F_values[r], k);
            w[r] = std::pow(rec.F_values[r], k - 1) * rec.dissipation_values[r];
        }
        weighted[i] = trapezoid_running(rec.times, w);
        moments[i] = std::move(m);
        sup[i] = std::pow(rec.F_sup, k);
        if (i == 0)
            times = rec.times;
    });
    MomentReport out;
    out.k = k;
    out.series = reduce_series(times, moments);
    out.weighted_dissipation = reduce_series(times, weighted);
    out.sup_moment = mean_and_error(sup);
    out.envelope = affine_envelope(out.series, std::pow(energy_functional(x0, p.alpha), k));
    return out;
}

double exp_moment_margin(const PhysicalParams& p, const NoiseSpec& spec, double eps_exp) {
    return p.nu - 2.0 * eps_exp / spec.basis->lambda_min() * spec.trace_alpha(p.alpha);
}

std::string exp_moment_condition(const PhysicalParams& p, const NoiseSpec& spec, double eps_exp) {
    std::ostringstream msg;
    msg.precision(17);
    const double value = -exp_moment_margin(p, spec, eps_exp);
    msg << "-nu + 2 * eps_exp / lambda_1 * Tr[Q*(I+alpha^2 A)Q] < 0 required; "
        << "-" << p.nu << " + 2 * " << eps_exp << " / " << spec.basis->lambda_min() << " * "
        << spec.trace_alpha(p.alpha) << " = " << value;
    return msg.str();
}

ExpMomentReport exp_moment_report(const PhysicalParams& p, const NoiseSpec& spec,
                                  const IntegratorConfig& cfg, const SpectralField& x0,
                                  double eps_exp, std::size_t M) {
    if (!(eps_exp >= 0.0))
        throw std::invalid_argument("exp_moment_report: eps_exp must be non-negative");
    const double margin = exp_moment_margin(p, spec, eps_exp);
    if (!(margin > 0.0))
        throw PreconditionError("exp_moment_report: inadmissible eps_exp: " +
                                exp_moment_condition(p, spec, eps_exp));
    require_samples(M, "exp_moment_report");
    validate(cfg, spec);
    std::vector<std::vector<double>> moments(M), weighted(M);
    std::vector<double> times;
    parallel_for(M, [&](std::size_t i) {
        RngStream rng(spec.seed, i);
        const TrajectoryRecord rec = integrate(x0, p, spec, cfg, rng);
        std::vector<double> m(rec.size()), w(rec.size());
        for (std::size_t r = 0; r < rec.size(); ++r) {
            m[r] = std::exp(eps_exp * rec.F_values[r]);
            w[r] = m[r] * rec.dissipation_values[r];
        }
        weighted[i] = trapezoid_running(rec.times, w);
        moments[i] = std::move(m);
        if (i == 0)
            times = rec.times;
    });
    ExpMomentReport out;
    out.eps_exp = eps_exp;
    out.margin = margin;
    out.series = reduce_series(times, moments);
    out.weighted_dissipation = reduce_series(times, weighted);
    out.envelope = affine_envelope(out.series, std::exp(eps_exp * energy_functional(x0, p.alpha)));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> ou_stationary_oracle(const NoiseSpec& spec, const PhysicalParams& p) {
    if (!(p.nu > 0.0))
        throw std::invalid_argument("ou_stationary_oracle: nu must be positive");
    std::vector<double> var(spec.q.size());
    for (std::size_t j = 0; j < var.size(); ++j)
        var[j] = spec.q[j] * spec.q[j] / (2.0 * p.nu * spec.basis->eigenvalue(j));
    return var;
}

OuVarianceTest ou_variance_test(const PhysicalParams& p, const NoiseSpec& spec,
                                const IntegratorConfig& cfg, double T_long, double burn_in) {
    if (!(burn_in >= 0.0) || !(burn_in < T_long))
        throw std::invalid_argument("ou_variance_test: need 0 <= burn_in < T_long");
    IntegratorConfig linear = cfg;
    linear.nonlinear = false;
    linear.t_end = T_long;
    validate(linear, spec);

    OuVarianceTest out;
    out.oracle = ou_stationary_oracle(spec, p);
    const std::size_t n = spec.basis->size();
    const std::size_t steps = linear.step_count();
    const std::size_t first = static_cast<std::size_t>(std::ceil(burn_in / linear.dt - 1e-9));
    std::vector<std::vector<double>> squares(n);
    for (auto& s : squares)
        s.reserve(steps - first + 1);

    RngStream rng(spec.seed, 0);
    BrownianSource noise(rng, linear.dt);
    SpectralField u(spec.basis);
    std::vector<double> dB(n);
    for (std::size_t m = 1; m <= steps; ++m) {
        noise.next(dB);
        u = step_with_increment(u, p, spec, linear, dB);
        if (m >= first)
            for (std::size_t j = 0; j < n; ++j)
                squares[j].push_back(u[j] * u[j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double emp = pairwise_sum(squares[j]) / static_cast<double>(squares[j].size());
        out.empirical.push_back(emp);
        const double rel = out.oracle[j] > 0.0 ? std::abs(emp - out.oracle[j]) / out.oracle[j]
                                               : std::abs(emp);
        out.rel_error.push_back(rel);
        out.max_rel_error = std::max(out.max_rel_error, rel);
    }
    return out;
}

// ---------------------------------------------------------------------------

double Observable::operator()(const SpectralField& u) const {
    switch (kind) {
    case Kind::Linear:
        return u[mode];
    case Kind::Energy:
        return energy_functional(u, alpha);
    case Kind::ClippedEnergy:
        return std::min(energy_functional(u, alpha), clip);
    }
    return 0.0;
}

std::string Observable::name() const {
    switch (kind) {
    case Kind::Linear:
        return "linear";
    case Kind::Energy:
        return "energy";
    case Kind::ClippedEnergy:
        return "clipped_energy";
    }
    return "unknown";
}

Observable::Kind parse_observable(const std::string& name) {
    if (name == "linear")
        return Observable::Kind::Linear;
    if (name == "energy")
        return Observable::Kind::Energy;
    if (name == "clipped_energy")
        return Observable::Kind::ClippedEnergy;
    throw std::invalid_argument("unknown observable '" + name + "'");
}

BEEstimate bismut_elworthy(const Observable& phi, const SpectralField& x, const SpectralField& h,
                           double t, std::size_t M, const PhysicalParams& p, const NoiseSpec& spec,
                           const IntegratorConfig& cfg, std::optional<double> fd_delta) {
    if (!(t > 0.0))
        throw std::invalid_argument("bismut_elworthy: t must be positive");
    if (!(spec.sigma > 0.0))
        throw SingularOperatorError("bismut_elworthy: Q is not invertible (sigma = 0)");
    if (cfg.scheme == Scheme::RK4Deterministic)
        throw std::invalid_argument("bismut_elworthy: needs a stochastic scheme");
    if (phi.kind == Observable::Kind::Linear && phi.mode >= x.size())
        throw std::invalid_argument("bismut_elworthy: observable mode out of range");
    if (fd_delta && !(*fd_delta > 0.0))
        throw std::invalid_argument("bismut_elworthy: fd delta must be positive");
    require_samples(M, "bismut_elworthy");
    require_same_basis(x, h, "bismut_elworthy");

    IntegratorConfig run = cfg;
    run.t_end = t;
    validate(run, spec);

    std::vector<double> samples(M), fd(fd_delta ? M : 0);
    parallel_for(M, [&](std::size_t i) {
        {
            RngStream rng(spec.seed, i);
            BrownianSource noise(rng, run.dt);
            const VariationResult v = integrate_variation(x, h, p, spec, run, noise);
            samples[i] = phi(v.u) * v.girsanov_weight / t;
        }
        if (fd_delta) {
            const double d = *fd_delta;
            RngStream rng_plus(spec.seed, i);
            BrownianSource noise_plus(rng_plus, run.dt);
            const SpectralField up = terminal_state(x + h * d, p, spec, run, noise_plus);
            RngStream rng_minus(spec.seed, i);
            BrownianSource noise_minus(rng_minus, run.dt);
            const SpectralField um = terminal_state(x - h * d, p, spec, run, noise_minus);
            fd[i] = (phi(up) - phi(um)) / (2.0 * d);
        }
    });

    BEEstimate out;
    out.observable = phi.name();
    out.direction = h;
    out.time = t;
    const MeanError be = mean_and_error(samples);
    out.value = be.mean;
    out.standard_error = be.standard_error;
    if (fd_delta) {
        const MeanError ref = mean_and_error(fd);
        out.fd_reference = ref.mean;
        out.fd_standard_error = ref.standard_error;
    }
    return out;
}

VariationCheck variation_check(const SpectralField& x, const SpectralField& h, double delta,
                               const PhysicalParams& p, const NoiseSpec& spec,
                               const IntegratorConfig& cfg, std::uint64_t stream) {
    if (!(delta > 0.0))
        throw std::invalid_argument("variation_check: delta must be positive");
    RngStream rng(spec.seed, stream);
    BrownianSource noise(rng, cfg.dt);
    const VariationResult base = integrate_variation(x, h, p, spec, cfg, noise);
    RngStream rng_shift(spec.seed, stream);
    BrownianSource noise_shift(rng_shift, cfg.dt);
    const SpectralField shifted = terminal_state(x + h * delta, p, spec, cfg, noise_shift);
    const SpectralField fd = (shifted - base.u) * (1.0 / delta);
    VariationCheck out;
    out.fd_norm = sobolev_norms(fd).l2;
    out.eta_norm = sobolev_norms(base.eta).l2;
    const double diff = sobolev_norms(fd - base.eta).l2;
    out.rel_error = out.eta_norm > 0.0 ? diff / out.eta_norm : diff;
    return out;
}

// ---------------------------------------------------------------------------

double fitted_order(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fitted_order: need at least two matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(x.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy strong_convergence(const PhysicalParams& p, const NoiseSpec& spec,
                                    const IntegratorConfig& cfg, const SpectralField& x0,
                                    double dt_finest, int levels, std::size_t paths) {
    if (levels < 2)
        throw std::invalid_argument("strong_convergence: need at least two levels");
    if (cfg.scheme == Scheme::RK4Deterministic)
        throw std::invalid_argument("strong_convergence: needs a stochastic scheme");
    require_samples(paths, "strong_convergence");
    const std::size_t L = static_cast<std::size_t>(levels);
    std::vector<std::vector<double>> sq(L - 1, std::vector<double>(paths));
    parallel_for(paths, [&](std::size_t i) {
        std::vector<SpectralField> finals;
        for (std::size_t l = 0; l < L; ++l) {
            IntegratorConfig c = cfg;
            c.dt = dt_finest * static_cast<double>(1u << l);
            RngStream rng(spec.seed, i);
            BrownianSource noise(rng, c.dt, 1 << l);
            finals.push_back(terminal_state(x0, p, spec, c, noise));
        }
        for (std::size_t l = 1; l < L; ++l) {
            const double e = sobolev_norms(finals[l] - finals[l - 1]).l2;
            sq[l - 1][i] = e * e;
        }
    });
    ConvergenceStudy out;
    for (std::size_t l = L - 1; l >= 1; --l) {
        out.dts.push_back(dt_finest * static_cast<double>(1u << l));
        out.errors.push_back(std::sqrt(pairwise_sum(sq[l - 1]) / static_cast<double>(paths)));
    }
    out.order = fitted_order(out.dts, out.errors);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<InvariantStats> invariant_stats(const PhysicalParams& p, const NoiseSpec& spec,
                                            const IntegratorConfig& cfg,
                                            const std::vector<SpectralField>& x0_list,
                                            double T_long, double burn_in, double eps_exp) {
    if (!(burn_in >= 0.0) || !(burn_in < T_long))
        throw std::invalid_argument("invariant_stats: need 0 <= burn_in < T_long");
    if (!(eps_exp >= 0.0))
        throw std::invalid_argument("invariant_stats: eps_exp must be non-negative");
    if (eps_exp > 0.0 && !(exp_moment_margin(p, spec, eps_exp) > 0.0))
        throw PreconditionError("invariant_stats: inadmissible eps_exp: " +
                                exp_moment_condition(p, spec, eps_exp));
    IntegratorConfig run = cfg;
    run.t_end = T_long;
    validate(run, spec);

    const double trace = spec.trace_alpha(p.alpha);
    const double lambda1 = spec.basis->lambda_min();
    std::vector<InvariantStats> out(x0_list.size());
    parallel_for(x0_list.size(), [&](std::size_t c) {
        RngStream rng(spec.seed, c);
        BrownianSource noise(rng, run.dt);
        const std::size_t steps = run.step_count();
        const std::size_t first = static_cast<std::size_t>(std::ceil(burn_in / run.dt - 1e-9));
        std::vector<double> F, D, E;
        F.reserve(steps - first + 1);
        D.reserve(steps - first + 1);
        E.reserve(steps - first + 1);
        SpectralField u = x0_list[c];
        std::vector<double> dB(u.size());
        const bool stochastic = run.scheme != Scheme::RK4Deterministic;
        for (std::size_t m = 1; m <= steps; ++m) {
            if (stochastic)
                noise.next(dB);
            u = step_with_increment(u, p, spec, run,
                                    stochastic ? std::span<const double>(dB)
                                               : std::span<const double>());
            if (!u.all_finite()) {
                const double t = static_cast<double>(m) * run.dt;
                throw BlowUpError(t, "invariant_stats: non-finite state");
            }
            if (m >= first) {
                const double f = energy_functional(u, p.alpha);
                const double d = dissipation(u, p.alpha);
                F.push_back(f);
                D.push_back(d);
                E.push_back(std::exp(eps_exp * f) * d);
            }
        }
        InvariantStats s;
        s.F = batch_means(F);
        s.dissipation = batch_means(D);
        s.exp_weighted_dissipation = batch_means(E);
        s.eps_exp = eps_exp;
        s.margin = p.nu - eps_exp / lambda1 * trace;
        s.gate_margin = p.nu - 2.0 * eps_exp / lambda1 * trace;
        s.samples = F.size();
        out[c] = s;
    });
    return out;
}

bool agree_within(const MeanError& a, const MeanError& b, double k) {
    return std::abs(a.mean - b.mean) <=
           k * std::sqrt(a.standard_error * a.standard_error + b.standard_error * b.standard_error);
}

} // namespace lans
