#include "lans/commands.hpp"

#include "lans/diagnostics.hpp"
#include "lans/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

namespace lans {

namespace {

struct Setup {
    BasisPtr basis;
    NoiseSetup noise;
    PhysicalParams params;
    SpectralField x0;
};

Setup make_setup(const SimConfig& cfg) {
    Setup s;
    s.basis = build_basis(cfg.physics.L, cfg.cutoff);
    s.noise = make_noise(cfg.epsilon, cfg.sigma, s.basis, cfg.physics.alpha, cfg.seed);
    s.params = cfg.physics;
    if (!cfg.x0_snapshot.empty()) {
        std::ifstream in(cfg.x0_snapshot);
        if (!in)
            throw ConfigError(0, "x0_snapshot", "cannot open snapshot '" + cfg.x0_snapshot + "'");
        SpectralField loaded = read_snapshot(in);
        if (!loaded.basis().same_as(*s.basis))
            throw ConfigError(0, "x0_snapshot", "snapshot basis differs from L/cutoff");
        s.x0 = SpectralField(s.basis, std::vector<double>(loaded.coeffs().begin(),
                                                          loaded.coeffs().end()));
    } else {
        s.x0 = reference_field(s.basis, cfg.physics.alpha, cfg.x0_energy);
    }
    return s;
}

class Csv {
public:
    Csv(std::ostream& os, std::initializer_list<const char*> header) : os_(os) {
        bool first = true;
        for (const char* h : header) {
            os_ << (first ? "" : ",") << h;
            first = false;
        }
        os_ << '\n';
    }

    Csv& cell(double v) { return text(format_real(v)); }
    Csv& cell(std::size_t v) { return text(std::to_string(v)); }
    Csv& text(const std::string& s) {
        os_ << (fresh_ ? "" : ",") << s;
        fresh_ = false;
        return *this;
    }
    void end() {
        os_ << '\n';
        fresh_ = true;
    }

private:
    std::ostream& os_;
    bool fresh_ = true;
};

int cmd_validate(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    const NoiseSpec& spec = s.noise.spec;
    const AdmissibilityReport& rep = s.noise.report;
    Csv out(csv, {"quantity", "value"});
    const std::vector<std::pair<std::string, double>> rows = {
        {"mode_count", static_cast<double>(s.basis->size())},
        {"lambda_1", s.basis->lambda_min()},
        {"lambda_max", s.basis->lambda_max()},
        {"trace_Q", spec.trace_Q},
        {"trace_QAQ", spec.trace_QAQ},
        {"trace_alpha", spec.trace_alpha(cfg.physics.alpha)},
        {"tail_estimate", rep.tail_estimate},
        {"trace_class", rep.trace_class ? 1.0 : 0.0},
        {"invertible_on_D_A32", rep.invertible_on_D_A32 ? 1.0 : 0.0},
        {"exp_moment_margin_per_eps", cfg.physics.nu - exp_moment_margin(s.params, spec, 1.0)},
    };
    for (const auto& [name, value] : rows) {
        out.text(name).cell(value).end();
        info << name << " = " << format_real(value) << '\n';
    }
    info << "trace-class (epsilon > 1): " << (rep.trace_class ? "admissible" : "NOT admissible")
         << '\n';
    info << "Q^{-1} on D(A^{3/2}) (epsilon <= 2): "
         << (rep.invertible_on_D_A32 ? "admissible" : "NOT admissible") << '\n';
    return kExitOk;
}

int cmd_simulate(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    RngStream rng(cfg.seed, 0);
    const TrajectoryRecord rec = integrate(s.x0, s.params, s.noise.spec, cfg.integrator, rng);
    Csv out(csv, {"t", "F", "dissipation", "dissipation_integral", "martingale"});
    for (std::size_t r = 0; r < rec.size(); ++r)
        out.cell(rec.times[r])
            .cell(rec.F_values[r])
            .cell(rec.dissipation_values[r])
            .cell(rec.dissipation_integral[r])
            .cell(rec.martingale[r])
            .end();
    if (!cfg.snapshot_path.empty()) {
        std::ofstream snap(cfg.snapshot_path);
        if (!snap)
            throw ConfigError(0, "snapshot_path", "cannot write '" + cfg.snapshot_path + "'");
        write_snapshot(snap, rec.final_state);
        info << "final state written to " << cfg.snapshot_path << '\n';
    }
    info << "F(T) = " << format_real(rec.F_values.back()) << ", sup F = " << format_real(rec.F_sup)
         << '\n';
    return kExitOk;
}

int cmd_mc_energy(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    const ItoBalanceStudy study =
        ito_balance_study(s.params, s.noise.spec, cfg.integrator, s.x0, cfg.M);
    Csv out(csv, {"dt", "residual", "standard_error", "deterministic_residual"});
    out.cell(cfg.integrator.dt)
        .cell(study.coarse.estimate)
        .cell(study.coarse.standard_error)
        .cell(study.deterministic_coarse)
        .end();
    out.cell(cfg.integrator.dt / 2.0)
        .cell(study.fine.estimate)
        .cell(study.fine.standard_error)
        .cell(study.deterministic_fine)
        .end();
    info << "R = " << format_real(study.coarse.estimate) << " +- "
         << format_real(study.coarse.standard_error) << ", fitted C = "
         << format_real(study.fitted_slope) << ", deterministic halving ratio = "
         << format_real(study.deterministic_ratio) << " (expected "
         << format_real(study.expected_ratio) << ")\n";
    info << "balance: " << (study.balance_ok ? "ok" : "FAILED")
         << ", halving: " << (study.halving_ok ? "ok" : "FAILED") << '\n';
    return study.balance_ok && study.halving_ok ? kExitOk : kExitAssertion;
}

void write_series(std::ostream& csv, const EnsembleReport& series, const AffineEnvelope& env,
                  double initial, const EnsembleReport* weighted) {
    if (weighted) {
        Csv out(csv, {"t", "mean", "standard_error", "envelope", "weighted_dissipation",
                      "weighted_dissipation_se"});
        for (std::size_t r = 0; r < series.times.size(); ++r)
            out.cell(series.times[r])
                .cell(series.means[r])
                .cell(series.standard_errors[r])
                .cell(initial + env.envelope_slope * series.times[r])
                .cell(weighted->means[r])
                .cell(weighted->standard_errors[r])
                .end();
    } else {
        Csv out(csv, {"t", "mean", "standard_error", "envelope"});
        for (std::size_t r = 0; r < series.times.size(); ++r)
            out.cell(series.times[r])
                .cell(series.means[r])
                .cell(series.standard_errors[r])
                .cell(initial + env.envelope_slope * series.times[r])
                .end();
    }
}

int cmd_mc_moments(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    const MomentReport rep =
        moment_report(s.params, s.noise.spec, cfg.integrator, s.x0, cfg.k, cfg.M);
    const double initial = std::pow(energy_functional(s.x0, cfg.physics.alpha), cfg.k);
    write_series(csv, rep.series, rep.envelope, initial, nullptr);
    info << "E[F^" << cfg.k << "(T)] = " << format_real(rep.series.estimate) << " +- "
         << format_real(rep.series.standard_error) << ", E[sup F^" << cfg.k
         << "] = " << format_real(rep.sup_moment.mean) << " +- "
         << format_real(rep.sup_moment.standard_error) << '\n';
    info << "least-squares fit a + c t: a = " << format_real(rep.envelope.intercept)
         << ", c = " << format_real(rep.envelope.lsq_slope)
         << "; envelope slope = " << format_real(rep.envelope.envelope_slope) << '\n';
    const bool ok = rep.envelope.finite && rep.envelope.bounded;
    info << "affine envelope: " << (ok ? "ok" : "FAILED") << '\n';
    return ok ? kExitOk : kExitAssertion;
}

int cmd_mc_expmoments(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    const ExpMomentReport rep =
        exp_moment_report(s.params, s.noise.spec, cfg.integrator, s.x0, cfg.eps_exp, cfg.M);
    const double initial = std::exp(cfg.eps_exp * energy_functional(s.x0, cfg.physics.alpha));
    write_series(csv, rep.series, rep.envelope, initial, &rep.weighted_dissipation);
    info << "margin nu - 2 eps / lambda_1 trace = " << format_real(rep.margin) << '\n';
    const bool ok = rep.envelope.finite && rep.envelope.bounded;
    info << "affine envelope: " << (ok ? "ok" : "FAILED") << '\n';
    return ok ? kExitOk : kExitAssertion;
}

int cmd_ou_test(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    IntegratorConfig ic = cfg.integrator;
    if (ic.scheme != Scheme::ExponentialEM)
        info << "ou-test: using exponential_em (exact in law) instead of " << to_string(ic.scheme)
             << '\n';
    ic.scheme = Scheme::ExponentialEM;
    const OuVarianceTest test = ou_variance_test(s.params, s.noise.spec, ic, cfg.T_long, cfg.burn_in);
    Csv out(csv, {"mode", "oracle_variance", "empirical_variance", "rel_error"});
    for (std::size_t j = 0; j < test.oracle.size(); ++j)
        out.cell(j).cell(test.oracle[j]).cell(test.empirical[j]).cell(test.rel_error[j]).end();
    const bool ok = test.max_rel_error <= 0.05;
    info << "max relative error = " << format_real(test.max_rel_error) << (ok ? " (ok)" : " (FAILED)")
         << '\n';
    return ok ? kExitOk : kExitAssertion;
}

int cmd_convergence(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    const ConvergenceStudy study = strong_convergence(s.params, s.noise.spec, cfg.integrator, s.x0,
                                                      cfg.integrator.dt / 2.0, 4, cfg.M);
    Csv out(csv, {"dt", "strong_error"});
    for (std::size_t i = 0; i < study.dts.size(); ++i)
        out.cell(study.dts[i]).cell(study.errors[i]).end();
    const bool ok = study.order >= 0.7 && study.order <= 1.3;
    info << "fitted strong order = " << format_real(study.order) << (ok ? " (ok)" : " (FAILED)")
         << '\n';
    return ok ? kExitOk : kExitAssertion;
}

int cmd_variation(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    const SpectralField h = SpectralField::unit(s.basis, cfg.h_mode);
    const VariationCheck check =
        variation_check(s.x0, h, cfg.delta_fd, s.params, s.noise.spec, cfg.integrator);
    Csv out(csv, {"delta", "fd_norm", "eta_norm", "rel_error"});
    out.cell(cfg.delta_fd).cell(check.fd_norm).cell(check.eta_norm).cell(check.rel_error).end();
    const bool ok = check.rel_error <= 1e-4;
    info << "relative error = " << format_real(check.rel_error) << (ok ? " (ok)" : " (FAILED)")
         << '\n';
    return ok ? kExitOk : kExitAssertion;
}

int cmd_be(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    Observable phi;
    phi.kind = parse_observable(cfg.observable);
    phi.mode = cfg.observable_mode;
    phi.clip = cfg.clip;
    phi.alpha = cfg.physics.alpha;
    const SpectralField h = SpectralField::unit(s.basis, cfg.h_mode);
    const BEEstimate est = bismut_elworthy(phi, s.x0, h, cfg.t, cfg.M, s.params, s.noise.spec,
                                           cfg.integrator, cfg.delta_fd);

    // closed form exists for the linear observable of the linear system
    const bool have_exact = phi.kind == Observable::Kind::Linear && !cfg.integrator.nonlinear;
    double exact = std::nan("");
    if (have_exact)
        exact = std::exp(-cfg.physics.nu * s.basis->eigenvalue(phi.mode) * cfg.t) * h[phi.mode];

    Csv out(csv, {"observable", "t", "estimate", "standard_error", "fd_reference",
                  "fd_standard_error", "exact"});
    out.text(est.observable)
        .cell(est.time)
        .cell(est.value)
        .cell(est.standard_error)
        .cell(*est.fd_reference)
        .cell(*est.fd_standard_error)
        .cell(exact)
        .end();

    bool ok;
    if (have_exact) {
        ok = std::abs(est.value - exact) <= 3.0 * est.standard_error;
    } else {
        const double combined = std::sqrt(est.standard_error * est.standard_error +
                                          *est.fd_standard_error * *est.fd_standard_error);
        ok = std::abs(est.value - *est.fd_reference) <= 3.0 * combined;
    }
    info << "BE estimate = " << format_real(est.value) << " +- " << format_real(est.standard_error)
         << ", FD = " << format_real(*est.fd_reference);
    if (have_exact)
        info << ", exact = " << format_real(exact);
    info << (ok ? " (ok)" : " (FAILED)") << '\n';
    return ok ? kExitOk : kExitAssertion;
}

int cmd_invariant(const SimConfig& cfg, std::ostream& csv, std::ostream& info) {
    const Setup s = make_setup(cfg);
    const std::vector<SpectralField> starts = {SpectralField(s.basis), s.x0};
    const auto stats = invariant_stats(s.params, s.noise.spec, cfg.integrator, starts, cfg.T_long,
                                       cfg.burn_in, cfg.eps_exp);
    Csv out(csv, {"initial_energy", "mean_F", "se_F", "mean_dissipation", "se_dissipation",
                  "mean_exp_dissipation", "se_exp_dissipation", "margin"});
    for (std::size_t c = 0; c < stats.size(); ++c)
        out.cell(energy_functional(starts[c], cfg.physics.alpha))
            .cell(stats[c].F.mean)
            .cell(stats[c].F.standard_error)
            .cell(stats[c].dissipation.mean)
            .cell(stats[c].dissipation.standard_error)
            .cell(stats[c].exp_weighted_dissipation.mean)
            .cell(stats[c].exp_weighted_dissipation.standard_error)
            .cell(stats[c].margin)
            .end();
    const bool ok = agree_within(stats[0].F, stats[1].F) &&
                    agree_within(stats[0].dissipation, stats[1].dissipation);
    info << "time averages from both initial conditions " << (ok ? "agree" : "DISAGREE") << '\n';
    return ok ? kExitOk : kExitAssertion;
}

using Handler = int (*)(const SimConfig&, std::ostream&, std::ostream&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table = {
        {"validate", cmd_validate},       {"simulate", cmd_simulate},
        {"mc-energy", cmd_mc_energy},     {"mc-moments", cmd_mc_moments},
        {"mc-expmoments", cmd_mc_expmoments}, {"ou-test", cmd_ou_test},
        {"convergence", cmd_convergence}, {"variation", cmd_variation},
        {"be", cmd_be},                   {"invariant", cmd_invariant},
    };
    return table;
}

} // namespace

std::string format_real(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {
        "validate", "simulate", "mc-energy", "mc-moments", "mc-expmoments",
        "ou-test",  "convergence", "variation", "be",      "invariant"};
    return names;
}

int run_command(const std::string& subcommand, const SimConfig& cfg, std::ostream& csv,
                std::ostream& info) {
    const auto it = handlers().find(subcommand);
    if (it == handlers().end()) {
        info << "error: unknown subcommand '" << subcommand << "'\n";
        return kExitConfig;
    }
    for (const auto& w : cfg.warnings)
        info << "warning: " << w << '\n';
    try {
        return it->second(cfg, csv, info);
    } catch (const ConfigError& e) {
        info << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const PreconditionError& e) {
        info << "refused: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SingularOperatorError& e) {
        info << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        info << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const BlowUpError& e) {
        info << "blow-up: " << e.what() << '\n';
        return kExitAssertion;
    }
}

} // namespace lans
