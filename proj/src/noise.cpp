#include "lans/noise.hpp"

#include "lans/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lans {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t index)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL))) {}

void RngStream::fill_normal(std::span<double> out) {
    for (double& x : out)
        x = normal_(engine_);
}

NoiseSetup make_noise(double epsilon, double sigma, const BasisPtr& basis, double alpha,
                      std::uint64_t seed) {
    if (!(sigma >= 0.0))
        throw std::invalid_argument("make_noise: sigma must be non-negative");
    if (!std::isfinite(epsilon))
        throw std::invalid_argument("make_noise: epsilon must be finite");

    NoiseSetup out;
    NoiseSpec& spec = out.spec;
    spec.basis = basis;
    spec.epsilon = epsilon;
    spec.sigma = sigma;
    spec.seed = seed;
    spec.q.resize(basis->size());
    for (std::size_t j = 0; j < basis->size(); ++j) {
        const double lambda = basis->eigenvalue(j);
        spec.q[j] = sigma * std::pow(lambda, -0.5 * (1.0 + epsilon));
        spec.trace_Q += spec.q[j] * spec.q[j];
        spec.trace_QAQ += spec.q[j] * spec.q[j] * lambda;
    }

    constexpr double dimension = 2.0;
    AdmissibilityReport& report = out.report;
    report.trace_class = epsilon > dimension / 2.0;
    report.invertible_on_D_A32 = epsilon <= 2.0;
    report.truncated_trace = spec.trace_Q + spec.trace_QAQ;
    report.trace_alpha = spec.trace_alpha(alpha);

    // sum over the full lattice of sigma^2 lambda_k^{-epsilon} outside the disc
    // of radius N (contained in the truncation square), by comparison with
    // 2 pi int_N^inf (c r^2)^{-epsilon} r dr.
    if (report.trace_class) {
        const double c = std::pow(2.0 * std::numbers::pi / basis->L(), 2);
        const double R = basis->cutoff();
        report.tail_estimate = sigma * sigma * 2.0 * std::numbers::pi * std::pow(c, -epsilon) *
                               std::pow(R, 2.0 - 2.0 * epsilon) / (2.0 * epsilon - 2.0);
    } else {
        report.tail_estimate = sigma > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }

    if (!report.trace_class) {
        std::ostringstream msg;
        msg << "epsilon = " << epsilon
            << " violates the trace-class condition epsilon > d/2 = 1; truncated trace "
               "grows without bound as cutoff increases";
        report.warnings.push_back(msg.str());
    }
    if (!report.invertible_on_D_A32) {
        std::ostringstream msg;
        msg << "epsilon = " << epsilon
            << " exceeds 2; D(A^{3/2}) is not contained in D(Q^{-1})";
        report.warnings.push_back(msg.str());
    }
    if (sigma == 0.0)
        report.warnings.push_back("sigma = 0: Q is not invertible");
    return out;
}

SpectralField sample_increment(const NoiseSpec& spec, double dt, RngStream& rng) {
    if (!(dt > 0.0))
        throw std::invalid_argument("sample_increment: dt must be positive");
    SpectralField out(spec.basis);
    const double sdt = std::sqrt(dt);
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = spec.q[j] * sdt * rng.normal();
    return out;
}

SpectralField q_apply(const NoiseSpec& spec, const SpectralField& u, int power) {
    if (power != 1 && power != -1)
        throw std::invalid_argument("q_apply: power must be +1 or -1");
    if (!u.basis().same_as(*spec.basis))
        throw std::invalid_argument("q_apply: field and noise live on different bases");
    if (power == -1 && !(spec.sigma > 0.0))
        throw SingularOperatorError("q_apply: Q^{-1} requested but sigma = 0");
    SpectralField out = u;
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = power == 1 ? out[j] * spec.q[j] : out[j] / spec.q[j];
    return out;
}

} // namespace lans
