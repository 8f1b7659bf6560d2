#pragma once

#include "lans/spectral_basis.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lans {

/// Independent, reproducible random stream. Stream `index` of a seed is
/// derived by SplitMix64 mixing, so ensemble member i sees the same numbers
/// regardless of how members are scheduled.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t index);

    double normal() { return normal_(engine_); }
    void fill_normal(std::span<double> out);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Diagonal covariance Q = sigma * A^{-(1+epsilon)/2} on the truncated basis.
struct NoiseSpec {
    BasisPtr basis;
    double epsilon = 1.5;
    double sigma = 0.0;
    std::vector<double> q; // per-mode multipliers
    double trace_Q = 0.0;   // sum q_j^2
    double trace_QAQ = 0.0; // sum q_j^2 lambda_j
    std::uint64_t seed = 0;

    /// Tr[Q*(I + alpha^2 A) Q] on the truncation.
    double trace_alpha(double alpha) const { return trace_Q + alpha * alpha * trace_QAQ; }
};

struct AdmissibilityReport {
    bool trace_class = false;       // epsilon > d/2: Tr[Q*(I+A)Q] finite as cutoff -> infinity
    bool invertible_on_D_A32 = false; // epsilon <= 2: D(A^{3/2}) inside D(Q^{-1})
    double truncated_trace = 0.0;   // Tr[Q*(I+A)Q] on the truncation
    double trace_alpha = 0.0;       // Tr[Q*(I+alpha^2 A)Q] on the truncation
    double tail_estimate = 0.0;     // integral bound on the discarded part (inf if divergent)
    std::vector<std::string> warnings;
};

struct NoiseSetup {
    NoiseSpec spec;
    AdmissibilityReport report;
};

/// Throws std::invalid_argument for sigma < 0. Inadmissible epsilon only warns.
NoiseSetup make_noise(double epsilon, double sigma, const BasisPtr& basis, double alpha,
                      std::uint64_t seed = 0);

/// q_j sqrt(dt) xi_j with xi_j standard normal. Throws std::invalid_argument for dt <= 0.
SpectralField sample_increment(const NoiseSpec& spec, double dt, RngStream& rng);

/// Q u (power +1) or Q^{-1} u (power -1). Q^{-1} with sigma = 0 throws SingularOperatorError.
SpectralField q_apply(const NoiseSpec& spec, const SpectralField& u, int power);

} // namespace lans
