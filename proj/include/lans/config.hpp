#pragma once

#include "lans/integrator.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lans {

/// Parse failure; carries the 1-based line and the offending key when known.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, std::string key, const std::string& what)
        : std::runtime_error(what), line_(line), key_(std::move(key)) {}
    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

struct SimConfig {
    PhysicalParams physics{1.0, 0.0, 6.283185307179586};
    int cutoff = 2;
    double epsilon = 1.5;
    double sigma = 0.5;
    std::uint64_t seed = 42;
    IntegratorConfig integrator;

    // experiment fields
    std::size_t M = 100;
    int k = 1;
    double eps_exp = 0.0;
    double t = 0.2;
    double burn_in = 50.0;
    double T_long = 200.0;
    double delta_fd = 1e-5;
    std::string output_path;

    // initial condition: x0_snapshot if set, else the reference field scaled to F = x0_energy
    double x0_energy = 1.0;
    std::string x0_snapshot;
    std::string snapshot_path;

    std::string observable = "linear";
    std::size_t observable_mode = 0;
    std::size_t h_mode = 0;
    double clip = 10.0;

    /// Admissibility warnings collected while validating.
    std::vector<std::string> warnings;
};

/// "key = value" per line, '#' starts a comment. Unknown keys, duplicates,
/// malformed values and range violations raise ConfigError.
SimConfig parse_config(std::string_view text);

SimConfig load_config(const std::string& path);

/// Deterministic smooth field with coefficients proportional to 1 / lambda_j,
/// scaled so that F = energy (zero field when energy = 0).
SpectralField reference_field(const BasisPtr& basis, double alpha, double energy);

} // namespace lans
