#include "lans/config.hpp"

#include "lans/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace lans {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

class LineParser {
public:
    LineParser(int line, std::string key, std::string value)
        : line_(line), key_(std::move(key)), value_(std::move(value)) {}

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError(line_, key_,
                          "line " + std::to_string(line_) + ": key '" + key_ + "': " + why);
    }

    double real() const {
        const char* begin = value_.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0' || !std::isfinite(v))
            fail("expected a finite number, got '" + value_ + "'");
        return v;
    }

    long long integer() const {
        long long v = 0;
        const auto* first = value_.data();
        const auto* last = value_.data() + value_.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            fail("expected an integer, got '" + value_ + "'");
        return v;
    }

    std::uint64_t unsigned_integer() const {
        std::uint64_t v = 0;
        const auto* first = value_.data();
        const auto* last = value_.data() + value_.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            fail("expected a non-negative integer, got '" + value_ + "'");
        return v;
    }

    bool boolean() const {
        if (value_ == "true" || value_ == "1")
            return true;
        if (value_ == "false" || value_ == "0")
            return false;
        fail("expected true or false, got '" + value_ + "'");
    }

    const std::string& text() const { return value_; }

private:
    int line_;
    std::string key_;
    std::string value_;
};

using Setter = std::function<void(SimConfig&, const LineParser&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"nu", [](SimConfig& c, const LineParser& v) { c.physics.nu = v.real(); }},
        {"alpha", [](SimConfig& c, const LineParser& v) { c.physics.alpha = v.real(); }},
        {"L", [](SimConfig& c, const LineParser& v) { c.physics.L = v.real(); }},
        {"cutoff",
         [](SimConfig& c, const LineParser& v) {
             const long long n = v.integer();
             if (n < 1 || n > 64)
                 v.fail("cutoff must lie in [1, 64]");
             c.cutoff = static_cast<int>(n);
         }},
        {"epsilon", [](SimConfig& c, const LineParser& v) { c.epsilon = v.real(); }},
        {"sigma", [](SimConfig& c, const LineParser& v) { c.sigma = v.real(); }},
        {"seed", [](SimConfig& c, const LineParser& v) { c.seed = v.unsigned_integer(); }},
        {"scheme",
         [](SimConfig& c, const LineParser& v) {
             try {
                 c.integrator.scheme = parse_scheme(v.text());
             } catch (const std::invalid_argument&) {
                 v.fail("expected semi_implicit_em, exponential_em or rk4_deterministic");
             }
         }},
        {"dt", [](SimConfig& c, const LineParser& v) { c.integrator.dt = v.real(); }},
        {"t_end", [](SimConfig& c, const LineParser& v) { c.integrator.t_end = v.real(); }},
        {"record_every",
         [](SimConfig& c, const LineParser& v) {
             const long long n = v.integer();
             if (n < 1)
                 v.fail("record_every must be at least 1");
             c.integrator.record_every = static_cast<int>(n);
         }},
        {"nonlinear", [](SimConfig& c, const LineParser& v) { c.integrator.nonlinear = v.boolean(); }},
        {"M",
         [](SimConfig& c, const LineParser& v) {
             const long long n = v.integer();
             if (n < 2)
                 v.fail("M must be at least 2");
             c.M = static_cast<std::size_t>(n);
         }},
        {"k",
         [](SimConfig& c, const LineParser& v) {
             const long long n = v.integer();
             if (n < 1)
                 v.fail("k must be at least 1");
             c.k = static_cast<int>(n);
         }},
        {"eps_exp", [](SimConfig& c, const LineParser& v) { c.eps_exp = v.real(); }},
        {"t", [](SimConfig& c, const LineParser& v) { c.t = v.real(); }},
        {"burn_in", [](SimConfig& c, const LineParser& v) { c.burn_in = v.real(); }},
        {"T_long", [](SimConfig& c, const LineParser& v) { c.T_long = v.real(); }},
        {"delta_fd", [](SimConfig& c, const LineParser& v) { c.delta_fd = v.real(); }},
        {"output_path", [](SimConfig& c, const LineParser& v) { c.output_path = v.text(); }},
        {"x0_energy", [](SimConfig& c, const LineParser& v) { c.x0_energy = v.real(); }},
        {"x0_snapshot", [](SimConfig& c, const LineParser& v) { c.x0_snapshot = v.text(); }},
        {"snapshot_path", [](SimConfig& c, const LineParser& v) { c.snapshot_path = v.text(); }},
        {"observable",
         [](SimConfig& c, const LineParser& v) {
             try {
                 parse_observable(v.text());
             } catch (const std::invalid_argument&) {
                 v.fail("expected linear, energy or clipped_energy");
             }
             c.observable = v.text();
         }},
        {"observable_mode",
         [](SimConfig& c, const LineParser& v) {
             c.observable_mode = static_cast<std::size_t>(v.unsigned_integer());
         }},
        {"h_mode",
         [](SimConfig& c, const LineParser& v) { c.h_mode = static_cast<std::size_t>(v.unsigned_integer()); }},
        {"clip", [](SimConfig& c, const LineParser& v) { c.clip = v.real(); }},
    };
    return table;
}

void range_checks(SimConfig& c, const std::map<std::string, int>& lines) {
    auto check = [&](bool ok, const std::string& key, const std::string& why) {
        if (ok)
            return;
        const auto it = lines.find(key);
        const int line = it == lines.end() ? 0 : it->second;
        throw ConfigError(line, key,
                          (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                              "key '" + key + "': " + why);
    };
    check(c.physics.nu >= 0.0, "nu", "viscosity must be positive");
    check(c.physics.nu > 0.0 || c.sigma == 0.0, "nu",
          "nu = 0 is only allowed for deterministic runs (sigma = 0)");
    check(c.physics.alpha >= 0.0, "alpha", "alpha must be non-negative");
    check(c.physics.L > 0.0, "L", "box size must be positive");
    check(c.sigma >= 0.0, "sigma", "sigma must be non-negative");
    check(c.integrator.dt > 0.0, "dt", "dt must be positive");
    check(c.integrator.t_end >= 0.0, "t_end", "t_end must be non-negative");
    check(c.integrator.t_end == 0.0 || c.integrator.dt <= c.integrator.t_end, "dt",
          "dt must not exceed t_end");
    const double steps = c.integrator.t_end / c.integrator.dt;
    check(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps), "t_end",
          "t_end must be a whole number of steps");
    check(c.integrator.scheme != Scheme::RK4Deterministic || c.sigma == 0.0, "scheme",
          "rk4_deterministic requires sigma = 0");
    check(c.eps_exp >= 0.0, "eps_exp", "eps_exp must be non-negative");
    check(c.t > 0.0, "t", "t must be positive");
    check(c.burn_in >= 0.0, "burn_in", "burn_in must be non-negative");
    check(c.burn_in < c.T_long, "burn_in", "burn_in must be smaller than T_long");
    check(c.delta_fd > 0.0, "delta_fd", "delta_fd must be positive");
    check(c.x0_energy >= 0.0, "x0_energy", "x0_energy must be non-negative");
    check(c.clip > 0.0, "clip", "clip must be positive");

    const auto basis = build_basis(c.physics.L, c.cutoff);
    check(c.observable_mode < basis->size(), "observable_mode", "mode index out of range");
    check(c.h_mode < basis->size(), "h_mode", "mode index out of range");
    const NoiseSetup noise = make_noise(c.epsilon, c.sigma, basis, c.physics.alpha, c.seed);
    for (const auto& w : noise.report.warnings)
        if (c.sigma > 0.0)
            c.warnings.push_back(w);
}

} // namespace

SimConfig parse_config(std::string_view text) {
    SimConfig cfg;
    std::map<std::string, int> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                              : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        const std::string line = trim(raw);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "", "line " + std::to_string(line_no) +
                                               ": expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const auto& table = setters();
        const auto it = table.find(key);
        if (it == table.end())
            throw ConfigError(line_no, key,
                              "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (seen.count(key))
            throw ConfigError(line_no, key,
                              "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        if (value.empty())
            throw ConfigError(line_no, key,
                              "line " + std::to_string(line_no) + ": key '" + key + "' has no value");
        seen[key] = line_no;
        it->second(cfg, LineParser(line_no, key, value));
    }
    range_checks(cfg, seen);
    return cfg;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(0, "", "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

SpectralField reference_field(const BasisPtr& basis, double alpha, double energy) {
    SpectralField u(basis);
    if (energy == 0.0)
        return u;
    for (std::size_t j = 0; j < u.size(); ++j)
        u[j] = (j % 2 == 0 ? 1.0 : -0.5) / basis->eigenvalue(j);
    const double F = energy_functional(u, alpha);
    u *= std::sqrt(energy / F);
    return u;
}

} // namespace lans
