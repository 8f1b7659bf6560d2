#include "lans/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

namespace lans {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double trig_value(Parity parity, double theta) {
    return parity == Parity::Cos ? std::cos(theta) : std::sin(theta);
}

double trig_derivative(Parity parity, double theta) {
    return parity == Parity::Cos ? -std::sin(theta) : std::cos(theta);
}

double phase(const Vec2& wavenumber, const Vec2& x) {
    return wavenumber[0] * x[0] + wavenumber[1] * x[1];
}

} // namespace

Basis::Basis(double L, int cutoff) : L_(L), cutoff_(cutoff) {
    if (!(L > 0.0) || !std::isfinite(L))
        throw std::invalid_argument("build_basis: box size L must be positive");
    if (cutoff < 1)
        throw std::invalid_argument("build_basis: cutoff must be at least 1");

    for (int k1 = 0; k1 <= cutoff; ++k1) {
        for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
            if (k1 == 0 && k2 <= 0)
                continue;
            modes_.push_back({{k1, k2}, Parity::Cos});
            modes_.push_back({{k1, k2}, Parity::Sin});
        }
    }
    std::sort(modes_.begin(), modes_.end(), [](const Mode& a, const Mode& b) {
        return std::make_tuple(a.k.norm2(), a.k.k1, a.k.k2, static_cast<int>(a.parity)) <
               std::make_tuple(b.k.norm2(), b.k.k1, b.k.k2, static_cast<int>(b.parity));
    });

    const double scale = kTwoPi / L;
    amplitude_ = std::sqrt(2.0) / L;
    for (const Mode& m : modes_) {
        const double knorm = std::sqrt(static_cast<double>(m.k.norm2()));
        eigenvalues_.push_back(scale * scale * m.k.norm2());
        polarization_.push_back({-m.k.k2 / knorm, m.k.k1 / knorm});
        wavenumber_.push_back({scale * m.k.k1, scale * m.k.k2});
        curl_factor_.push_back(amplitude_ * scale * knorm);
    }
    lambda_min_ = *std::min_element(eigenvalues_.begin(), eigenvalues_.end());
    lambda_max_ = *std::max_element(eigenvalues_.begin(), eigenvalues_.end());

    grid_.M = 4 * cutoff;
    grid_.weight = (L / grid_.M) * (L / grid_.M);
    const std::size_t P = grid_.points();
    grid_.trig.resize(modes_.size() * P);
    grid_.dtrig.resize(modes_.size() * P);
    const double h = L / grid_.M;
    for (std::size_t j = 0; j < modes_.size(); ++j) {
        for (std::size_t p = 0; p < P; ++p) {
            const Vec2 x{h * static_cast<double>(p / grid_.M),
                         h * static_cast<double>(p % grid_.M)};
            const double theta = phase(wavenumber_[j], x);
            grid_.trig[j * P + p] = trig_value(modes_[j].parity, theta);
            grid_.dtrig[j * P + p] = trig_derivative(modes_[j].parity, theta);
        }
    }
}

BasisPtr build_basis(double L, int cutoff) {
    return std::make_shared<const Basis>(L, cutoff);
}

SpectralField::SpectralField(BasisPtr basis)
    : basis_(std::move(basis)), coeffs_(basis_->size(), 0.0) {}

SpectralField::SpectralField(BasisPtr basis, std::vector<double> coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != basis_->size())
        throw std::invalid_argument("SpectralField: coefficient count does not match basis");
}

SpectralField SpectralField::unit(BasisPtr basis, std::size_t j, double value) {
    SpectralField u(std::move(basis));
    if (j >= u.size())
        throw std::invalid_argument("SpectralField::unit: mode index out of range");
    u.coeffs_[j] = value;
    return u;
}

bool SpectralField::all_finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    require_same_basis(*this, other, "operator+=");
    for (std::size_t j = 0; j < coeffs_.size(); ++j)
        coeffs_[j] += other.coeffs_[j];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    require_same_basis(*this, other, "operator-=");
    for (std::size_t j = 0; j < coeffs_.size(); ++j)
        coeffs_[j] -= other.coeffs_[j];
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (double& c : coeffs_)
        c *= s;
    return *this;
}

void require_same_basis(const SpectralField& a, const SpectralField& b, const char* op) {
    if (!a.basis_ptr() || !b.basis_ptr() || !a.basis().same_as(b.basis()))
        throw std::invalid_argument(std::string(op) + ": fields live on different bases");
}

std::vector<Vec2> eval_field(const SpectralField& u, std::span<const Vec2> points) {
    const Basis& basis = u.basis();
    std::vector<Vec2> out(points.size(), Vec2{0.0, 0.0});
    for (std::size_t p = 0; p < points.size(); ++p) {
        Vec2 acc{0.0, 0.0};
        for (std::size_t j = 0; j < basis.size(); ++j) {
            if (u[j] == 0.0)
                continue;
            const double f = trig_value(basis.mode(j).parity, phase(basis.wavenumber(j), points[p]));
            const double s = u[j] * basis.amplitude() * f;
            acc[0] += s * basis.polarization(j)[0];
            acc[1] += s * basis.polarization(j)[1];
        }
        out[p] = acc;
    }
    return out;
}

GridVectorField eval_on_grid(const SpectralField& u) {
    const Basis& basis = u.basis();
    const QuadratureGrid& grid = basis.grid();
    const std::size_t P = grid.points();
    GridVectorField out(grid.M, basis.L());
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if (u[j] == 0.0)
            continue;
        const double s = u[j] * basis.amplitude();
        const double sx = s * basis.polarization(j)[0];
        const double sy = s * basis.polarization(j)[1];
        const double* f = &grid.trig[j * P];
        for (std::size_t p = 0; p < P; ++p) {
            out.x[p] += sx * f[p];
            out.y[p] += sy * f[p];
        }
    }
    return out;
}

GridVectorField eval_on_grid(const SpectralField& u, int M) {
    if (M == u.basis().grid().M)
        return eval_on_grid(u);
    if (M < 1)
        throw std::invalid_argument("eval_on_grid: grid size must be positive");
    GridVectorField out(M, u.basis().L());
    std::vector<Vec2> points(out.x.size());
    for (std::size_t p = 0; p < points.size(); ++p)
        points[p] = out.position(p);
    const auto samples = eval_field(u, points);
    for (std::size_t p = 0; p < points.size(); ++p) {
        out.x[p] = samples[p][0];
        out.y[p] = samples[p][1];
    }
    return out;
}

GridGradient gradient_on_grid(const SpectralField& u) {
    const Basis& basis = u.basis();
    const QuadratureGrid& grid = basis.grid();
    const std::size_t P = grid.points();
    GridGradient out;
    out.M = grid.M;
    for (auto& row : out.d)
        for (auto& comp : row)
            comp.assign(P, 0.0);
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if (u[j] == 0.0)
            continue;
        const double s = u[j] * basis.amplitude();
        const Vec2& kap = basis.wavenumber(j);
        const Vec2& pol = basis.polarization(j);
        const double* df = &grid.dtrig[j * P];
        for (int i = 0; i < 2; ++i) {
            for (int m = 0; m < 2; ++m) {
                const double c = s * kap[i] * pol[m];
                if (c == 0.0)
                    continue;
                auto& dst = out.d[i][m];
                for (std::size_t p = 0; p < P; ++p)
                    dst[p] += c * df[p];
            }
        }
    }
    return out;
}

std::vector<double> vorticity_on_grid(const SpectralField& u) {
    const Basis& basis = u.basis();
    const QuadratureGrid& grid = basis.grid();
    const std::size_t P = grid.points();
    std::vector<double> omega(P, 0.0);
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if (u[j] == 0.0)
            continue;
        const double c = u[j] * basis.curl_factor(j);
        const double* df = &grid.dtrig[j * P];
        for (std::size_t p = 0; p < P; ++p)
            omega[p] += c * df[p];
    }
    return omega;
}

double inner_product(const SpectralField& u, const SpectralField& v) {
    require_same_basis(u, v, "inner_product");
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j)
        acc += u[j] * v[j];
    return acc;
}

SobolevNorms sobolev_norms(const SpectralField& u) {
    const auto lambda = u.basis().eigenvalues();
    double l2 = 0.0, grad = 0.0, stokes = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double c2 = u[j] * u[j];
        l2 += c2;
        grad += lambda[j] * c2;
        stokes += lambda[j] * lambda[j] * c2;
    }
    return {std::sqrt(l2), std::sqrt(grad), std::sqrt(stokes)};
}

SpectralField leray_project(const GridVectorField& samples, const BasisPtr& basis) {
    if (samples.M < 4 * basis->cutoff())
        throw std::invalid_argument("leray_project: grid of " + std::to_string(samples.M) +
                                    " points per axis aliases; need at least " +
                                    std::to_string(4 * basis->cutoff()));
    if (std::abs(samples.L - basis->L()) > 1e-12 * basis->L())
        throw std::invalid_argument("leray_project: grid box size differs from basis");
    const std::size_t P = static_cast<std::size_t>(samples.M) * samples.M;
    if (samples.x.size() != P || samples.y.size() != P)
        throw std::invalid_argument("leray_project: sample arrays have the wrong size");

    SpectralField out(basis);
    const double h = samples.L / samples.M;
    const double weight = h * h;
    const bool tabulated = samples.M == basis->grid().M;
    const QuadratureGrid& grid = basis->grid();
    for (std::size_t j = 0; j < basis->size(); ++j) {
        const Vec2& pol = basis->polarization(j);
        double acc = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            double f;
            if (tabulated) {
                f = grid.trig[j * P + p];
            } else {
                f = trig_value(basis->mode(j).parity, phase(basis->wavenumber(j), samples.position(p)));
            }
            acc += (samples.x[p] * pol[0] + samples.y[p] * pol[1]) * f;
        }
        out[j] = acc * weight * basis->amplitude();
    }
    return out;
}

double grid_inner_product(const GridVectorField& a, const GridVectorField& b) {
    if (a.M != b.M)
        throw std::invalid_argument("grid_inner_product: grid sizes differ");
    const double h = a.L / a.M;
    double acc = 0.0;
    for (std::size_t p = 0; p < a.x.size(); ++p)
        acc += a.x[p] * b.x[p] + a.y[p] * b.y[p];
    return acc * h * h;
}

void write_snapshot(std::ostream& os, const SpectralField& u) {
    const Basis& basis = u.basis();
    char buf[64];
    os << "lans-alpha-snapshot v1\n";
    std::snprintf(buf, sizeof buf, "%.17g", basis.L());
    os << "L=" << buf << " cutoff=" << basis.cutoff() << " n=" << basis.size() << '\n';
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const Mode& m = basis.mode(j);
        std::snprintf(buf, sizeof buf, "%.17g", u[j]);
        os << m.k.k1 << ' ' << m.k.k2 << ' ' << (m.parity == Parity::Cos ? "cos" : "sin") << ' '
           << buf << '\n';
    }
}

SpectralField read_snapshot(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "lans-alpha-snapshot v1")
        throw std::invalid_argument("read_snapshot: missing or unsupported header");
    if (!std::getline(is, line))
        throw std::invalid_argument("read_snapshot: missing basis line");
    double L = 0.0;
    int cutoff = 0;
    std::size_t n = 0;
    if (std::sscanf(line.c_str(), "L=%lf cutoff=%d n=%zu", &L, &cutoff, &n) != 3)
        throw std::invalid_argument("read_snapshot: malformed basis line '" + line + "'");
    auto basis = build_basis(L, cutoff);
    if (basis->size() != n)
        throw std::invalid_argument("read_snapshot: mode count does not match cutoff");
    SpectralField u(basis);
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::getline(is, line))
            throw std::invalid_argument("read_snapshot: truncated mode list");
        std::istringstream row(line);
        int k1 = 0, k2 = 0;
        std::string parity;
        double c = 0.0;
        if (!(row >> k1 >> k2 >> parity >> c))
            throw std::invalid_argument("read_snapshot: malformed mode line '" + line + "'");
        const Mode& m = basis->mode(j);
        const Parity p = parity == "cos" ? Parity::Cos : Parity::Sin;
        if (m.k.k1 != k1 || m.k.k2 != k2 || m.parity != p || (parity != "cos" && parity != "sin"))
            throw std::invalid_argument("read_snapshot: mode order differs from basis at line " +
                                        std::to_string(j + 3));
        u[j] = c;
    }
    return u;
}

} // namespace lans
