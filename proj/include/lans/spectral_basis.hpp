#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace lans {

enum class Parity { Cos, Sin };

/// Lattice index of a Fourier mode. Stored representatives satisfy
/// k1 > 0, or k1 == 0 and k2 > 0.
struct WaveVector {
    int k1 = 0;
    int k2 = 0;

    int norm2() const { return k1 * k1 + k2 * k2; }
    friend bool operator==(const WaveVector&, const WaveVector&) = default;
};

struct Mode {
    WaveVector k;
    Parity parity = Parity::Cos;
};

using Vec2 = std::array<double, 2>;

/// Uniform M x M collocation grid with the basis tabulated on it.
/// Point p = i1 * M + i2 sits at (i1 * L / M, i2 * L / M).
struct QuadratureGrid {
    int M = 0;
    double weight = 0.0;          // (L / M)^2
    std::vector<double> trig;     // f_j(theta_j(x_p)), row-major [mode][point]
    std::vector<double> dtrig;    // f_j'(theta_j(x_p))

    std::size_t points() const { return static_cast<std::size_t>(M) * M; }
};

/// Real divergence-free eigenbasis of the Stokes operator on the periodic box
/// [0, L]^2, truncated to the max-norm ball |k|_inf <= cutoff.
///
/// Mode j is sqrt(2) / L * {cos, sin}(2 pi k.x / L) * (-k2, k1) / |k| with
/// eigenvalue (2 pi / L)^2 |k|^2. Ordering is by (|k|^2, k1, k2, parity) with
/// cos before sin; snapshots depend on it.
class Basis {
public:
    Basis(double L, int cutoff);

    double L() const { return L_; }
    int cutoff() const { return cutoff_; }
    std::size_t size() const { return modes_.size(); }

    const std::vector<Mode>& modes() const { return modes_; }
    const Mode& mode(std::size_t j) const { return modes_[j]; }
    std::span<const double> eigenvalues() const { return eigenvalues_; }
    double eigenvalue(std::size_t j) const { return eigenvalues_[j]; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }

    /// sqrt(2) / L, the L^2 normalisation of every mode.
    double amplitude() const { return amplitude_; }
    const Vec2& polarization(std::size_t j) const { return polarization_[j]; }
    /// 2 pi k / L.
    const Vec2& wavenumber(std::size_t j) const { return wavenumber_[j]; }
    /// Scalar curl of mode j divided by f_j'(theta): amplitude * 2 pi |k| / L.
    double curl_factor(std::size_t j) const { return curl_factor_[j]; }

    /// Exact quadrature grid for cubic products, M = 4 * cutoff.
    const QuadratureGrid& grid() const { return grid_; }

    bool same_as(const Basis& other) const {
        return this == &other || (L_ == other.L_ && cutoff_ == other.cutoff_);
    }

private:
    double L_;
    int cutoff_;
    std::vector<Mode> modes_;
    std::vector<double> eigenvalues_;
    std::vector<Vec2> polarization_;
    std::vector<Vec2> wavenumber_;
    std::vector<double> curl_factor_;
    double amplitude_;
    double lambda_min_;
    double lambda_max_;
    QuadratureGrid grid_;
};

using BasisPtr = std::shared_ptr<const Basis>;

/// Throws std::invalid_argument for L <= 0 or cutoff < 1.
BasisPtr build_basis(double L, int cutoff);

/// Coefficient vector over a Basis. Represents sum_j coeffs[j] * e_j(x).
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(BasisPtr basis);
    SpectralField(BasisPtr basis, std::vector<double> coeffs);

    static SpectralField unit(BasisPtr basis, std::size_t j, double value = 1.0);

    const Basis& basis() const { return *basis_; }
    const BasisPtr& basis_ptr() const { return basis_; }
    std::size_t size() const { return coeffs_.size(); }

    std::span<const double> coeffs() const { return coeffs_; }
    std::span<double> coeffs() { return coeffs_; }
    double operator[](std::size_t j) const { return coeffs_[j]; }
    double& operator[](std::size_t j) { return coeffs_[j]; }

    bool all_finite() const;

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s);

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
    SpectralField operator-() const { return *this * -1.0; }

private:
    BasisPtr basis_;
    std::vector<double> coeffs_;
};

/// Throws std::invalid_argument naming `op` when the fields live on different bases.
void require_same_basis(const SpectralField& a, const SpectralField& b, const char* op);

/// Vector field sampled on a uniform M x M grid over [0, L]^2.
struct GridVectorField {
    int M = 0;
    double L = 0.0;
    std::vector<double> x;
    std::vector<double> y;

    GridVectorField() = default;
    GridVectorField(int M_, double L_)
        : M(M_), L(L_), x(static_cast<std::size_t>(M_) * M_, 0.0),
          y(static_cast<std::size_t>(M_) * M_, 0.0) {}

    Vec2 position(std::size_t p) const {
        const double h = L / M;
        return {h * static_cast<double>(p / M), h * static_cast<double>(p % M)};
    }
};

/// Velocity gradient on a grid, d_i v_j stored as gradient[i][j].
struct GridGradient {
    int M = 0;
    std::array<std::array<std::vector<double>, 2>, 2> d;
};

std::vector<Vec2> eval_field(const SpectralField& u, std::span<const Vec2> points);

/// Samples u on the basis quadrature grid (M = 4 * cutoff).
GridVectorField eval_on_grid(const SpectralField& u);
/// Samples u on an arbitrary M x M grid.
GridVectorField eval_on_grid(const SpectralField& u, int M);
GridGradient gradient_on_grid(const SpectralField& u);
std::vector<double> vorticity_on_grid(const SpectralField& u);

double inner_product(const SpectralField& u, const SpectralField& v);

struct SobolevNorms {
    double l2 = 0.0;     // |u|_2
    double grad = 0.0;   // |grad u|_2 = |A^{1/2} u|_2
    double stokes = 0.0; // |A u|_2
};

SobolevNorms sobolev_norms(const SpectralField& u);

/// L^2 projection of grid samples onto the truncated divergence-free space.
/// Requires samples.M >= 4 * cutoff; coarser grids alias and are rejected.
SpectralField leray_project(const GridVectorField& samples, const BasisPtr& basis);

/// Discrete L^2 inner product of two grid fields.
double grid_inner_product(const GridVectorField& a, const GridVectorField& b);

// Snapshot text format, version 1.
void write_snapshot(std::ostream& os, const SpectralField& u);
SpectralField read_snapshot(std::istream& is);

} // namespace lans
