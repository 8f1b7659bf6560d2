#include "oracles.hpp"

#include "lans/spectral_basis.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace lans;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_SUITE("spectral_basis") {

TEST_CASE("mode counts of the max-norm truncation") {
    CHECK(build_basis(1.0, 1)->size() == 8);
    CHECK(build_basis(1.0, 2)->size() == 24);
    CHECK(build_basis(2.0, 3)->size() == 48);
}

TEST_CASE("eigenvalues follow (2 pi / L)^2 |k|^2") {
    const auto basis = build_basis(1.0, 2);
    CHECK(basis->lambda_min() == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-14));
    CHECK(basis->lambda_max() == doctest::Approx(8.0 * 4.0 * kPi * kPi).epsilon(1e-14));
    for (std::size_t j = 0; j < basis->size(); ++j) {
        const auto k = basis->mode(j).k;
        CHECK(basis->eigenvalue(j) ==
              doctest::Approx(4.0 * kPi * kPi * k.norm2()).epsilon(1e-14));
        if (j > 0)
            CHECK(basis->eigenvalue(j) >= basis->eigenvalue(j - 1));
    }
}

TEST_CASE("representatives lie in the half space and come in cos/sin pairs") {
    const auto basis = build_basis(2.0, 2);
    for (std::size_t j = 0; j < basis->size(); j += 2) {
        const auto k = basis->mode(j).k;
        CHECK((k.k1 > 0 || (k.k1 == 0 && k.k2 > 0)));
        CHECK(basis->mode(j).parity == Parity::Cos);
        CHECK(basis->mode(j + 1).parity == Parity::Sin);
        CHECK(basis->mode(j + 1).k == k);
    }
}

TEST_CASE("invalid construction is rejected") {
    CHECK_THROWS_AS(build_basis(0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_basis(-1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_basis(1.0, 0), std::invalid_argument);
}

TEST_CASE("basis is orthonormal under grid quadrature") {
    for (double L : {1.0, 2.0 * kPi}) {
        const auto basis = build_basis(L, 2);
        for (std::size_t i = 0; i < basis->size(); ++i) {
            const auto gi = eval_on_grid(SpectralField::unit(basis, i));
            for (std::size_t j = 0; j < basis->size(); ++j) {
                const auto gj = eval_on_grid(SpectralField::unit(basis, j));
                CHECK(grid_inner_product(gi, gj) ==
                      doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
            }
        }
    }
}

TEST_CASE("modes are divergence free with the expected curl") {
    const auto basis = build_basis(1.5, 2);
    std::mt19937_64 gen(7);
    const auto u = oracle::random_field(basis, gen);
    const auto grad = gradient_on_grid(u);
    const auto omega = vorticity_on_grid(u);
    double scale = 0.0;
    for (double w : omega)
        scale = std::max(scale, std::abs(w));
    for (std::size_t p = 0; p < omega.size(); ++p) {
        CHECK(std::abs(grad.d[0][0][p] + grad.d[1][1][p]) <= 1e-12 * scale);
        CHECK(std::abs(grad.d[0][1][p] - grad.d[1][0][p] - omega[p]) <= 1e-12 * scale);
    }
}

TEST_CASE("point evaluation matches the closed form") {
    const double L = 2.0;
    const auto basis = build_basis(L, 1);
    const Vec2 x{0.3, 1.1};
    for (std::size_t j = 0; j < basis->size(); ++j) {
        const auto m = basis->mode(j);
        const double theta = 2.0 * kPi * (m.k.k1 * x[0] + m.k.k2 * x[1]) / L;
        const double f = m.parity == Parity::Cos ? std::cos(theta) : std::sin(theta);
        const double norm = std::sqrt(static_cast<double>(m.k.norm2()));
        const double a = std::sqrt(2.0) / L;
        const auto got = eval_field(SpectralField::unit(basis, j), std::span<const Vec2>(&x, 1));
        CHECK(got[0][0] == doctest::Approx(a * f * -m.k.k2 / norm).scale(1.0).epsilon(1e-14));
        CHECK(got[0][1] == doctest::Approx(a * f * m.k.k1 / norm).scale(1.0).epsilon(1e-14));
    }
}

TEST_CASE("coefficient inner product equals the grid inner product") {
    const auto basis = build_basis(1.0, 2);
    std::mt19937_64 gen(3);
    const auto u = oracle::random_field(basis, gen);
    const auto v = oracle::random_field(basis, gen);
    CHECK(inner_product(u, v) ==
          doctest::Approx(grid_inner_product(eval_on_grid(u), eval_on_grid(v))).epsilon(1e-12));
    // a finer grid integrates the same product exactly
    CHECK(inner_product(u, v) ==
          doctest::Approx(grid_inner_product(eval_on_grid(u, 13), eval_on_grid(v, 13)))
              .epsilon(1e-12));
}

TEST_CASE("Poincare chain lambda_1 |u|^2 <= |grad u|^2 <= |Au|^2 / lambda_1") {
    const auto basis = build_basis(1.0, 2);
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto u = oracle::random_field(basis, gen);
        const auto n = sobolev_norms(u);
        const double l1 = basis->lambda_min();
        CHECK(l1 * n.l2 * n.l2 <= n.grad * n.grad * (1.0 + 1e-14));
        CHECK(l1 * n.grad * n.grad <= n.stokes * n.stokes * (1.0 + 1e-14));
    }
}

TEST_CASE("Leray projection removes gradients and is idempotent") {
    const double L = 1.0;
    const auto basis = build_basis(L, 2);
    const int M = basis->grid().M;
    GridVectorField g(M, L);
    for (std::size_t p = 0; p < g.x.size(); ++p) {
        const auto x = g.position(p);
        // grad of sin(2 pi x / L) cos(4 pi y / L)
        const double a = 2.0 * kPi / L;
        g.x[p] = a * std::cos(a * x[0]) * std::cos(2.0 * a * x[1]);
        g.y[p] = -2.0 * a * std::sin(a * x[0]) * std::sin(2.0 * a * x[1]);
    }
    const auto pg = leray_project(g, basis);
    for (std::size_t j = 0; j < pg.size(); ++j)
        CHECK(std::abs(pg[j]) <= 1e-12);

    std::mt19937_64 gen(5);
    const auto u = oracle::random_field(basis, gen);
    const auto pu = leray_project(eval_on_grid(u), basis);
    CHECK(oracle::max_abs_diff(pu.coeffs(), u.coeffs()) <= 1e-12);
    const auto pu_fine = leray_project(eval_on_grid(u, 2 * M + 1), basis);
    CHECK(oracle::max_abs_diff(pu_fine.coeffs(), u.coeffs()) <= 1e-12);
}

TEST_CASE("Leray projection rejects aliasing grids and box mismatches") {
    const auto basis = build_basis(1.0, 2);
    CHECK_THROWS_AS(leray_project(GridVectorField(7, 1.0), basis), std::invalid_argument);
    CHECK_THROWS_AS(leray_project(GridVectorField(8, 2.0), basis), std::invalid_argument);
}

TEST_CASE("field arithmetic refuses mixed bases") {
    const auto a = SpectralField(build_basis(1.0, 1));
    const auto b = SpectralField(build_basis(1.0, 2));
    const auto c = SpectralField(build_basis(2.0, 1));
    CHECK_THROWS_AS(a + b, std::invalid_argument);
    CHECK_THROWS_AS(a - c, std::invalid_argument);
    CHECK_THROWS_AS(inner_product(a, c), std::invalid_argument);
    // equal parameters from separate builds are compatible
    CHECK_NOTHROW(a + SpectralField(build_basis(1.0, 1)));
}

TEST_CASE("snapshot round trip is exact") {
    const auto basis = build_basis(2.0 * kPi, 2);
    std::mt19937_64 gen(9);
    const auto u = oracle::random_field(basis, gen, 1e-3);
    std::stringstream ss;
    write_snapshot(ss, u);
    const auto back = read_snapshot(ss);
    CHECK(back.basis().same_as(*basis));
    for (std::size_t j = 0; j < u.size(); ++j)
        CHECK(back[j] == u[j]);
}

TEST_CASE("malformed snapshots are rejected") {
    std::stringstream bad_header("not a snapshot\n");
    CHECK_THROWS_AS(read_snapshot(bad_header), std::invalid_argument);

    const auto basis = build_basis(1.0, 1);
    std::stringstream ss;
    write_snapshot(ss, SpectralField(basis));
    std::string text = ss.str();
    text = text.substr(0, text.rfind('\n', text.size() - 2) + 1); // drop last mode
    std::stringstream truncated(text);
    CHECK_THROWS_AS(read_snapshot(truncated), std::invalid_argument);
}

} // TEST_SUITE
