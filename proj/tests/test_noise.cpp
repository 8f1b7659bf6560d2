#include "oracles.hpp"

#include "lans/errors.hpp"
#include "lans/noise.hpp"
#include "lans/operators.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace lans;

TEST_SUITE("noise") {

TEST_CASE("trace of Q on the unit-wavenumber box") {
    const auto basis = build_basis(2.0 * std::numbers::pi, 1);
    const auto setup = make_noise(1.0, 1.0, basis, 0.0);
    CHECK(setup.spec.trace_Q == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(setup.spec.trace_QAQ == doctest::Approx(4.0 + 4.0 * 0.5).epsilon(1e-14));
    CHECK_FALSE(setup.report.trace_class); // epsilon = 1 sits on the boundary
}

TEST_CASE("admissibility flags") {
    const auto basis = build_basis(1.0, 2);
    const auto low = make_noise(0.5, 1.0, basis, 0.0);
    CHECK_FALSE(low.report.trace_class);
    CHECK(low.report.invertible_on_D_A32);
    CHECK(std::isinf(low.report.tail_estimate));
    CHECK_FALSE(low.report.warnings.empty());

    const auto good = make_noise(1.5, 1.0, basis, 0.0);
    CHECK(good.report.trace_class);
    CHECK(good.report.invertible_on_D_A32);
    CHECK(std::isfinite(good.report.tail_estimate));
    CHECK(good.report.warnings.empty());

    const auto high = make_noise(2.5, 1.0, basis, 0.0);
    CHECK(high.report.trace_class);
    CHECK_FALSE(high.report.invertible_on_D_A32);

    CHECK_THROWS_AS(make_noise(1.5, -1.0, basis, 0.0), std::invalid_argument);
}

TEST_CASE("truncated Tr[Q*(I+A)Q] grows without bound when epsilon <= 1") {
    double previous = 0.0;
    for (int n : {2, 4, 8, 16}) {
        const auto rep =
            make_noise(0.5, 1.0, build_basis(2.0 * std::numbers::pi, n), 0.0).report;
        CHECK(rep.truncated_trace > previous * 1.3);
        previous = rep.truncated_trace;
    }
}

TEST_CASE("trace_alpha equals the direct weighted sum") {
    const auto basis = build_basis(1.0, 2);
    const auto spec = make_noise(1.5, 0.7, basis, 0.0).spec;
    const double alpha = 0.3;
    double direct = 0.0;
    for (std::size_t j = 0; j < basis->size(); ++j)
        direct += spec.q[j] * spec.q[j] * (1.0 + alpha * alpha * basis->eigenvalue(j));
    CHECK(spec.trace_alpha(alpha) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("increment sampling moments and diagonal covariance") {
    const auto basis = build_basis(1.0, 1);
    const auto spec = make_noise(1.5, 2.0, basis, 0.0).spec;
    const double dt = 0.01;
    const int n = 100000;
    RngStream rng(17, 0);
    std::vector<double> sum(basis->size(), 0.0), sum2(basis->size(), 0.0);
    double cross = 0.0;
    for (int s = 0; s < n; ++s) {
        const auto dW = sample_increment(spec, dt, rng);
        for (std::size_t j = 0; j < dW.size(); ++j) {
            sum[j] += dW[j];
            sum2[j] += dW[j] * dW[j];
        }
        cross += dW[0] * dW[1];
    }
    for (std::size_t j = 0; j < basis->size(); ++j) {
        const double var = spec.q[j] * spec.q[j] * dt;
        CHECK(std::abs(sum[j] / n) <= 4.0 * std::sqrt(var / n));
        CHECK(sum2[j] / n == doctest::Approx(var).epsilon(0.05));
    }
    const double cov_se = spec.q[0] * spec.q[1] * dt / std::sqrt(n);
    CHECK(std::abs(cross / n) <= 4.0 * cov_se);
}

TEST_CASE("zero sigma gives zero increments; non-positive dt is rejected") {
    const auto basis = build_basis(1.0, 1);
    const auto spec = make_noise(1.5, 0.0, basis, 0.0).spec;
    RngStream rng(1, 0);
    const auto dW = sample_increment(spec, 0.1, rng);
    for (double c : dW.coeffs())
        CHECK(c == 0.0);
    CHECK_THROWS_AS(sample_increment(spec, 0.0, rng), std::invalid_argument);
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(99, 3), b(99, 3), c(99, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        differs = differs || x != c.normal();
    }
    CHECK(differs);
    CHECK(splitmix64(0) != splitmix64(1));
}

TEST_CASE("Q and its inverse") {
    const auto basis = build_basis(2.0 * std::numbers::pi, 2);
    const auto spec = make_noise(1.0, 1.0, basis, 0.0).spec;
    // lambda = 1 mode is a fixed point of Q when epsilon = 1, sigma = 1
    const auto e0 = SpectralField::unit(basis, 0);
    CHECK(q_apply(spec, e0, 1)[0] == doctest::Approx(1.0));

    std::mt19937_64 gen(2);
    const auto u = oracle::random_field(basis, gen);
    const auto back = q_apply(spec, q_apply(spec, u, 1), -1);
    CHECK(oracle::max_abs_diff(back.coeffs(), u.coeffs()) <= 1e-13);

    // operator norm of Q^{-1} is attained on the top mode
    const double bound = std::pow(basis->lambda_max(), 1.0) / spec.sigma;
    CHECK(sobolev_norms(q_apply(spec, u, -1)).l2 <= bound * sobolev_norms(u).l2 * (1 + 1e-14));
    const auto top = SpectralField::unit(basis, basis->size() - 1);
    CHECK(sobolev_norms(q_apply(spec, top, -1)).l2 == doctest::Approx(bound));

    const auto zero = make_noise(1.0, 0.0, basis, 0.0).spec;
    CHECK_THROWS_AS(q_apply(zero, u, -1), SingularOperatorError);
    CHECK_THROWS_AS(q_apply(spec, u, 2), std::invalid_argument);
}

TEST_CASE("Q*(I + alpha^2 A) is bounded by trace_alpha") {
    const auto basis = build_basis(1.0, 2);
    const double alpha = 0.4;
    const auto spec = make_noise(1.5, 3.0, basis, alpha).spec;
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto x = oracle::random_field(basis, gen);
        const auto y = q_apply(spec, helmholtz(x, alpha, HelmholtzMode::Apply), 1);
        const double lhs = std::pow(sobolev_norms(y).l2, 2);
        const auto n = sobolev_norms(x);
        const double rhs =
            spec.trace_alpha(alpha) * (n.l2 * n.l2 + alpha * alpha * n.grad * n.grad);
        CHECK(lhs - rhs <= 1e-12 * rhs);
    }
}

} // TEST_SUITE
