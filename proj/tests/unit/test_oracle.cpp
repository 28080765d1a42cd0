#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "bandgauss/oracle.hpp"

using namespace bandgauss;
using Catch::Approx;

namespace {

EnvironmentParams env_of(double j0, double omega, double delta) { return {SpectralDensity(j0, omega, delta)}; }

}  // namespace

TEST_CASE("quad_reference", "[oracle]") {
  CHECK(oracle::quad_reference([](double s) { return s; }, 0.0, 1.0, 1e-12) == Approx(0.5).epsilon(1e-14));
  CHECK(oracle::quad_reference([](double s) { return std::sin(s); }, 0.0, std::numbers::pi, 1e-12) ==
        Approx(2.0).epsilon(1e-12));

  // Defining integral of the sine kernel at Omega = 1, delta = 1, s = pi.
  const double s = std::numbers::pi;
  const double k = oracle::quad_reference([&](double w) { return std::sin(w * s); }, 1.0, 2.0, 1e-13);
  CHECK(k == Approx(-2.0 / std::numbers::pi).epsilon(1e-11));
  CHECK(k == Approx(kernel_sin(SpectralDensity(1.0, 1.0, 1.0), s)).epsilon(1e-11));

  CHECK(oracle::quad_reference([](double) { return 1.0; }, 2.0, 2.0, 1e-9) == 0.0);
  CHECK_THROWS_AS(oracle::quad_reference([](double x) { return x; }, 0.0, INFINITY, 1e-9), DomainError);
  CHECK_THROWS_AS(oracle::quad_reference([](double x) { return x; }, 0.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(oracle::quad_reference([](double x) { return std::sin(1.0 / (x + 1e-9)); }, 0.0, 1.0, 1e-14, 64),
                  NumericError);
}

TEST_CASE("finite_diff", "[oracle]") {
  CHECK(oracle::finite_diff([](double t) { return t * t; }, 1.0, 1e-4) == Approx(2.0).margin(1e-7));

  const auto env = env_of(1.0, 1.0, 1e-3);
  const double dg = oracle::finite_diff([&](double t) { return gamma_int(env, t, Method::quadrature); }, 1.0, 1e-4);
  CHECK(dg == Approx(2.0 * gamma_quad(env, 1.0)).epsilon(1e-4));

  const double dd = oracle::finite_diff([&](double t) { return delta_gamma(env, t, Method::closed_form); }, 2.0, 1e-4);
  CHECK(dd == Approx(2e-3).epsilon(1e-9));

  // Forward difference near the origin.
  CHECK(oracle::finite_diff([](double t) { return 3.0 * t; }, 0.0, 1e-3) == Approx(3.0));
  CHECK_THROWS_AS(oracle::finite_diff([](double t) { return t; }, 1.0, 0.0), DomainError);
}

TEST_CASE("propagate_w_matrix", "[oracle]") {
  const auto env = env_of(1.0, 1.0, 1e-3);
  CHECK(oracle::propagate_w_matrix(env, 0.0).isZero());

  const Mat2 w = oracle::propagate_w_matrix(env, 0.5);
  CHECK((2.0 * w).trace() == Approx(2.0 * delta_gamma(env, 0.5, Method::quadrature)).epsilon(0.01));
  CHECK(std::abs(w(0, 1) - w(1, 0)) < 1e-15);

  const auto s0 = make_twb({1.0});
  const oracle::WPropagation prop = oracle::propagate_w(env, 2.0, 512);
  const Mat2 a_ref = s0.block_a() * std::exp(-prop.gamma_int) + 2.0 * prop.w_bar;
  const Mat2 a_t = evolve_cm_full(s0, env, 2.0, Method::quadrature).block_a();
  CHECK((a_t - a_ref).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(prop.gamma_int == Approx(gamma_int(env, 2.0, Method::quadrature)).epsilon(1e-8));

  CHECK_THROWS_AS(oracle::propagate_w(env, 1.0, 64), DomainError);
}

TEST_CASE("compare", "[oracle]") {
  const auto ok = oracle::compare("x", 1.0 + 1e-10, 1.0, 1e-9, oracle::DeviationKind::relative);
  CHECK(ok.pass);
  CHECK(ok.abs_deviation == Approx(1e-10).epsilon(1e-5));
  CHECK_FALSE(oracle::compare("x", 1.1, 1.0, 0.05, oracle::DeviationKind::absolute).pass);
  // Zero tolerance fails even an exact match.
  CHECK_FALSE(oracle::compare("x", 1.0, 1.0, 0.0, oracle::DeviationKind::absolute).pass);
  CHECK(oracle::compare("x", 1e-20, 0.0, 1e-9, oracle::DeviationKind::relative, 1.0).pass);

  // Deterministic.
  const auto a = oracle::compare("y", 0.3, 0.1 + 0.2, 1e-15, oracle::DeviationKind::absolute);
  const auto b = oracle::compare("y", 0.3, 0.1 + 0.2, 1e-15, oracle::DeviationKind::absolute);
  CHECK(a.pass == b.pass);
  CHECK(a.abs_deviation == b.abs_deviation);
}
