#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rwg/quad.hpp"
#include "rwg/waveguide.hpp"

using namespace rwg;
using Catch::Approx;

namespace {

WaveguideSpec dd_pi() {
  WaveguideSpec s;
  s.X = M_PI;
  s.bc = BC::dd;
  s.c0 = 1.0;
  return s;
}

WaveguideSpec sampled_const(int n = 257) {
  WaveguideSpec s = dd_pi();
  s.sample_dx = M_PI / (n - 1);
  s.c_samples.assign(n, 1.0);
  return s;
}

}  // namespace

TEST_CASE("cubic interpolation reproduces cubics exactly") {
  std::vector<double> v;
  double dx = 0.1;
  auto f = [](double x) { return 2.0 - x + 3.0 * x * x - 0.5 * x * x * x; };
  for (int i = 0; i <= 40; ++i) v.push_back(f(i * dx));
  for (double x : {0.0, 0.05, 0.13, 1.77, 3.99, 4.0})
    CHECK(WaveguideSpec::interp(v, dx, x) == Approx(f(x)).margin(1e-12));
}

TEST_CASE("mode count and cutoff fraction, constant speed") {
  auto s = dd_pi();
  CHECK(count_propagating(s, 10.5) == 10);
  CHECK(count_propagating(s, 1.2) == 1);
  auto b = build_mode_basis(s, 10.5, 0);
  CHECK(b.N == 10);
  CHECK(b.alpha == Approx(0.5).margin(1e-12));

  auto dn = dd_pi();
  dn.bc = BC::dn;
  CHECK(count_propagating(dn, 10.6) == 11);
  auto bdn = build_mode_basis(dn, 10.6, 0);
  CHECK(bdn.alpha == Approx(0.1).margin(1e-12));
}

TEST_CASE("guards: near-integer cutoff and near-zero eigenvalue") {
  auto s = dd_pi();
  CHECK_THROWS_AS(count_propagating(s, 10.0 * (1.0 + 1e-8)), ValidationError);
  CHECK_THROWS_AS(build_mode_basis(s, std::sqrt(100.0 + 1e-5), 0), ValidationError);
  CHECK_THROWS_AS(count_propagating(s, 0.5), ValidationError);  // no propagating mode
}

TEST_CASE("closed-form dirichlet modes: wavenumbers and traces") {
  auto b = build_mode_basis(dd_pi(), 10.5, 5);
  CHECK(b.total() == 15);
  CHECK(b.beta(1) == Approx(10.4522724801834362).epsilon(1e-14));
  CHECK(b.beta(10) == Approx(3.20156211871642434).epsilon(1e-14));
  CHECK(b.mode(10).propagating);
  CHECK_FALSE(b.mode(11).propagating);
  CHECK(b.beta(11) == Approx(std::sqrt(121.0 - 110.25)).epsilon(1e-14));  // decay rate
  const double r = std::sqrt(2.0 / M_PI);
  for (int j : {1, 2, 7, 15}) {
    CHECK(b.mode(j).dphi0 == Approx(r * j).epsilon(1e-13));
    CHECK(b.mode(j).dphiX == Approx(r * j * ((j % 2) ? -1.0 : 1.0)).epsilon(1e-13));
    CHECK(b.mode(j).phiX == Approx(0.0).margin(1e-13));
    CHECK(b.lambda(j) == Approx(110.25 - j * j).epsilon(1e-13));
  }
  // orthonormality through quadrature
  for (int j : {1, 3, 10})
    for (int l : {1, 3, 10}) {
      double v = integrate([&](double x) { return b.phi(j, x) * b.phi(l, x); }, 0.0, M_PI);
      CHECK(v == Approx(j == l ? 1.0 : 0.0).margin(1e-12));
    }
}

TEST_CASE("closed-form mixed modes: half-integer wavenumbers and end values") {
  auto s = dd_pi();
  s.bc = BC::dn;
  auto b = build_mode_basis(s, 10.6, 3);
  REQUIRE(b.N == 11);
  const double r = std::sqrt(2.0 / M_PI);
  for (int j : {1, 2, 11}) {
    double sig = (j - 0.5);
    CHECK(b.beta(j) == Approx(std::sqrt(10.6 * 10.6 - sig * sig)).epsilon(1e-13));
    CHECK(b.mode(j).dphi0 == Approx(r * sig).epsilon(1e-13));
    CHECK(b.mode(j).phiX == Approx(r * ((j % 2) ? 1.0 : -1.0)).epsilon(1e-13));
    CHECK(b.mode(j).dphiX == Approx(0.0).margin(1e-13));
  }
}

TEST_CASE("sampled constant speed reproduces the closed form") {
  auto bc = build_mode_basis(dd_pi(), 10.5, 3);
  auto bs = build_mode_basis(sampled_const(), 10.5, 3);
  REQUIRE(bs.N == 10);
  CHECK_FALSE(bs.closed_form());
  for (int j = 1; j <= 13; ++j)
    CHECK(bs.beta(j) == Approx(bc.beta(j)).epsilon(1e-6));
  for (int j : {1, 5, 10, 13}) {
    for (double x : {0.3, 1.1, 2.0, 2.9}) {
      CHECK(bs.phi(j, x) == Approx(bc.phi(j, x)).margin(2e-6));
      CHECK(bs.dphi(j, x) == Approx(bc.dphi(j, x)).margin(5e-5));
    }
    CHECK(bs.mode(j).dphi0 == Approx(bc.mode(j).dphi0).epsilon(1e-4));
    CHECK(bs.mode(j).dphiX == Approx(bc.mode(j).dphiX).epsilon(1e-4));
  }
}

TEST_CASE("sampled variable speed: Rayleigh quotient and orthonormality") {
  const int n = 257;
  WaveguideSpec s = dd_pi();
  s.sample_dx = M_PI / (n - 1);
  for (int i = 0; i < n; ++i)
    s.c_samples.push_back(1.0 + 0.08 * std::sin(M_PI * i * s.sample_dx / s.X));
  const double om = 10.5;
  auto b = build_mode_basis(s, om, 2);
  REQUIRE(b.N >= 9);
  for (int j : {1, 3, b.N}) {
    double norm = integrate([&](double x) { return b.phi(j, x) * b.phi(j, x); }, 0.0, M_PI, 1e-9);
    CHECK(norm == Approx(1.0).epsilon(1e-7));
    double ray = integrate(
        [&](double x) {
          double c = s.speed(x), f = b.phi(j, x), d = b.dphi(j, x);
          return om * om / (c * c) * f * f - d * d;
        },
        0.0, M_PI, 1e-9);
    CHECK(ray == Approx(b.lambda(j)).epsilon(1e-5));
  }
  double cross = integrate([&](double x) { return b.phi(1, x) * b.phi(3, x); }, 0.0, M_PI, 1e-9);
  CHECK(cross == Approx(0.0).margin(1e-7));
}

TEST_CASE("stored derivative tables agree with differentiated interpolation") {
  auto b = build_mode_basis(sampled_const(), 10.5, 0);
  for (int j : {2, 8}) {
    for (double x : {0.4, 1.6, 2.8}) {
      double h = 1e-4;
      double fd = (b.phi(j, x + h) - b.phi(j, x - h)) / (2.0 * h);
      CHECK(b.dphi(j, x) == Approx(fd).margin(5e-6));
    }
  }
}
