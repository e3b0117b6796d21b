#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rwg/diffusion.hpp"

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

CovarianceModel gauss_model(double ell_nu, double ell_mu = 0.0, double amp = 1.0) {
  CovarianceModel m;
  m.nu.ell = ell_nu;
  m.nu.amp = amp;
  m.mu.ell = ell_mu > 0.0 ? ell_mu : ell_nu;
  m.mu.amp = amp;
  return m;
}

GeneratorCoefficients ref_generator(int l_max = 0) {
  auto b = build_mode_basis(dd_pi(), 10.5, l_max);
  return generator_coefficients(b, coupling_integrals(b), gauss_model(10.0 / 21.0));
}

GeneratorCoefficients a5_generator(int l_max = 0) {
  auto b = build_mode_basis(dd_pi(), 5.5, l_max);
  return generator_coefficients(b, coupling_integrals(b), gauss_model(3.0 / 5.5));
}

}  // namespace

TEST_CASE("power generator: symmetry, conservation, sign structure, spectrum") {
  auto g = ref_generator();
  REQUIRE(g.N == 10);
  double scale = g.Gc.cwiseAbs().maxCoeff();
  CHECK((g.Gc - g.Gc.transpose()).cwiseAbs().maxCoeff() < 1e-13 * scale);
  for (int j = 0; j < 10; ++j) {
    double rs = g.Gc.row(j).sum();
    double mag = g.Gc.row(j).cwiseAbs().sum();
    CHECK(std::abs(rs) < 1e-14 * mag);
    for (int l = 0; l < 10; ++l) {
      if (l == j) continue;
      CHECK(g.Gc(j, l) >= 0.0);
      CHECK(g.G0(j, l) >= 0.0);
    }
    CHECK(g.Gc(j, j) <= 0.0);
  }
  // largest eigenvalue is a simple zero, the rest are strictly negative
  CHECK(std::abs(g.Lambda(9)) < 1e-12 * scale);
  CHECK(g.Lambda(8) < 0.0);
  CHECK(g.lambda2() > 1e-6 * scale);
  // null vector is equipartition
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(10);
  CHECK((g.Gc * ones).cwiseAbs().maxCoeff() < 1e-12 * scale);
  // sine-transform generator is antisymmetric off the diagonal
  for (int j = 0; j < 10; ++j)
    for (int l = 0; l < j; ++l)
      CHECK(g.Gs(j, l) == Approx(-g.Gs(l, j)).margin(1e-12 * (1.0 + scale)));
}

TEST_CASE("frozen generator entries for the five-mode configuration") {
  auto g = a5_generator();
  REQUIRE(g.N == 5);
  const double row0[5] = {-4.028866, 0.390004, 0.897801, 1.440980, 1.300081};
  for (int l = 0; l < 5; ++l) CHECK(g.Gc(0, l) == Approx(row0[l]).margin(2e-6));
  CHECK(g.Gc(3, 4) == Approx(91.1473342878149282).epsilon(1e-9));
  const double g0diag[5] = {0.093487, 1.666745, 10.423284, 49.125117, 325.536140};
  for (int j = 0; j < 5; ++j) CHECK(g.G0(j, j) == Approx(g0diag[j]).margin(2e-6));
  const double eigs[5] = {-214.122472, -75.915791, -24.427607, -5.002145, 0.0};
  for (int m = 0; m < 5; ++m)
    CHECK(g.Lambda(m) == Approx(eigs[m]).margin(2e-6).epsilon(1e-7));
  CHECK(g.lambda2() == Approx(5.002145).margin(2e-6));

  auto s = length_scales(g);
  const double kfrozen[5] = {2.061177, 10.015825, 30.955812, 84.508537, 225.615043};
  for (int j = 0; j < 5; ++j) {
    CHECK(s.K(j) == Approx(kfrozen[j]).margin(2e-6));
    CHECK(s.J(j) == Approx(-0.5 * g.Gc(j, j)).epsilon(1e-14));
    CHECK(s.smfp(j) == Approx(1.0 / s.J(j)).epsilon(1e-14));
  }
  CHECK(s.equip == Approx(1.0 / 5.002145).margin(1e-7));
}

TEST_CASE("mean powers: conservation and approach to equipartition") {
  auto g = ref_generator();
  Eigen::VectorXd P0 = Eigen::VectorXd::Zero(10);
  P0(0) = 1.0;
  double eq = 1.0 / g.lambda2();
  for (double z : {0.0, 0.2 * eq, eq, 3.0 * eq, 10.0 * eq}) {
    auto p = mean_powers(g, P0, z);
    CHECK(p.sum() == Approx(1.0).margin(1e-12));
    if (z > 0.0)
      for (int j = 0; j < 10; ++j) CHECK(p(j) > 0.0);
  }
  auto dev = [&](double z) {
    auto p = mean_powers(g, P0, z);
    double d = 0.0;
    for (int j = 0; j < 10; ++j) d = std::max(d, std::abs(p(j) - 0.1));
    return d;
  };
  CHECK(dev(10.0 * eq) < 1e-3);
  // asymptotic decay at the spectral-gap rate once faster modes have died
  double r = dev(8.0 * eq) / dev(6.0 * eq);
  CHECK(r == Approx(std::exp(-2.0)).epsilon(0.05));
}

TEST_CASE("fourth moments: stationary state, limits, relative variance") {
  auto g = a5_generator();
  const int N = 5, M = 15;
  auto pid = [N](int j, int l) { return j * N - j * (j - 1) / 2 + (l - j); };
  Eigen::MatrixXd A = fourth_moment_matrix(g.Gc);
  Eigen::VectorXd pstat(M);
  for (int j = 0; j < N; ++j)
    for (int l = j; l < N; ++l) pstat(pid(j, l)) = (j == l) ? 2.0 : 1.0;
  double resid = (A * pstat).cwiseAbs().maxCoeff();
  CHECK(resid < 1e-12 * A.cwiseAbs().maxCoeff());

  // normalized source powers (total power one)
  Eigen::VectorXd P0(N);
  P0 << 0.01926072, 0.02809753, 0.00329690, 0.01456633, 0.06946091;
  P0 /= P0.sum();
  double zstar = 20.0 / g.lambda2();
  auto Pz = fourth_moments(g, P0, {0.0, zstar});
  for (int j = 0; j < N; ++j)
    for (int l = j; l < N; ++l)
      CHECK(Pz[0](j, l) == Approx(P0(j) * P0(l)).epsilon(1e-12));
  const double off = 1.0 / (N * (N + 1.0)), diag = 2.0 * off;
  for (int j = 0; j < N; ++j)
    for (int l = 0; l < N; ++l)
      CHECK(Pz[1](j, l) == Approx(j == l ? diag : off).epsilon(1e-3));
  // relative variance of each mode power approaches (N-1)/(N+1)
  for (int j = 0; j < N; ++j) {
    double p1 = mean_powers(g, P0, zstar)(j);
    double rv = Pz[1](j, j) / (p1 * p1) - 1.0;
    CHECK(rv == Approx((N - 1.0) / (N + 1.0)).epsilon(1e-3));
  }
}

TEST_CASE("dispersion coefficient: finiteness, tail control, mixed rejection") {
  auto g30 = a5_generator(30);
  REQUIRE(g30.has_kappa);
  auto k30 = g30.kappa();
  for (int j = 0; j < 5; ++j) {
    CHECK(std::isfinite(g30.kappa_a(j)));
    CHECK(std::isfinite(k30(j)));
    CHECK(g30.kappa_tail(j) >= 0.0);
  }
  auto g60 = a5_generator(60);
  for (int j = 0; j < 5; ++j) {
    CHECK(std::abs(g60.kappa_e(j) - g30.kappa_e(j)) <= g30.kappa_tail(j) + 1e-12);
    CHECK(g60.kappa_tail(j) < g30.kappa_tail(j));
  }

  // coherent amplitude decays at the K rate and rotates with kappa
  Eigen::VectorXcd a0(5);
  a0.setConstant(std::complex<double>(0.3, -0.1));
  auto s = length_scales(g30);
  double z = 0.013;
  auto am = mean_amplitude(g30, a0, z);
  for (int j = 0; j < 5; ++j) {
    CHECK(std::abs(am(j)) == Approx(std::abs(a0(j)) * std::exp(-s.K(j) * z)).epsilon(1e-12));
    double want = 0.5 * g30.Gs(j, j) * z + k30(j) * z;
    double got = std::arg(am(j) / a0(j));
    CHECK(std::remainder(got - want, 2.0 * M_PI) == Approx(0.0).margin(1e-12));
  }

  auto sdn = dd_pi();
  sdn.bc = BC::dn;
  auto bdn = build_mode_basis(sdn, 10.6, 10);
  auto tdn = coupling_integrals(bdn);
  CHECK_THROWS_AS(kappa(bdn, tdn, gauss_model(0.5)), ValidationError);
  auto gdn = generator_coefficients(bdn, tdn, gauss_model(0.5));
  CHECK_FALSE(gdn.has_kappa);
  Eigen::VectorXcd a0dn = Eigen::VectorXcd::Ones(gdn.N);
  CHECK_THROWS_AS(mean_amplitude(gdn, a0dn, 0.1), ValidationError);
}

TEST_CASE("mixed-boundary generator: structure and the published pairing variant") {
  auto sdn = dd_pi();
  sdn.bc = BC::dn;
  auto bdn = build_mode_basis(sdn, 10.6, 0);
  auto tdn = coupling_integrals(bdn);
  auto model = gauss_model(0.5, 0.35);
  auto g = generator_coefficients(bdn, tdn, model);
  REQUIRE(g.N == 11);
  double scale = g.Gc.cwiseAbs().maxCoeff();
  CHECK((g.Gc - g.Gc.transpose()).cwiseAbs().maxCoeff() < 1e-13 * scale);
  for (int j = 0; j < 11; ++j) {
    CHECK(std::abs(g.Gc.row(j).sum()) < 1e-13 * g.Gc.row(j).cwiseAbs().sum());
    for (int l = 0; l < 11; ++l)
      if (l != j) CHECK(g.Gc(j, l) >= 0.0);
  }
  CHECK(std::abs(g.Lambda(10)) < 1e-12 * scale);
  CHECK(g.Lambda(9) < 0.0);

  // the literal published pairing differs once the walls differ...
  auto gl = generator_coefficients(bdn, tdn, model, true);
  CHECK((gl.Gc - g.Gc).cwiseAbs().maxCoeff() > 1e-6 * scale);
  // ...but is identical for statistically identical walls
  auto same = gauss_model(0.5, 0.5);
  auto ga = generator_coefficients(bdn, tdn, same);
  auto gb = generator_coefficients(bdn, tdn, same, true);
  CHECK((ga.Gc - gb.Gc).cwiseAbs().maxCoeff() == 0.0);
}
