#pragma once
#include <Eigen/Dense>
#include <cmath>

#include "rwg/quad.hpp"
#include "rwg/waveguide.hpp"

namespace rwg {

// Deterministic coupling tables. Rows run over all retained modes
// (propagating + evanescent), columns over propagating modes only.
// For Dirichlet-Neumann guides, d_nu is the mixed-boundary coefficient
// multiplying i*beta_l*nu' (not the Dirichlet-Dirichlet one), and the
// extra tables e_nu, f_nu, q_nu, q_mu cover the propagating block.
struct CouplingTables {
  BC bc = BC::dd;
  Eigen::MatrixXd c_nu, c_mu, d_nu, d_mu;   // (N+l_max) x N
  Eigen::MatrixXd e_nu, f_nu, q_nu, q_mu;   // N x N, DN only (otherwise empty)
};

struct SymmetryReport {
  double viol_c_nu = 0.0, viol_c_mu = 0.0, viol_d_nu = 0.0, viol_d_mu = 0.0;
  double max_violation = 0.0;
  double tol = 0.0;
  bool pass = false;
};

inline CouplingTables coupling_integrals(const ModeBasis& basis) {
  const int N = basis.N, total = basis.total();
  const double X = basis.spec.X;
  CouplingTables t;
  t.bc = basis.spec.bc;
  t.c_nu.resize(total, N);
  t.c_mu.resize(total, N);
  t.d_nu.resize(total, N);
  t.d_mu.resize(total, N);

  const bool dd = basis.spec.bc == BC::dd;

  if (dd && basis.closed_form() && !basis.spec.sampled()) {
    // constant-speed Dirichlet-Dirichlet: closed antiderivatives
    for (int j = 1; j <= total; ++j) {
      for (int l = 1; l <= N; ++l) {
        double s = std::sqrt(basis.beta(j) * basis.beta(l));
        double sj = basis.sigma(j);
        if (j == l) {
          t.c_nu(j - 1, l - 1) = sj * sj / basis.beta(j);
          t.c_mu(j - 1, l - 1) = -sj * sj / basis.beta(j);
          t.d_nu(j - 1, l - 1) = 1.0 / (4.0 * basis.beta(j));
          t.d_mu(j - 1, l - 1) = -1.0 / (4.0 * basis.beta(j));
        } else {
          double jj = j, ll = l;
          double par = ((j + l) % 2 == 0) ? 1.0 : -1.0;
          t.c_nu(j - 1, l - 1) = 0.0;
          t.c_mu(j - 1, l - 1) = 0.0;
          t.d_nu(j - 1, l - 1) = par * jj * ll / ((jj * jj - ll * ll) * s);
          t.d_mu(j - 1, l - 1) = -jj * ll / ((jj * jj - ll * ll) * s);
        }
      }
    }
    return t;
  }

  // quadrature path: mixed BC and/or tabulated eigenfunctions.
  // c_nu and c_mu are evaluated in integrated-by-parts form (the boundary
  // terms vanish for both BC kinds), which keeps them symmetric to
  // quadrature accuracy rather than to eigenfunction accuracy.
  const double tol = basis.closed_form() ? 1e-12 : 1e-9;
  const bool varying = basis.spec.sampled();
  // tabulated eigenfunctions carry O(tab_dx^4) error, so adaptive refinement
  // past the tabulation grid buys nothing: composite Simpson on that grid
  // matches the data accuracy at a fixed cost
  auto quad = [&](auto&& f) {
    if (!varying) return integrate(f, 0.0, X, tol);
    const int n = static_cast<int>(std::llround(X / basis.tab_dx));
    double acc = f(0.0) + f(X);
    for (int i = 1; i < n; ++i) acc += f(i * basis.tab_dx) * (i % 2 ? 4.0 : 2.0);
    return acc * basis.tab_dx / 3.0;
  };
  if (!dd) {
    t.e_nu.resize(N, N);
    t.f_nu.resize(N, N);
    t.q_nu.resize(N, N);
    t.q_mu.resize(N, N);
  }
  for (int j = 1; j <= total; ++j) {
    for (int l = 1; l <= N; ++l) {
      double s = std::sqrt(basis.beta(j) * basis.beta(l));
      double P = quad([&](double x) { return basis.dphi(j, x) * basis.dphi(l, x); });
      double Vnu = 0.0, Vmu = 0.0;
      if (varying) {
        auto dcm2 = [&](double x) {  // d/dxi c^-2, centered difference on the profile
          double h = basis.spec.sample_dx;
          double cp = basis.spec.speed(std::min(x + h, X));
          double cm = basis.spec.speed(std::max(x - h, 0.0));
          double span = std::min(x + h, X) - std::max(x - h, 0.0);
          return (1.0 / (cp * cp) - 1.0 / (cm * cm)) / span;
        };
        Vnu = quad([&](double x) { return x * dcm2(x) * basis.phi(j, x) * basis.phi(l, x); });
        Vmu = quad([&](double x) { return (X - x) * dcm2(x) * basis.phi(j, x) * basis.phi(l, x); });
      }
      double om2 = basis.omega * basis.omega;
      t.c_nu(j - 1, l - 1) = (2.0 * P + om2 * Vnu) / (2.0 * s);
      t.c_mu(j - 1, l - 1) = (-2.0 * P + om2 * Vmu) / (2.0 * s);

      double I2 = quad([&](double x) { return x * basis.phi(j, x) * basis.dphi(l, x); });
      double WD = quad([&](double x) { return (X - x) * basis.phi(j, x) * basis.dphi(l, x); });
      t.d_mu(j - 1, l - 1) = -WD / (2.0 * s);
      if (dd) {
        t.d_nu(j - 1, l - 1) = -I2 / (2.0 * s);
      } else {
        t.d_nu(j - 1, l - 1) = WD / s;
        if (j <= N) {
          double W = quad([&](double x) { return (X - x) * basis.phi(j, x) * basis.phi(l, x); });
          double bl = basis.beta(l);
          t.e_nu(j - 1, l - 1) = (-I2 + 2.0 * X * bl * bl * W) / (2.0 * s);
          t.f_nu(j - 1, l - 1) = -X * W / (2.0 * s);
        }
      }
    }
  }
  if (!dd) {
    double cX = basis.spec.speed(X);
    double om2 = basis.omega * basis.omega;
    for (int j = 1; j <= N; ++j)
      for (int l = 1; l <= N; ++l) {
        double s = std::sqrt(basis.beta(j) * basis.beta(l));
        t.q_nu(j - 1, l - 1) = X / (2.0 * s) * (om2 / (cX * cX) - basis.beta(j) * basis.beta(l)) *
                               basis.mode(j).phiX * basis.mode(l).phiX;
        t.q_mu(j - 1, l - 1) = X / (2.0 * s) * basis.mode(j).dphi0 * basis.mode(l).dphi0;
      }
  }
  return t;
}

// Checks the four symmetry identities on the propagating block.
inline SymmetryReport verify_symmetries(const CouplingTables& t, const ModeBasis& basis) {
  const int N = basis.N;
  SymmetryReport r;
  for (int j = 1; j <= N; ++j) {
    for (int l = 1; l <= N; ++l) {
      double s2 = 2.0 * std::sqrt(basis.beta(j) * basis.beta(l));
      double dnu_target = (j == l) ? 1.0 / s2 : 0.0;
      if (t.bc == BC::dn) dnu_target *= 2.0;  // mixed d_nu carries twice the jump
      double dmu_target = (j == l) ? -1.0 / s2 : 0.0;
      r.viol_c_nu = std::max(r.viol_c_nu, std::abs(t.c_nu(j - 1, l - 1) - t.c_nu(l - 1, j - 1)));
      r.viol_c_mu = std::max(r.viol_c_mu, std::abs(t.c_mu(j - 1, l - 1) - t.c_mu(l - 1, j - 1)));
      r.viol_d_nu = std::max(r.viol_d_nu,
                             std::abs(t.d_nu(j - 1, l - 1) + t.d_nu(l - 1, j - 1) - dnu_target));
      r.viol_d_mu = std::max(r.viol_d_mu,
                             std::abs(t.d_mu(j - 1, l - 1) + t.d_mu(l - 1, j - 1) - dmu_target));
    }
  }
  r.max_violation = std::max({r.viol_c_nu, r.viol_c_mu, r.viol_d_nu, r.viol_d_mu});
  r.tol = basis.closed_form() ? 1e-8 : 1e-7;  // numeric: 100x the quadrature tolerance
  r.pass = r.max_violation < r.tol;
  return r;
}

}  // namespace rwg
