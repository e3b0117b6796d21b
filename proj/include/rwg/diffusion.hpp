#pragma once
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "rwg/coupling.hpp"
#include "rwg/covariance.hpp"
#include "rwg/errors.hpp"
#include "rwg/quad.hpp"
#include "rwg/waveguide.hpp"

namespace rwg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

// Boundary symbols squared in the scattering generators: the top-wall (nu)
// and bottom-wall (mu) traces, reduced to closed boundary data.
inline void boundary_symbols(const ModeBasis& b, const CouplingTables& t, int j, int l,
                             double& top, double& bot) {
  const double s = 2.0 * std::sqrt(b.beta(j) * b.beta(l));
  if (t.bc == BC::dd) {
    top = b.spec.X * b.mode(j).dphiX * b.mode(l).dphiX / s;
    bot = b.spec.X * b.mode(j).dphi0 * b.mode(l).dphi0 / s;
  } else {
    top = t.q_nu(j - 1, l - 1);
    bot = t.q_mu(j - 1, l - 1);
  }
}

}  // namespace detail

struct KappaResult {
  VectorXd a;     // direct propagating-mode part
  VectorXd e;     // evanescent-coupling part, truncated series
  VectorXd tail;  // estimated magnitude of the dropped series tail
};

// Phase dispersion coefficient. The expression is specific to the
// Dirichlet-Dirichlet waveguide.
inline KappaResult kappa(const ModeBasis& basis, const CouplingTables& t,
                         const CovarianceModel& model) {
  if (t.bc != BC::dd)
    throw ValidationError("the dispersion coefficient is only defined for dirichlet-dirichlet");
  const int N = basis.N;
  const int total = static_cast<int>(t.d_nu.rows());
  const double X = basis.spec.X;
  const double om2 = basis.omega * basis.omega;
  KappaResult res;
  res.a = VectorXd::Zero(N);
  res.e = VectorXd::Zero(N);
  res.tail = VectorXd::Zero(N);

  const double R0_nu = cov(model.nu, 0.0), R0_mu = cov(model.mu, 0.0);
  const double dd0_nu = ddcov0(model.nu), dd0_mu = ddcov0(model.mu);
  const bool varying = basis.spec.c_samples.size() > 1;
  const double hx = varying ? basis.spec.sample_dx : 0.0;
  auto cm2 = [&](double xi) { double c = basis.spec.speed(xi); return 1.0 / (c * c); };
  auto d2cm2 = [&](double xi) {
    if (!varying) return 0.0;
    double lo = std::max(xi - hx, 0.0), hi = std::min(xi + hx, X);
    double h2 = (hi - lo) / 2.0, mid = (lo + hi) / 2.0;
    return (cm2(mid + h2) - 2.0 * cm2(mid) + cm2(mid - h2)) / (h2 * h2);
  };

  for (int j = 1; j <= N; ++j) {
    const double bj = basis.beta(j);
    auto phi = [&](double xi) { return basis.phi(j, xi); };
    auto dphi = [&](double xi) { return basis.dphi(j, xi); };
    const double int_dphi2 = integrate([&](double xi) { double d = dphi(xi); return d * d; }, 0.0, X);
    const double int_x2dphi2 =
        integrate([&](double xi) { double d = dphi(xi); return xi * xi * d * d; }, 0.0, X);
    const double int_mx2dphi2 = integrate(
        [&](double xi) { double d = dphi(xi), w = X - xi; return w * w * d * d; }, 0.0, X);
    double int_c_nu = 0.0, int_c_mu = 0.0;
    if (varying) {
      int_c_nu = integrate(
          [&](double xi) { double f = phi(xi); return xi * xi * f * f * d2cm2(xi); }, 0.0, X, 1e-9);
      int_c_mu = integrate(
          [&](double xi) { double f = phi(xi), w = X - xi; return w * w * f * f * d2cm2(xi); }, 0.0,
          X, 1e-9);
    }

    double sum_R_nu = 0.0, sum_dd_nu = 0.0, sum_R_mu = 0.0, sum_dd_mu = 0.0;
    for (int l = 1; l <= N; ++l) {
      if (l == j) continue;
      const double bl = basis.beta(l);
      const double dn = t.d_nu(j - 1, l - 1), cn = t.c_nu(j - 1, l - 1);
      const double dm = t.d_mu(j - 1, l - 1), cm = t.c_mu(j - 1, l - 1);
      sum_R_nu += (bl + bj) * (dn * dn * (bl * bl - bj * bj) + 2.0 * dn * cn);
      sum_dd_nu += (bl - bj) * dn * dn;
      sum_R_mu += (bl + bj) * (dm * dm * (bl * bl - bj * bj) + 2.0 * dm * cm);
      sum_dd_mu += (bl - bj) * dm * dm;
    }
    res.a(j - 1) =
        R0_nu * (om2 / (4.0 * bj) * int_c_nu - 1.5 / bj * int_dphi2 + sum_R_nu) -
        dd0_nu * (0.25 / bj - 0.5 / bj * int_x2dphi2 + sum_dd_nu) +
        R0_mu * (om2 / (4.0 * bj) * int_c_mu - 1.5 / bj * int_dphi2 + sum_R_mu) -
        dd0_mu * (0.25 / bj - 0.5 / bj * int_mx2dphi2 + sum_dd_mu);

    const double span_nu = model.nu.span(), span_mu = model.mu.span();
    double last = 0.0;
    for (int l = N + 1; l <= total; ++l) {
      const double bl = basis.beta(l);  // decay rate of the evanescent mode
      const double b2sum = bj * bj + bl * bl;
      const double top = basis.mode(j).dphiX * basis.mode(l).dphiX;
      const double bot = basis.mode(j).dphi0 * basis.mode(l).dphi0;
      const double inner_nu = integrate(
          [&](double s) {
            return std::exp(-bl * s) * ddcov(model.nu, s) *
                   ((bl * bl - bj * bj) * std::cos(bj * s) - 2.0 * bj * bl * std::sin(bj * s));
          },
          0.0, span_nu, 1e-9);
      const double inner_mu = integrate(
          [&](double s) {
            return std::exp(-bl * s) * ddcov(model.mu, s) *
                   ((bl * bl - bj * bj) * std::cos(bj * s) - 2.0 * bj * bl * std::sin(bj * s));
          },
          0.0, span_mu, 1e-9);
      const double dnlj = t.d_nu(l - 1, j - 1), cnlj = t.c_nu(l - 1, j - 1);
      const double dmlj = t.d_mu(l - 1, j - 1), cmlj = t.c_mu(l - 1, j - 1);
      const double term =
          X * X * top * top / (2.0 * bj * bl * b2sum * b2sum) * inner_nu +
          2.0 * bl * (-dnlj * dnlj * dd0_nu + cnlj * cnlj / b2sum * R0_nu) +
          X * X * bot * bot / (2.0 * bj * bl * b2sum * b2sum) * inner_mu +
          2.0 * bl * (-dmlj * dmlj * dd0_mu + cmlj * cmlj / b2sum * R0_mu);
      res.e(j - 1) += term;
      last = term;
    }
    // the series terms decay like 1/l^2, so the dropped tail is ~ |last| * l
    res.tail(j - 1) = std::abs(last) * static_cast<double>(total);
  }
  return res;
}

struct GeneratorCoefficients {
  int N = 0;
  int l_max = 0;
  bool has_kappa = false;
  MatrixXd Gc, G0, Gs;
  VectorXd kappa_a, kappa_e, kappa_tail;
  VectorXd Lambda;  // eigenvalues of Gc, ascending; last one is 0
  MatrixXd V;       // orthonormal eigenvectors, columns match Lambda

  VectorXd kappa() const { return kappa_a + kappa_e; }
  double lambda2() const {
    if (N < 2) throw ValidationError("need at least two propagating modes for a spectral gap");
    return std::abs(Lambda(N - 2));
  }
};

// Assemble the diffusion-limit generator data. `mixed_literal` reproduces the
// published mixed-boundary variant in which the bottom-wall spectrum also
// multiplies the top-wall symbol.
inline GeneratorCoefficients generator_coefficients(const ModeBasis& basis,
                                                    const CouplingTables& tables,
                                                    const CovarianceModel& model,
                                                    bool mixed_literal = false) {
  const int N = basis.N;
  GeneratorCoefficients g;
  g.N = N;
  g.l_max = static_cast<int>(tables.c_nu.rows()) - N;
  g.Gc = MatrixXd::Zero(N, N);
  g.G0 = MatrixXd::Zero(N, N);
  g.Gs = MatrixXd::Zero(N, N);

  const SpectralTables st = spectral_tables(model, basis);
  for (int j = 1; j <= N; ++j) {
    for (int l = 1; l <= N; ++l) {
      double top, bot;
      detail::boundary_symbols(basis, tables, j, l, top, bot);
      const double t2 = top * top, b2 = bot * bot;
      const double rd_nu = mixed_literal ? st.rhat_mu_diff(j - 1, l - 1) : st.rhat_nu_diff(j - 1, l - 1);
      const double r0_nu = mixed_literal ? st.rhat0_mu : st.rhat0_nu;
      g.G0(j - 1, l - 1) = r0_nu * t2 + st.rhat0_mu * b2;
      if (j != l) {
        g.Gc(j - 1, l - 1) = rd_nu * t2 + st.rhat_mu_diff(j - 1, l - 1) * b2;
        g.Gs(j - 1, l - 1) = st.gamma_nu(j - 1, l - 1) * t2 + st.gamma_mu(j - 1, l - 1) * b2;
      }
    }
  }
  for (int j = 0; j < N; ++j) {
    g.Gc(j, j) = -(g.Gc.row(j).sum() - g.Gc(j, j));
    g.Gs(j, j) = -(g.Gs.row(j).sum() - g.Gs(j, j));
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.Gc);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the power generator failed");
  g.Lambda = es.eigenvalues();
  g.V = es.eigenvectors();

  if (tables.bc == BC::dd) {
    KappaResult k = kappa(basis, tables, model);
    g.kappa_a = k.a;
    g.kappa_e = k.e;
    g.kappa_tail = k.tail;
    g.has_kappa = true;
  } else {
    g.kappa_a = VectorXd::Zero(N);
    g.kappa_e = VectorXd::Zero(N);
    g.kappa_tail = VectorXd::Zero(N);
  }
  return g;
}

// E[a_j](z) decay/rotation of the coherent amplitudes.
inline Eigen::VectorXcd mean_amplitude(const GeneratorCoefficients& g, const Eigen::VectorXcd& a0,
                                       double z) {
  if (!g.has_kappa)
    throw ValidationError("mean amplitude phase needs the dispersion coefficient (dirichlet only)");
  Eigen::VectorXcd out(g.N);
  const VectorXd k = g.kappa();
  for (int j = 0; j < g.N; ++j) {
    double rate = 0.5 * (g.Gc(j, j) - g.G0(j, j));
    double phase = 0.5 * g.Gs(j, j) + k(j);
    out(j) = a0(j) * std::exp(rate * z) * std::polar(1.0, phase * z);
  }
  return out;
}

// E[|a_j|^2](z) = (e^{Gc z} P0)_j through the symmetric eigensystem.
inline VectorXd mean_powers(const GeneratorCoefficients& g, const VectorXd& P0, double z) {
  VectorXd w = g.V.transpose() * P0;
  for (int m = 0; m < g.N; ++m) w(m) *= std::exp(g.Lambda(m) * z);
  return g.V * w;
}

// Evolution matrix of the fourth-moment system on symmetric pairs (j <= l).
inline MatrixXd fourth_moment_matrix(const MatrixXd& Gc) {
  const int N = static_cast<int>(Gc.rows());
  const int M = N * (N + 1) / 2;
  auto pid = [N](int j, int l) {  // 0-based, j <= l
    return j * N - j * (j - 1) / 2 + (l - j);
  };
  MatrixXd A = MatrixXd::Zero(M, M);
  for (int j = 0; j < N; ++j) {
    int r = pid(j, j);
    for (int n = 0; n < N; ++n) {
      if (n == j) continue;
      A(r, pid(std::min(j, n), std::max(j, n))) += 4.0 * Gc(j, n);
      A(r, r) -= 2.0 * Gc(j, n);
    }
  }
  for (int j = 0; j < N; ++j) {
    for (int l = j + 1; l < N; ++l) {
      int r = pid(j, l);
      A(r, r) -= 2.0 * Gc(j, l);
      for (int n = 0; n < N; ++n) {
        A(r, pid(std::min(j, n), std::max(j, n))) += Gc(l, n);
        A(r, r) -= Gc(l, n);
        A(r, pid(std::min(l, n), std::max(l, n))) += Gc(j, n);
        A(r, r) -= Gc(j, n);
      }
    }
  }
  return A;
}

// E[|a_j|^2 |a_l|^2](z) at the requested ranges, full symmetric matrices.
inline std::vector<MatrixXd> fourth_moments(const GeneratorCoefficients& g, const VectorXd& P0,
                                            const std::vector<double>& zs) {
  const int N = g.N;
  const int M = N * (N + 1) / 2;
  auto pid = [N](int j, int l) { return j * N - j * (j - 1) / 2 + (l - j); };
  const MatrixXd A = fourth_moment_matrix(g.Gc);
  VectorXd p0(M);
  for (int j = 0; j < N; ++j)
    for (int l = j; l < N; ++l) p0(pid(j, l)) = P0(j) * P0(l);
  std::vector<MatrixXd> out;
  out.reserve(zs.size());
  for (double z : zs) {
    MatrixXd E = (A * z).exp();
    VectorXd p = E * p0;
    MatrixXd P2(N, N);
    for (int j = 0; j < N; ++j)
      for (int l = j; l < N; ++l) P2(j, l) = P2(l, j) = p(pid(j, l));
    out.push_back(std::move(P2));
  }
  return out;
}

struct LengthScales {
  VectorXd K;     // net attenuation rate of the coherent amplitude
  VectorXd J;     // scattering rate
  VectorXd smfp;  // 1/J
  VectorXd tmfp;  // 1/K
  double equip = 0.0;  // equipartition distance 1/|Lambda_2|
};

inline LengthScales length_scales(const GeneratorCoefficients& g) {
  LengthScales s;
  s.K = 0.5 * (g.G0.diagonal() - g.Gc.diagonal());
  s.J = -0.5 * g.Gc.diagonal();
  s.smfp = s.J.cwiseInverse();
  s.tmfp = s.K.cwiseInverse();
  s.equip = 1.0 / g.lambda2();
  return s;
}

}  // namespace rwg
