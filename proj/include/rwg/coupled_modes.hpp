#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwg/coupling.hpp"
#include "rwg/errors.hpp"
#include "rwg/synthesis.hpp"
#include "rwg/waveguide.hpp"

namespace rwg {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// mode amplitudes launched by a point source at depth x0: fhat * phi_j(x0) / (2i beta_j^{1/2})
inline VectorXcd initial_amplitudes(const ModeBasis& basis, double x0, std::complex<double> fhat) {
  if (!(x0 > 0.0) || !(x0 < basis.spec.X))
    throw ValidationError("source depth must lie strictly inside the cross-section");
  VectorXcd a(basis.N);
  const std::complex<double> two_i(0.0, 2.0);
  for (int j = 1; j <= basis.N; ++j)
    a(j - 1) = fhat * basis.phi(j, x0) / (two_i * std::sqrt(basis.beta(j)));
  return a;
}

// first-order coupling matrix among the propagating modes at range zeta
inline void c1_matrix(const CouplingTables& t, const ModeBasis& basis,
                      const BoundaryRealization& r, double zeta, MatrixXcd& C) {
  const int N = basis.N;
  C.resize(N, N);
  const double nu = r.nu_at(zeta), dnu = r.dnu_at(zeta), ddnu = r.ddnu_at(zeta);
  const double mu = r.mu_at(zeta), dmu = r.dmu_at(zeta), ddmu = r.ddmu_at(zeta);
  if (t.bc == BC::dd) {
    for (int l = 0; l < N; ++l) {
      const std::complex<double> wnu(ddnu, 2.0 * basis.beta(l + 1) * dnu);
      const std::complex<double> wmu(ddmu, 2.0 * basis.beta(l + 1) * dmu);
      for (int j = 0; j < N; ++j)
        C(j, l) = nu * t.c_nu(j, l) + wnu * t.d_nu(j, l) + mu * t.c_mu(j, l) + wmu * t.d_mu(j, l);
    }
  } else {
    const double dddnu = r.dddnu_at(zeta);
    for (int l = 0; l < N; ++l) {
      const double bl = basis.beta(l + 1);
      const std::complex<double> ib_dnu(0.0, bl * dnu);
      const std::complex<double> ib_dddnu(0.0, bl * dddnu);
      const std::complex<double> wmu(ddmu, 2.0 * bl * dmu);
      for (int j = 0; j < N; ++j)
        C(j, l) = nu * t.c_nu(j, l) + ib_dnu * t.d_nu(j, l) + ddnu * t.e_nu(j, l) +
                  ib_dddnu * t.f_nu(j, l) + mu * t.c_mu(j, l) + wmu * t.d_mu(j, l);
    }
  }
}

struct SolveOptions {
  double eps = 0.0;
  double L = 0.0;                    // range in diffusion-scale units; physical range is L/eps^2
  double h = 0.0;                    // step in physical range units; 0 = automatic
  std::vector<double> checkpoints;   // diffusion-scale, ascending; empty = {L}
};

struct AmplitudeTrajectory {
  std::vector<double> z;             // diffusion-scale checkpoint positions
  std::vector<VectorXcd> a;
  std::vector<double> energy;
  double eps = 0.0;
  uint64_t seed = 0;
  int index = 0;
};

namespace detail {

inline std::vector<double> checkpoint_list(const SolveOptions& opt) {
  if (!(opt.eps > 0.0) || !(opt.L > 0.0)) throw ValidationError("solver needs eps > 0 and L > 0");
  std::vector<double> cps = opt.checkpoints;
  if (cps.empty()) cps.push_back(opt.L);
  for (size_t i = 0; i < cps.size(); ++i) {
    if (!(cps[i] > 0.0) || cps[i] > opt.L * (1.0 + 1e-12))
      throw ValidationError("checkpoints must lie in (0, L]");
    if (i > 0 && cps[i] <= cps[i - 1]) throw ValidationError("checkpoints must be ascending");
  }
  return cps;
}

}  // namespace detail

// RK4 on the band-centered amplitudes: the fast single-mode phases are handled
// exactly, the step only has to resolve the fluctuation and beat scales.
template <class CFun>
AmplitudeTrajectory integrate_modes(const VectorXd& beta, CFun&& cfun, const VectorXcd& a0,
                                    const SolveOptions& opt, double h0, uint64_t seed = 0,
                                    int index = 0) {
  const int N = static_cast<int>(beta.size());
  if (a0.size() != N) throw ValidationError("initial amplitude size mismatch");
  if (!(h0 > 0.0)) throw ValidationError("solver needs a positive step");
  const std::vector<double> cps = detail::checkpoint_list(opt);

  AmplitudeTrajectory traj;
  traj.eps = opt.eps;
  traj.seed = seed;
  traj.index = index;

  VectorXcd a = a0, ytmp(N), w(N), k1(N), k2(N), k3(N), k4(N);
  MatrixXcd C(N, N);
  const std::complex<double> i_eps(0.0, opt.eps);
  auto rhs = [&](double zeta, const VectorXcd& y, VectorXcd& out) {
    cfun(zeta, C);
    for (int m = 0; m < N; ++m) w(m) = std::polar(1.0, beta(m) * zeta) * y(m);
    out.noalias() = C * w;
    for (int m = 0; m < N; ++m) out(m) = i_eps * std::polar(1.0, -beta(m) * zeta) * out(m);
  };

  double zeta = 0.0;
  for (double zc : cps) {
    const double zeta_c = zc / (opt.eps * opt.eps);
    const double seg = zeta_c - zeta;
    const int nstep = std::max(1, static_cast<int>(std::ceil(seg / h0 - 1e-9)));
    const double h = seg / nstep;
    // End stages are nudged strictly inside the segment so coefficient
    // functions with one-sided limits at checkpoint boundaries resolve
    // unambiguously; for smooth coefficients the shift is far below the
    // truncation error.
    const double nudge = 1e-9 * h;
    for (int s = 0; s < nstep; ++s) {
      rhs(s == 0 ? zeta + nudge : zeta, a, k1);
      ytmp = a + (h / 2) * k1;
      rhs(zeta + h / 2, ytmp, k2);
      ytmp = a + (h / 2) * k2;
      rhs(zeta + h / 2, ytmp, k3);
      ytmp = a + h * k3;
      rhs(s + 1 == nstep ? zeta + h - nudge : zeta + h, ytmp, k4);
      a += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      zeta += h;
    }
    zeta = zeta_c;  // avoid accumulated drift
    double en = a.squaredNorm();
    if (!std::isfinite(en))
      throw NumericalError("mode amplitudes lost finiteness near zeta = " + std::to_string(zeta));
    traj.z.push_back(zc);
    traj.a.push_back(a);
    traj.energy.push_back(en);
  }
  return traj;
}

inline double default_step(const VectorXd& beta, double dz_grid) {
  double spread = beta.maxCoeff() - beta.minCoeff();
  double h = dz_grid / 2.0;  // grid spacing is ell/10 or finer, so this resolves the fluctuation
  if (spread > 0.0) h = std::min(h, 2.0 * M_PI / (20.0 * spread));
  return h;
}

inline AmplitudeTrajectory propagate_forward(const CouplingTables& tables, const ModeBasis& basis,
                                             const BoundaryRealization& r, const VectorXcd& a0,
                                             const SolveOptions& opt) {
  VectorXd beta(basis.N);
  for (int j = 1; j <= basis.N; ++j) beta(j - 1) = basis.beta(j);
  const double zeta_end = opt.L / (opt.eps * opt.eps);
  if (r.zmax() < zeta_end - 1e-9)
    throw ValidationError("boundary realization is shorter than the requested range");
  double h0 = opt.h > 0.0 ? opt.h : default_step(beta, r.dz);
  auto cfun = [&](double zeta, MatrixXcd& C) { c1_matrix(tables, basis, r, zeta, C); };
  return integrate_modes(beta, cfun, a0, opt, h0, r.seed, r.index);
}

}  // namespace rwg
