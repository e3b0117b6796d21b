#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "rwg/quad.hpp"
#include "rwg/waveguide.hpp"

namespace rwg {

// One boundary process. Gaussian kind: R(z) = amp * exp(-z^2 / (2 ell^2)).
// Tabulated kind: R sampled on a uniform lag grid starting at 0; the PSD is
// its cosine transform, required nonnegative (Bochner) at validation time.
struct Process {
  enum class Kind { gaussian, tabulated } kind = Kind::gaussian;
  double ell = 1.0;
  double amp = 1.0;
  std::vector<double> r_samples;  // tabulated kind only
  double r_dz = 0.0;

  void validate() const {
    if (!(amp >= 0.0)) throw ValidationError("covariance: amplitude must be >= 0");
    if (kind == Kind::gaussian) {
      if (!(ell > 0.0)) throw ValidationError("covariance: correlation length must be > 0");
      return;
    }
    if (r_samples.size() < 8 || !(r_dz > 0.0))
      throw ValidationError("covariance: tabulated kind needs >= 8 samples and a spacing");
  }

  double span() const {
    return kind == Kind::gaussian ? 10.0 * ell : r_dz * static_cast<double>(r_samples.size() - 1);
  }
};

inline double cov(const Process& p, double z) {
  z = std::abs(z);
  if (p.kind == Process::Kind::gaussian) return p.amp * std::exp(-z * z / (2.0 * p.ell * p.ell));
  if (z >= p.span()) return 0.0;
  return p.amp * WaveguideSpec::interp(p.r_samples, p.r_dz, z);
}

// R''(0); Gaussian closed form, tabulated by second difference at the origin.
inline double ddcov0(const Process& p) {
  if (p.kind == Process::Kind::gaussian) return -p.amp / (p.ell * p.ell);
  const auto& r = p.r_samples;
  return p.amp * (2.0 * r[1] - 2.0 * r[0]) / (p.r_dz * p.r_dz);  // even extension
}

// R''(z) away from the origin; used in the evanescent-coupling integrals.
inline double ddcov(const Process& p, double z) {
  z = std::abs(z);
  if (p.kind == Process::Kind::gaussian) {
    double l2 = p.ell * p.ell;
    return p.amp * std::exp(-z * z / (2.0 * l2)) * (z * z - l2) / (l2 * l2);
  }
  double h = p.r_dz;
  return (cov(p, z + h) - 2.0 * cov(p, z) + cov(p, std::max(z - h, h - z))) / (h * h);
}

// Power spectral density \hat R(beta) = int R(z) e^{-i beta z} dz (even in beta).
inline double psd(const Process& p, double beta) {
  if (p.kind == Process::Kind::gaussian)
    return p.amp * std::sqrt(2.0 * M_PI) * p.ell * std::exp(-beta * beta * p.ell * p.ell / 2.0);
  double v = 2.0 * integrate([&](double z) { return cov(p, z) * std::cos(beta * z); }, 0.0,
                             p.span(), 1e-10);
  return v;
}

// gamma(b) = 2 int_0^inf sin(bz) R(z) dz. The Gaussian integrand is below
// e^{-50} past 10*ell, so a finite interval is exact to double precision.
inline double gamma_sine(const Process& p, double b) {
  if (b == 0.0) return 0.0;
  return 2.0 * integrate([&](double z) { return std::sin(b * z) * cov(p, z); }, 0.0, p.span(),
                         1e-12);
}

struct CovarianceModel {
  Process nu, mu;
  bool clip = false;  // optional hard clip of sample paths at 5*sqrt(R(0)), off by default

  void validate() const {
    nu.validate();
    mu.validate();
    for (const Process* p : {&nu, &mu}) {
      if (p->kind != Process::Kind::tabulated) continue;
      // Spectral positivity of the raw table (discrete cosine series of the
      // even extension). Testing the interpolant instead would flag its own
      // ringing near the Nyquist wavenumber, not the user's data.
      const auto& r = p->r_samples;
      const int n = static_cast<int>(r.size());
      const double h = p->r_dz, span = p->span();
      double scale = 0.0;
      for (double v : r) scale = std::max(scale, std::abs(v));
      const int mmax = std::min(n - 1, 512);
      for (int m = 0; m <= mmax; ++m) {
        double beta = M_PI * m / span;
        double s = 0.5 * r[0] + 0.5 * r[n - 1] * std::cos(beta * span);
        for (int i = 1; i + 1 < n; ++i) s += r[i] * std::cos(beta * i * h);
        if (h * s < -1e-9 * scale * span)
          throw ValidationError("covariance: tabulated covariance has a negative PSD");
      }
    }
  }
};

struct SpectralTables {
  Eigen::MatrixXd rhat_nu_diff, rhat_mu_diff;  // \hat R(beta_j - beta_l)
  Eigen::MatrixXd rhat_nu_sum, rhat_mu_sum;    // \hat R(beta_j + beta_l)
  Eigen::MatrixXd gamma_nu, gamma_mu;          // sine transforms at beta_j - beta_l
  double rhat0_nu = 0.0, rhat0_mu = 0.0;
  double ddR0_nu = 0.0, ddR0_mu = 0.0;
};

inline SpectralTables spectral_tables(const CovarianceModel& model, const ModeBasis& basis) {
  model.validate();
  const int N = basis.N;
  if (N < 1) throw ValidationError("spectral tables need at least one propagating mode");
  SpectralTables t;
  t.rhat_nu_diff.resize(N, N);
  t.rhat_mu_diff.resize(N, N);
  t.rhat_nu_sum.resize(N, N);
  t.rhat_mu_sum.resize(N, N);
  t.gamma_nu.resize(N, N);
  t.gamma_mu.resize(N, N);
  for (int j = 1; j <= N; ++j)
    for (int l = 1; l <= N; ++l) {
      double diff = basis.beta(j) - basis.beta(l);
      double sum = basis.beta(j) + basis.beta(l);
      t.rhat_nu_diff(j - 1, l - 1) = psd(model.nu, diff);
      t.rhat_mu_diff(j - 1, l - 1) = psd(model.mu, diff);
      t.rhat_nu_sum(j - 1, l - 1) = psd(model.nu, sum);
      t.rhat_mu_sum(j - 1, l - 1) = psd(model.mu, sum);
      t.gamma_nu(j - 1, l - 1) = gamma_sine(model.nu, diff);
      t.gamma_mu(j - 1, l - 1) = gamma_sine(model.mu, diff);
    }
  t.rhat0_nu = psd(model.nu, 0.0);
  t.rhat0_mu = psd(model.mu, 0.0);
  t.ddR0_nu = ddcov0(model.nu);
  t.ddR0_mu = ddcov0(model.mu);
  return t;
}

// Forward-scattering validity. The PSD of a Gaussian covariance is treated as
// negligible past 3/ell, so the check passes when every sum wavenumber
// 2*beta_N <= beta_j + beta_l clears that threshold for both processes;
// equivalently max \hat R(beta_j+beta_l) <= e^{-4.5} \hat R(0).
struct ForwardReport {
  double ratio_nu = 0.0, ratio_mu = 0.0;  // max \hat R(beta_j+beta_l) / \hat R(0)
  double kl = 0.0, kl_bound = 0.0;        // correlation-length criterion (constant speed)
  bool pass = false;
  std::string message;
};

inline ForwardReport validate_forward_scattering(const CovarianceModel& model,
                                                 const ModeBasis& basis) {
  model.validate();
  ForwardReport r;
  double bmin = basis.beta(basis.N);  // smallest propagating wavenumber
  auto ratio = [&](const Process& p) {
    if (p.amp == 0.0) return 0.0;  // no fluctuation, nothing scatters backward
    return psd(p, 2.0 * bmin) / psd(p, 0.0);
  };
  r.ratio_nu = ratio(model.nu);
  r.ratio_mu = ratio(model.mu);
  const double negligible = std::exp(-4.5);
  r.pass = r.ratio_nu <= negligible && r.ratio_mu <= negligible;
  if (!basis.spec.sampled()) {
    r.kl = basis.k() * std::min(model.nu.ell, model.mu.ell);
    r.kl_bound = 3.0 * std::sqrt(static_cast<double>(basis.N)) /
                 (2.0 * std::sqrt(2.0 * std::max(basis.alpha, 1e-12)));
  }
  r.message = r.pass ? "forward scattering approximation admissible"
                     : "backward coupling not negligible at the smallest sum wavenumber";
  return r;
}

}  // namespace rwg
