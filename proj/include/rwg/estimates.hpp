#pragma once
#include <cmath>

#include <Eigen/Dense>

#include "rwg/errors.hpp"

namespace rwg {

// High-frequency study configuration: planar waveguide of width X with unit
// sound speed, k = (N + alpha) pi / X, and unit-variance Gaussian boundary
// fluctuations of correlation length ell = kl / k on both walls.

struct HfEstimates {
  int N = 0;
  double alpha = 0.0, kl = 0.0, X = 0.0;
  Eigen::VectorXd beta;        // wavenumbers
  Eigen::VectorXd g0_exact;    // Gamma^(0)_jj
  Eigen::VectorXd g0_asym;     // high-frequency approximation of the same
  double g0_1_asym = 0.0, g0_N_asym = 0.0;
  Eigen::VectorXd mgc_exact;   // -Gamma^(c)_jj from the exact row sums
  Eigen::VectorXd mgc_interm;  // intermediate-mode asymptote (2pi)^2 j^3 / ...
  double mgc_1_watson = 0.0;   // j ~ 1 Watson-lemma asymptote
  double series_sum = 0.0;     // the alpha-dependent series in the j ~ N branch
  double mgc_N_sqrt = 0.0;     // j ~ N branch for kl ~ sqrt(N)
  double mgc_N_large = 0.0;    // j ~ N branch for kl >> sqrt(N)
  Eigen::VectorXd K, J;        // attenuation and energy exchange rates
  double scale_low = 0.0;      // K_1 X ~ (kl)^{-1/2}
  Eigen::VectorXd scale_med;   // K_j X ~ N^2 (j/N)^3 / sqrt(1-(j/N)^2)
  double scale_high_J = 0.0;   // J_N X ~ N^3/(kl)
  double scale_high_K = 0.0;   // K_N X ~ kl N^2
};

inline HfEstimates hf_estimates(int N, double alpha, double kl, double X) {
  if (N < 2 || !(alpha > 0.0) || !(alpha < 1.0) || !(kl > 0.0) || !(X > 0.0))
    throw ValidationError("high-frequency study needs N >= 2, alpha in (0,1), kl > 0, X > 0");
  HfEstimates r;
  r.N = N;
  r.alpha = alpha;
  r.kl = kl;
  r.X = X;
  const double k = (N + alpha) * M_PI / X;
  const double ell = kl / k;
  const double rhat0 = std::sqrt(2.0 * M_PI) * ell;  // per wall, unit variance
  const double p15 = std::pow(2.0 * M_PI, 1.5);

  r.beta.resize(N);
  Eigen::VectorXd sig(N);
  for (int j = 1; j <= N; ++j) {
    sig(j - 1) = M_PI * j / X;
    r.beta(j - 1) = (M_PI / X) * std::sqrt((N + alpha) * (N + alpha) - double(j) * j);
  }

  r.g0_exact.resize(N);
  r.g0_asym.resize(N);
  r.mgc_exact.setZero(N);
  r.mgc_interm.resize(N);
  r.scale_med.resize(N);
  for (int j = 1; j <= N; ++j) {
    const double den = (N + alpha) * (N + alpha) - double(j) * j;
    r.g0_exact(j - 1) = std::pow(M_PI / X, 2) * 2.0 * rhat0 * std::pow(j, 4) / den;
    r.g0_asym(j - 1) = p15 * kl / (X * N) * std::pow(j, 4) / den;
    r.mgc_interm(j - 1) = std::pow(2.0 * M_PI, 2) * std::pow(j, 3) / (X * std::sqrt(den));
    for (int l = 1; l <= N; ++l) {
      if (l == j) continue;
      double db = r.beta(j - 1) - r.beta(l - 1);
      double rhat = std::sqrt(2.0 * M_PI) * ell * std::exp(-db * db * ell * ell / 2.0);
      r.mgc_exact(j - 1) += 2.0 * rhat * sig(j - 1) * sig(j - 1) * sig(l - 1) * sig(l - 1) /
                            (r.beta(j - 1) * r.beta(l - 1));
    }
    double u = double(j) / N;
    r.scale_med(j - 1) = N * N * u * u * u / std::sqrt(std::max(1.0 - u * u, 1e-300));
  }
  r.g0_1_asym = p15 * kl / (X * std::pow(double(N), 3));
  r.g0_N_asym = p15 * kl * N * N / (2.0 * alpha * X);
  r.mgc_1_watson = p15 * std::tgamma(0.75) * std::pow(2.0, 0.25) / (X * std::sqrt(kl));

  double S = 0.0;
  for (int q = 1; q < 1000000; ++q) {
    double e = kl * kl / (2.0 * N) * std::pow(std::sqrt(q + alpha) - std::sqrt(alpha), 2);
    if (e > 60.0) break;
    S += std::exp(-e) / std::sqrt(alpha + q);
  }
  r.series_sum = S;
  r.mgc_N_sqrt = p15 * N * N * kl / (2.0 * std::sqrt(alpha) * X) * S;
  r.mgc_N_large = p15 * N * N * kl / (2.0 * std::sqrt(alpha * (1.0 + alpha)) * X) *
                  std::exp(-kl * kl / (2.0 * N) * std::pow(std::sqrt(1.0 + alpha) - std::sqrt(alpha), 2));

  r.K = 0.5 * (r.g0_exact + r.mgc_exact);
  r.J = 0.5 * r.mgc_exact;
  r.scale_low = std::pow(kl, -0.5);
  r.scale_high_J = std::pow(double(N), 3) / kl;
  r.scale_high_K = kl * double(N) * N;
  return r;
}

// Same waveguide with interior inhomogeneities instead of rough boundaries:
// isotropic unit-variance Gaussian speed fluctuations of the same ell.
struct InteriorComparison {
  int N = 0;
  double alpha = 0.0, kl = 0.0, X = 0.0;
  Eigen::VectorXd Kt, Jt;            // interior attenuation / exchange rates
  Eigen::VectorXd K, J;              // boundary rates at the same parameters
  Eigen::VectorXd ratio_K, ratio_J;  // interior over boundary
  double Kt1_branch = 0.0, Jt1_branch = 0.0;  // low-mode approximations (times X)
  double KtN_branch = 0.0, JtN_branch = 0.0;  // high-mode approximations (times X)
  double scale_low = 0.0;   // Kt_1 X ~ N kl
  double scale_high = 0.0;  // Kt_N X ~ N^2 kl
};

inline InteriorComparison interior_comparison(int N, double alpha, double kl, double X) {
  HfEstimates hf = hf_estimates(N, alpha, kl, X);
  InteriorComparison r;
  r.N = N;
  r.alpha = alpha;
  r.kl = kl;
  r.X = X;
  r.K = hf.K;
  r.J = hf.J;
  auto A = [&](int m) {
    double u = double(m) / N;
    return std::pow(1.0 + alpha / N, 2) - u * u;
  };
  const double pref = M_PI * kl * kl / (8.0 * X);
  r.Kt.resize(N);
  r.Jt.setZero(N);
  for (int j = 1; j <= N; ++j) {
    for (int l = 1; l <= N; ++l) {
      if (l == j) continue;
      double d = std::sqrt(A(j)) - std::sqrt(A(l));
      double w = std::exp(-kl * kl / 2.0 * d * d) / std::sqrt(A(j) * A(l));
      double uj = double(j) / N, ul = double(l) / N;
      r.Jt(j - 1) += pref * w *
                     (std::exp(-kl * kl / 2.0 * (uj - ul) * (uj - ul)) +
                      std::exp(-kl * kl / 2.0 * (uj + ul) * (uj + ul)));
    }
    double uj = double(j) / N;
    r.Kt(j - 1) = pref * (2.0 + std::exp(-2.0 * kl * kl * uj * uj)) / A(j) + r.Jt(j - 1);
  }
  r.ratio_K = r.Kt.cwiseQuotient(r.K);
  r.ratio_J = r.Jt.cwiseQuotient(r.J);

  const double pi8 = M_PI * kl * kl / 8.0;
  r.Jt1_branch = pi8 * N * std::sqrt(M_PI / 2.0) / kl;
  r.Kt1_branch = pi8 * (2.0 + std::exp(-2.0 * kl * kl / (double(N) * N))) + r.Jt1_branch;
  r.JtN_branch = (M_PI * N * kl * kl / (8.0 * alpha)) * std::sqrt(M_PI) * N / (2.0 * std::sqrt(2.0) * kl);
  r.KtN_branch = (M_PI * N * kl * kl / (8.0 * alpha)) + r.JtN_branch;
  r.scale_low = double(N) * kl;
  r.scale_high = double(N) * N * kl;
  return r;
}

}  // namespace rwg
