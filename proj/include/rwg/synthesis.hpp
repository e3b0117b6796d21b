#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "rwg/covariance.hpp"
#include "rwg/errors.hpp"

namespace rwg {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic stream of standard normals keyed by (seed, index, tag).
class NormalStream {
 public:
  NormalStream(uint64_t seed, uint64_t index, uint64_t tag) {
    uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x632BE59BD9B4E019ULL * (index + 1);
    (void)splitmix64(s);
    s ^= 0x9E6C63D0876A9F4BULL * (tag + 1);
    state_ = s;
  }
  double normal() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    double u1 = to_unit(splitmix64(state_));
    double u2 = to_unit(splitmix64(state_));
    double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * M_PI * u2);
    have_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  static double to_unit(uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53; }
  uint64_t state_;
  double cached_ = 0.0;
  bool have_ = false;
};

struct SynthesisGrid {
  double dz = 0.0;
  double zmax = 0.0;
  bool third = false;  // also carry third derivatives (needed by the mixed-BC coupling)
};

// One sampled path of both boundary processes with analytic spectral
// derivatives on a uniform grid. Fully determined by (seed, index).
struct BoundaryRealization {
  double dz = 0.0;
  uint64_t seed = 0;
  int index = 0;
  bool has_third = false;
  double taper_nu = 0.0, taper_mu = 0.0;  // ramp widths at the origin
  std::vector<double> nu, dnu, ddnu, dddnu;
  std::vector<double> mu, dmu, ddmu, dddmu;

  int size() const { return static_cast<int>(nu.size()); }
  double zmax() const { return dz * static_cast<double>(size() - 1); }

  double nu_at(double z) const { return hermite(nu, dnu, z); }
  double dnu_at(double z) const { return hermite(dnu, ddnu, z); }
  double ddnu_at(double z) const {
    return has_third ? hermite(ddnu, dddnu, z) : catmull(ddnu, z);
  }
  double dddnu_at(double z) const { return catmull(dddnu, z); }
  double mu_at(double z) const { return hermite(mu, dmu, z); }
  double dmu_at(double z) const { return hermite(dmu, ddmu, z); }
  double ddmu_at(double z) const {
    return has_third ? hermite(ddmu, dddmu, z) : catmull(ddmu, z);
  }
  double dddmu_at(double z) const { return catmull(dddmu, z); }

 private:
  double hermite(const std::vector<double>& v, const std::vector<double>& d, double z) const {
    const int n = static_cast<int>(v.size());
    double t = z / dz;
    int i = static_cast<int>(std::floor(t));
    i = std::min(std::max(i, 0), n - 2);
    double s = t - i;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * v[i] + (s3 - 2 * s2 + s) * dz * d[i] +
           (-2 * s3 + 3 * s2) * v[i + 1] + (s3 - s2) * dz * d[i + 1];
  }
  double catmull(const std::vector<double>& v, double z) const {
    const int n = static_cast<int>(v.size());
    double t = z / dz;
    int i = static_cast<int>(std::floor(t));
    i = std::min(std::max(i, 1), n - 3);
    double s = t - i;
    double d0 = (v[i + 1] - v[i - 1]) / 2.0, d1 = (v[i + 2] - v[i]) / 2.0;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * v[i] + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * v[i + 1] +
           (s3 - s2) * d1;
  }
};

namespace detail {

// quintic smoothstep ramp: C^2, s(0)=s'(0)=s''(0)=0, s(1)=1
inline void taper_weights(double t, double w, double& g, double& g1, double& g2, double& g3) {
  double t2 = t * t, t3 = t2 * t;
  g = t3 * (10.0 - 15.0 * t + 6.0 * t2);
  g1 = 30.0 * t2 * (1.0 - t) * (1.0 - t) / w;
  g2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
  g3 = 60.0 * (1.0 - 6.0 * t + 6.0 * t2) / (w * w * w);
}

inline void synth_process(const Process& p, const SynthesisGrid& grid, NormalStream& rng,
                          std::vector<double>& v, std::vector<double>& d1, std::vector<double>& d2,
                          std::vector<double>& d3, double& taper_w, bool clip) {
  const int n = static_cast<int>(std::ceil(grid.zmax / grid.dz - 1e-9)) + 1;  // cover zmax
  const double ell_eff = p.kind == Process::Kind::gaussian ? p.ell : p.span() / 10.0;
  if (grid.dz > ell_eff / 10.0 + 1e-12)
    throw ValidationError("synthesis: grid spacing must resolve the correlation length (dz <= ell/10)");
  if (grid.zmax < 10.0 * ell_eff)
    throw ValidationError("synthesis: range must cover at least ten correlation lengths");

  // harmonic superposition: wavenumbers to 6/ell (PSD below e^{-18} there),
  // >= 2048 modes, and a period of at least twice the range
  const double B = p.kind == Process::Kind::gaussian ? 6.0 / p.ell : M_PI / p.r_dz;
  int M = 2048;
  int need = static_cast<int>(std::ceil(B * grid.zmax / M_PI));
  if (need > M) M = need;
  const double db = B / M;

  std::vector<double> am(M), bm(M), wb(M), wb2(M), wb3(M), c(M), s(M), cb(M), sb(M);
  for (int m = 0; m < M; ++m) {
    double b = (m + 0.5) * db;
    double sig = std::sqrt(std::max(psd(p, b), 0.0) * db / M_PI);
    am[m] = sig * rng.normal();
    bm[m] = sig * rng.normal();
    wb[m] = b;
    wb2[m] = b * b;
    wb3[m] = b * b * b;
    cb[m] = std::cos(b * grid.dz);
    sb[m] = std::sin(b * grid.dz);
    c[m] = 1.0;
    s[m] = 0.0;
  }

  v.assign(n, 0.0);
  d1.assign(n, 0.0);
  d2.assign(n, 0.0);
  d3.assign(n, 0.0);
  const bool third = grid.third;
  for (int i = 0; i < n; ++i) {
    if (i > 0 && i % 512 == 0) {  // kill rotation round-off drift
      double z = i * grid.dz;
      for (int m = 0; m < M; ++m) {
        c[m] = std::cos(wb[m] * z);
        s[m] = std::sin(wb[m] * z);
      }
    }
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (int m = 0; m < M; ++m) {
      double t1 = am[m] * c[m] + bm[m] * s[m];
      double t2 = bm[m] * c[m] - am[m] * s[m];
      a0 += t1;
      a1 += wb[m] * t2;
      a2 -= wb2[m] * t1;
      if (third) a3 -= wb3[m] * t2;
      double cn = c[m] * cb[m] - s[m] * sb[m];
      s[m] = s[m] * cb[m] + c[m] * sb[m];
      c[m] = cn;
    }
    v[i] = a0;
    d1[i] = a1;
    d2[i] = a2;
    if (third) d3[i] = a3;
  }

  // C^2 ramp so the fluctuation vanishes at the range origin
  taper_w = 5.0 * ell_eff;
  int ntaper = std::min(n - 1, static_cast<int>(std::floor(taper_w / grid.dz)));
  for (int i = 0; i <= ntaper; ++i) {
    double t = i * grid.dz / taper_w;
    if (t >= 1.0) break;
    double g, g1, g2, g3;
    taper_weights(t, taper_w, g, g1, g2, g3);
    double f = v[i], f1 = d1[i], f2 = d2[i], f3 = d3[i];
    v[i] = g * f;
    d1[i] = g * f1 + g1 * f;
    d2[i] = g * f2 + 2.0 * g1 * f1 + g2 * f;
    if (third) d3[i] = g * f3 + 3.0 * g1 * f2 + 3.0 * g2 * f1 + g3 * f;
  }

  if (clip) {
    double bound = 5.0 * std::sqrt(p.amp);
    for (int i = 0; i < n; ++i) {
      if (std::abs(v[i]) > bound) {
        v[i] = std::copysign(bound, v[i]);
        d1[i] = d2[i] = d3[i] = 0.0;
      }
    }
  }
}

}  // namespace detail

inline BoundaryRealization synthesize(const CovarianceModel& model, const SynthesisGrid& grid,
                                      uint64_t seed, int index) {
  model.validate();
  if (!(grid.dz > 0.0) || !(grid.zmax > grid.dz))
    throw ValidationError("synthesis: bad grid");
  BoundaryRealization r;
  r.dz = grid.dz;
  r.seed = seed;
  r.index = index;
  r.has_third = grid.third;
  NormalStream rng_nu(seed, static_cast<uint64_t>(index), 0);
  NormalStream rng_mu(seed, static_cast<uint64_t>(index), 1);
  detail::synth_process(model.nu, grid, rng_nu, r.nu, r.dnu, r.ddnu, r.dddnu, r.taper_nu,
                        model.clip);
  detail::synth_process(model.mu, grid, rng_mu, r.mu, r.dmu, r.ddmu, r.dddmu, r.taper_mu,
                        model.clip);
  return r;
}

}  // namespace rwg
