#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rwg/synthesis.hpp"

using namespace rwg;
using Catch::Approx;

namespace {

CovarianceModel model_05(double amp = 1.0) {
  CovarianceModel m;
  m.nu.ell = 0.5;
  m.nu.amp = amp;
  m.mu.ell = 0.5;
  m.mu.amp = amp;
  return m;
}

SynthesisGrid grid_05(double zmax = 100.0, bool third = false) {
  SynthesisGrid g;
  g.dz = 0.05;
  g.zmax = zmax;
  g.third = third;
  return g;
}

double rms(const std::vector<double>& v, size_t i0) {
  double s = 0.0;
  for (size_t i = i0; i < v.size(); ++i) s += v[i] * v[i];
  return std::sqrt(s / static_cast<double>(v.size() - i0));
}

}  // namespace

TEST_CASE("normal stream: keyed, reproducible, unit moments") {
  NormalStream a(7, 3, 0), b(7, 3, 0), c(7, 4, 0), d(7, 3, 1);
  CHECK(a.normal() == b.normal());
  CHECK(a.normal() == b.normal());
  CHECK(a.normal() != c.normal());
  CHECK(b.normal() != d.normal());
  NormalStream s(123, 0, 0);
  double m1 = 0.0, m2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double x = s.normal();
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  CHECK(m1 == Approx(0.0).margin(0.01));
  CHECK(m2 == Approx(1.0).margin(0.02));
}

TEST_CASE("synthesis is deterministic and keyed by seed, index, and wall") {
  auto m = model_05();
  auto g = grid_05(20.0);
  auto r1 = synthesize(m, g, 42, 0);
  auto r2 = synthesize(m, g, 42, 0);
  CHECK(r1.nu == r2.nu);
  CHECK(r1.dnu == r2.dnu);
  CHECK(r1.mu == r2.mu);
  auto r3 = synthesize(m, g, 42, 1);
  CHECK(r1.nu != r3.nu);
  auto r4 = synthesize(m, g, 43, 0);
  CHECK(r1.nu != r4.nu);
  CHECK(r1.nu != r1.mu);  // independent walls
  CHECK(r1.size() == 401);
  CHECK(r1.zmax() == Approx(20.0).margin(1e-12));
}

TEST_CASE("taper pins value and two derivatives at the origin") {
  auto r = synthesize(model_05(), grid_05(20.0), 9, 2);
  CHECK(r.nu[0] == 0.0);
  CHECK(r.dnu[0] == 0.0);
  CHECK(r.ddnu[0] == 0.0);
  CHECK(r.mu[0] == 0.0);
  CHECK(r.taper_nu == Approx(2.5));
  // ramp grows smoothly: early values well below the stationary scale
  CHECK(std::abs(r.nu[4]) < 0.1);
}

TEST_CASE("stationary variance and correlation match the target covariance") {
  double amp = 2.0;
  auto r = synthesize(model_05(amp), grid_05(200.0), 42, 0);
  size_t i0 = static_cast<size_t>(r.taper_nu / r.dz) + 1;
  size_t n = r.size();
  double var = 0.0;
  for (size_t i = i0; i < n; ++i) var += r.nu[i] * r.nu[i];
  var /= static_cast<double>(n - i0);
  CHECK(var / amp > 0.8);
  CHECK(var / amp < 1.25);
  // lag-ell correlation: R(0.5)/R(0) = exp(-1/2)
  size_t lag = 10;
  double c = 0.0;
  for (size_t i = i0; i + lag < n; ++i) c += r.nu[i] * r.nu[i + lag];
  c /= static_cast<double>(n - i0 - lag);
  CHECK(c / var == Approx(std::exp(-0.5)).margin(0.08));
}

TEST_CASE("stored derivatives track finite differences of the path") {
  auto r = synthesize(model_05(), grid_05(60.0, true), 11, 5);
  size_t i0 = static_cast<size_t>(r.taper_nu / r.dz) + 2;
  size_t n = r.size();
  double dz = r.dz;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, e2c = 0.0;
  for (size_t i = i0; i + 1 < n; ++i) {
    double fd1 = (r.nu[i + 1] - r.nu[i - 1]) / (2.0 * dz);
    double fd2 = (r.dnu[i + 1] - r.dnu[i - 1]) / (2.0 * dz);
    double fd3 = (r.ddnu[i + 1] - r.ddnu[i - 1]) / (2.0 * dz);
    double cd2 = (r.nu[i + 1] - 2.0 * r.nu[i] + r.nu[i - 1]) / (dz * dz);
    e1 += (fd1 - r.dnu[i]) * (fd1 - r.dnu[i]);
    e2 += (fd2 - r.ddnu[i]) * (fd2 - r.ddnu[i]);
    e3 += (fd3 - r.dddnu[i]) * (fd3 - r.dddnu[i]);
    e2c += (cd2 - r.ddnu[i]) * (cd2 - r.ddnu[i]);
  }
  size_t cnt = n - 1 - i0;
  CHECK(std::sqrt(e1 / cnt) / rms(r.dnu, i0) < 0.02);
  CHECK(std::sqrt(e2 / cnt) / rms(r.ddnu, i0) < 0.03);
  CHECK(std::sqrt(e3 / cnt) / rms(r.dddnu, i0) < 0.05);
  CHECK(std::sqrt(e2c / cnt) / rms(r.ddnu, i0) < 0.02);
}

TEST_CASE("interpolators hit the nodes and differentiate consistently") {
  auto r = synthesize(model_05(), grid_05(20.0, true), 3, 0);
  for (size_t i : {40UL, 117UL, 300UL}) {
    double z = static_cast<double>(i) * r.dz;
    CHECK(r.nu_at(z) == Approx(r.nu[i]).margin(1e-12));
    CHECK(r.dnu_at(z) == Approx(r.dnu[i]).margin(1e-12));
    CHECK(r.ddmu_at(z) == Approx(r.ddmu[i]).margin(1e-12));
  }
  double h = 1e-4;
  for (double z : {3.017, 7.53, 12.2}) {
    double fd = (r.nu_at(z + h) - r.nu_at(z - h)) / (2.0 * h);
    CHECK(fd == Approx(r.dnu_at(z)).margin(1e-5));
    double fdd = (r.dnu_at(z + h) - r.dnu_at(z - h)) / (2.0 * h);
    CHECK(fdd == Approx(r.ddnu_at(z)).margin(5e-3 * (1.0 + std::abs(r.ddnu_at(z)))));
  }
}

TEST_CASE("zero-amplitude walls synthesize flat paths") {
  auto r = synthesize(model_05(0.0), grid_05(20.0), 42, 0);
  for (double v : r.nu) CHECK(v == 0.0);
  for (double v : r.ddmu) CHECK(v == 0.0);
}

TEST_CASE("clipping bounds the path and leaves tame realizations untouched") {
  auto m = model_05();
  m.clip = true;
  auto g = grid_05(40.0);
  auto rc = synthesize(m, g, 42, 0);
  double bound = 5.0;
  for (double v : rc.nu) CHECK(std::abs(v) <= bound);
  m.clip = false;
  auto ru = synthesize(m, g, 42, 0);
  CHECK(rc.nu == ru.nu);  // no excursion beyond 5 sigma in this draw
}

TEST_CASE("grid validation") {
  auto m = model_05();
  SynthesisGrid g;
  g.dz = 0.2;  // > ell/10
  g.zmax = 50.0;
  CHECK_THROWS_AS(synthesize(m, g, 1, 0), ValidationError);
  g.dz = 0.05;
  g.zmax = 2.0;  // < 10 ell
  CHECK_THROWS_AS(synthesize(m, g, 1, 0), ValidationError);
  g.zmax = 0.0;
  CHECK_THROWS_AS(synthesize(m, g, 1, 0), ValidationError);
}
