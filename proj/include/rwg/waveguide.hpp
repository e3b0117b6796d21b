#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rwg/errors.hpp"

namespace rwg {

enum class BC { dd, dn };  // dd: pressure release both walls; dn: Dirichlet at xi=0, Neumann at xi=X

struct WaveguideSpec {
  double X = M_PI;
  BC bc = BC::dd;
  double c0 = 1.0;                 // constant speed, used when c_samples is empty
  std::vector<double> c_samples;   // optional sampled c(xi), uniform grid including both endpoints
  double sample_dx = 0.0;

  bool sampled() const { return !c_samples.empty(); }

  void validate() const {
    if (!(X > 0.0)) throw ValidationError("waveguide: X must be > 0");
    if (sampled()) {
      if (c_samples.size() < 16) throw ValidationError("waveguide: sampled speed needs >= 16 points");
      if (!(sample_dx > 0.0)) throw ValidationError("waveguide: sampled speed needs its grid spacing");
      double span = sample_dx * static_cast<double>(c_samples.size() - 1);
      if (std::abs(span - X) > 1e-9 * X)
        throw ValidationError("waveguide: speed samples do not span [0, X]");
      for (double c : c_samples)
        if (!(c > 0.0)) throw ValidationError("waveguide: speed samples must be positive");
    } else if (!(c0 > 0.0)) {
      throw ValidationError("waveguide: speed must be > 0");
    }
  }

  // c(xi) with cubic interpolation for sampled profiles
  double speed(double xi) const {
    if (!sampled()) return c0;
    return interp(c_samples, sample_dx, xi);
  }

  static double interp(const std::vector<double>& v, double dx, double x) {
    const int n = static_cast<int>(v.size());
    double t = x / dx;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 1, n - 3);
    double s = t - i;
    // 4-point Lagrange on nodes i-1..i+2
    double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    double w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    double w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    double w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    return w0 * v[i - 1] + w1 * v[i] + w2 * v[i + 1] + w3 * v[i + 2];
  }
};

struct Mode {
  double lambda = 0.0;   // transverse eigenvalue
  double beta = 0.0;     // sqrt(lambda) if propagating, decay rate sqrt(-lambda) otherwise
  bool propagating = false;
  double dphi0 = 0.0, dphiX = 0.0, phiX = 0.0;
};

class ModeBasis {
 public:
  WaveguideSpec spec;
  double omega = 0.0;
  int N = 0;           // propagating count
  double alpha = 0.0;  // cutoff fraction (constant speed only)
  std::vector<Mode> modes;  // N + l_max entries, lambda descending

  // tabulated eigenfunctions for sampled-speed bases (columns = modes)
  Eigen::MatrixXd tab, dtab;
  double tab_dx = 0.0;

  int total() const { return static_cast<int>(modes.size()); }
  double k() const { return omega / spec.c0; }
  const Mode& mode(int j) const { return modes[static_cast<size_t>(j - 1)]; }  // 1-based
  double beta(int j) const { return mode(j).beta; }
  double lambda(int j) const { return mode(j).lambda; }

  bool closed_form() const { return tab.size() == 0; }

  double sigma(int j) const {  // transverse wavenumber of the closed-form family
    double m = (spec.bc == BC::dd) ? static_cast<double>(j) : static_cast<double>(j) - 0.5;
    return M_PI * m / spec.X;
  }

  double phi(int j, double xi) const {
    if (closed_form()) return std::sqrt(2.0 / spec.X) * std::sin(sigma(j) * xi);
    return interp_at(tab, j - 1, xi);
  }
  double dphi(int j, double xi) const {
    if (closed_form()) {
      double s = sigma(j);
      return std::sqrt(2.0 / spec.X) * s * std::cos(s * xi);
    }
    return interp_at(dtab, j - 1, xi);
  }

 private:
  double interp_at(const Eigen::MatrixXd& m, int col, double xi) const {
    const int n = static_cast<int>(m.rows());
    double t = xi / tab_dx;
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 1, n - 3);
    double s = t - i;
    double w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    double w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    double w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    double w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    return w0 * m(i - 1, col) + w1 * m(i, col) + w2 * m(i + 1, col) + w3 * m(i + 2, col);
  }

  friend ModeBasis build_mode_basis(const WaveguideSpec&, double, int);
};

namespace detail {

// Tridiagonal eigenvalues of d^2/dxi^2 + omega^2/c^2 on n intervals.
// Returns all eigenvalues ascending. DN couples the Neumann end node with a
// sqrt(2) similarity scaling that keeps the matrix symmetric.
inline Eigen::VectorXd fd_eigenvalues(const WaveguideSpec& spec, double omega, int n) {
  const double h = spec.X / n;
  const int m = (spec.bc == BC::dd) ? n - 1 : n;
  Eigen::VectorXd diag(m), sub(m - 1);
  for (int i = 0; i < m; ++i) {
    double xi = h * (i + 1);
    double c = spec.speed(xi);
    diag[i] = -2.0 / (h * h) + omega * omega / (c * c);
  }
  for (int i = 0; i < m - 1; ++i) sub[i] = 1.0 / (h * h);
  if (spec.bc == BC::dn) sub[m - 2] = std::sqrt(2.0) / (h * h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("waveguide: tridiagonal eigensolve failed");
  return es.eigenvalues();
}

// Inverse iteration for the eigenvector of the fine-grid operator at lambda.
// start is the closed-form sine shape, which is close enough for our mildly
// varying profiles; the residual guard catches anything else.
inline Eigen::VectorXd fd_eigenvector(const WaveguideSpec& spec, double omega, int n, double lambda,
                                      int mode_index) {
  const double h = spec.X / n;
  const int m = (spec.bc == BC::dd) ? n - 1 : n;
  Eigen::VectorXd diag(m), off(m - 1);
  for (int i = 0; i < m; ++i) {
    double xi = h * (i + 1);
    double c = spec.speed(xi);
    diag[i] = -2.0 / (h * h) + omega * omega / (c * c);
  }
  off.setConstant(1.0 / (h * h));
  if (spec.bc == BC::dn) off[m - 2] = std::sqrt(2.0) / (h * h);

  const double scale = diag.cwiseAbs().maxCoeff() + 2.0 / (h * h);
  const double eps = std::numeric_limits<double>::epsilon();
  // Shift exactly at the grid eigenvalue: any contamination from neighboring
  // modes shrinks by ~eps*scale/gap per solve, so one or two passes reach a
  // machine-orthogonal grid eigenvector.  Tiny pivots are floored, Wilkinson
  // style, instead of offsetting the shift.
  const double piv_floor = eps * scale;

  Eigen::VectorXd v(m);
  double sig = (spec.bc == BC::dd) ? M_PI * (mode_index + 1) / spec.X
                                   : M_PI * (mode_index + 0.5) / spec.X;
  for (int i = 0; i < m; ++i) v[i] = std::sin(sig * h * (i + 1));
  v.normalize();

  Eigen::VectorXd a(m), b(m), rhs(m);
  for (int it = 0; it < 30; ++it) {
    a = diag.array() - lambda;
    rhs = v;
    // Thomas solve (T - lambda I) x = v
    b = off;
    for (int i = 1; i < m; ++i) {
      if (std::abs(a[i - 1]) < piv_floor) a[i - 1] = (a[i - 1] < 0.0) ? -piv_floor : piv_floor;
      double w = b[i - 1] / a[i - 1];
      a[i] -= w * b[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    if (std::abs(a[m - 1]) < piv_floor) a[m - 1] = (a[m - 1] < 0.0) ? -piv_floor : piv_floor;
    v[m - 1] = rhs[m - 1] / a[m - 1];
    for (int i = m - 2; i >= 0; --i) v[i] = (rhs[i] - b[i] * v[i + 1]) / a[i];
    v.normalize();
    // residual check against the unshifted matrix
    double res = 0.0;
    for (int i = 0; i < m; ++i) {
      double t = (diag[i] - lambda) * v[i];
      if (i > 0) t += off[i - 1] * v[i - 1];
      if (i + 1 < m) t += off[i] * v[i + 1];
      res = std::max(res, std::abs(t));
    }
    if (res < 256.0 * eps * scale) break;
    if (it == 29) throw NumericalError("waveguide: inverse iteration did not converge");
  }
  return v;
}

}  // namespace detail

inline int count_propagating(const WaveguideSpec& spec, double omega) {
  spec.validate();
  if (!(omega > 0.0)) throw ValidationError("waveguide: omega must be > 0");
  if (!spec.sampled()) {
    double k = omega / spec.c0;
    double t = (spec.bc == BC::dd) ? k * spec.X / M_PI : k * spec.X / M_PI + 0.5;
    if (std::abs(t - std::round(t)) < 1e-6)
      throw ValidationError("waveguide: zero transverse eigenvalue (mode exactly at cutoff)");
    int N = static_cast<int>(std::floor(t));
    if (N < 1) throw ValidationError("waveguide: no propagating mode at this frequency");
    return N;
  }
  Eigen::VectorXd ev = detail::fd_eigenvalues(spec, omega, 2048);
  int N = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > 0.0) ++N;
  if (N < 1) throw ValidationError("waveguide: no propagating mode at this frequency");
  return N;
}

inline ModeBasis build_mode_basis(const WaveguideSpec& spec, double omega, int l_max) {
  if (l_max < 0) throw ValidationError("waveguide: l_max must be >= 0");
  int N = count_propagating(spec, omega);
  const int total = N + l_max;

  ModeBasis basis;
  basis.spec = spec;
  basis.omega = omega;
  basis.N = N;
  basis.modes.resize(total);

  const double guard = 1e-4 * std::pow(M_PI / spec.X, 2);

  if (!spec.sampled()) {
    double k = omega / spec.c0;
    double t = (spec.bc == BC::dd) ? k * spec.X / M_PI : k * spec.X / M_PI + 0.5;
    basis.alpha = t - N;
    double root = std::sqrt(2.0 / spec.X);
    for (int j = 1; j <= total; ++j) {
      double m = (spec.bc == BC::dd) ? j : j - 0.5;
      double sig = M_PI * m / spec.X;
      Mode& md = basis.modes[j - 1];
      md.lambda = k * k - sig * sig;
      md.propagating = md.lambda > 0.0;
      md.beta = std::sqrt(std::abs(md.lambda));
      md.dphi0 = root * sig;
      if (spec.bc == BC::dd) {
        md.dphiX = root * sig * std::cos(M_PI * m);  // = root*sig*(-1)^j
        md.phiX = 0.0;
      } else {
        md.dphiX = 0.0;
        md.phiX = root * std::sin(M_PI * m);  // = root*(-1)^(j+1)
      }
      if (std::abs(md.lambda) < guard)
        throw ValidationError("waveguide: eigenvalue too close to cutoff");
    }
    return basis;
  }

  // sampled speed: second-order FD at two resolutions, Richardson-extrapolated
  // eigenvalues, inverse-iteration eigenvectors on the fine grid
  const int n_coarse = 2048, n_fine = 4096;
  Eigen::VectorXd evc = detail::fd_eigenvalues(spec, omega, n_coarse);
  Eigen::VectorXd evf = detail::fd_eigenvalues(spec, omega, n_fine);
  const int mc = static_cast<int>(evc.size()), mf = static_cast<int>(evf.size());
  if (total > mc) throw ValidationError("waveguide: l_max too large for the discretization");

  const double h = spec.X / n_fine;
  basis.tab_dx = h;
  basis.tab.resize(n_fine + 1, total);
  basis.dtab.resize(n_fine + 1, total);
  basis.alpha = 0.0;

  for (int j = 1; j <= total; ++j) {
    double lc = evc[mc - j];  // ascending storage -> take from the top
    double lf = evf[mf - j];
    if (std::abs(lc - lf) > 0.05 * std::max(1.0, std::abs(lf)))
      throw NumericalError("waveguide: FD eigenvalues inconsistent between grids");
    double lr = (4.0 * lf - lc) / 3.0;
    if (j <= total - 1) {
      double next = (4.0 * evf[mf - j - 1] - evc[mc - j - 1]) / 3.0;
      if (std::abs(lr - next) < 1e-10 * std::max(1.0, std::abs(lr)))
        throw NumericalError("waveguide: eigenvalue multiplicity within tolerance");
    }
    Mode& md = basis.modes[j - 1];
    md.lambda = lr;
    md.propagating = lr > 0.0;
    md.beta = std::sqrt(std::abs(lr));
    if (std::abs(lr) < guard) throw ValidationError("waveguide: eigenvalue too close to cutoff");

    Eigen::VectorXd v = detail::fd_eigenvector(spec, omega, n_fine, lf, j - 1);
    // assemble the full grid function; undo the DN sqrt(2) end scaling
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n_fine + 1);
    if (spec.bc == BC::dd) {
      u.segment(1, n_fine - 1) = v;
    } else {
      u.segment(1, n_fine) = v;
      u[n_fine] *= std::sqrt(2.0);
    }
    // trapezoid normalization
    double nrm = 0.0;
    for (int i = 0; i <= n_fine; ++i) {
      double w = (i == 0 || i == n_fine) ? 0.5 : 1.0;
      nrm += w * u[i] * u[i];
    }
    nrm = std::sqrt(nrm * h);
    u /= nrm;
    // orient so dphi(0) > 0, matching the closed-form convention
    double slope0 = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h);
    if (slope0 < 0.0) u = -u;

    basis.tab.col(j - 1) = u;
    // 4th-order derivative table
    for (int i = 0; i <= n_fine; ++i) {
      double d;
      if (i >= 2 && i <= n_fine - 2) {
        d = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h);
      } else if (i < 2) {
        d = (-25.0 * u[i] + 48.0 * u[i + 1] - 36.0 * u[i + 2] + 16.0 * u[i + 3] - 3.0 * u[i + 4]) /
            (12.0 * h);
      } else {
        d = (25.0 * u[i] - 48.0 * u[i - 1] + 36.0 * u[i - 2] - 16.0 * u[i - 3] + 3.0 * u[i - 4]) /
            (12.0 * h);
      }
      basis.dtab(i, j - 1) = d;
    }
    md.dphi0 = basis.dtab(0, j - 1);
    md.dphiX = basis.dtab(n_fine, j - 1);
    md.phiX = basis.tab(n_fine, j - 1);
  }
  return basis;
}

}  // namespace rwg
