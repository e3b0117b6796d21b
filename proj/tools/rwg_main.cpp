#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwg/csv.hpp"
#include "rwg/ensemble.hpp"
#include "rwg/estimates.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rwg;

namespace {

[[noreturn]] void bad(const std::string& m) { throw ValidationError("config: " + m); }

void check_keys(const json& o, const std::string& where, std::initializer_list<const char*> ok) {
  if (!o.is_object()) bad(where + " must be an object");
  std::set<std::string> allowed(ok.begin(), ok.end());
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!allowed.count(it.key())) bad("unknown key \"" + it.key() + "\" in " + where);
}

double num_at(const json& o, const char* key, const std::string& where) {
  if (!o.contains(key)) bad(where + " needs \"" + key + "\"");
  if (!o[key].is_number()) bad(where + "." + key + " must be a number");
  return o[key].get<double>();
}

double num_or(const json& o, const char* key, double dflt, const std::string& where) {
  if (!o.contains(key)) return dflt;
  if (!o[key].is_number()) bad(where + "." + key + " must be a number");
  return o[key].get<double>();
}

struct RunConfig {
  WaveguideSpec spec;
  double omega = 0.0;
  CovarianceModel model;
  bool has_model = false, mixed_literal = false;
  double x0 = 0.0;
  std::complex<double> fhat{1.0, 0.0};
  bool has_source = false;
  SolveOptions solve;
  int M = 0, l_max = -1;
  uint64_t seed = 0;
  std::string out_dir = ".", format = "csv", hash;
};

Process parse_process(const json& o, const std::string& where) {
  check_keys(o, where, {"kind", "ell", "amp", "r_samples", "r_dz"});
  Process p;
  std::string kind = o.value("kind", std::string("gaussian"));
  if (kind == "gaussian") {
    p.kind = Process::Kind::gaussian;
  } else if (kind == "tabulated") {
    p.kind = Process::Kind::tabulated;
  } else {
    bad(where + ".kind must be \"gaussian\" or \"tabulated\"");
  }
  p.ell = num_or(o, "ell", p.ell, where);
  p.amp = num_or(o, "amp", p.amp, where);
  if (o.contains("r_samples")) {
    if (!o["r_samples"].is_array()) bad(where + ".r_samples must be an array");
    for (const auto& v : o["r_samples"]) p.r_samples.push_back(v.get<double>());
  }
  p.r_dz = num_or(o, "r_dz", 0.0, where);
  return p;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  RunConfig cfg;
  cfg.hash = hex16(fnv1a(text));
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(path + " is not valid JSON: " + e.what());
  }
  check_keys(j, "top level",
             {"waveguide", "frequency", "covariance", "source", "simulation", "output"});

  if (!j.contains("waveguide")) bad("missing \"waveguide\" block");
  const json& w = j["waveguide"];
  check_keys(w, "waveguide", {"X", "c", "bc"});
  cfg.spec.X = num_at(w, "X", "waveguide");
  std::string bc = w.value("bc", std::string("dd"));
  if (bc == "dd") {
    cfg.spec.bc = BC::dd;
  } else if (bc == "dn") {
    cfg.spec.bc = BC::dn;
  } else {
    bad("waveguide.bc must be \"dd\" or \"dn\"");
  }
  if (w.contains("c")) {
    if (w["c"].is_number()) {
      cfg.spec.c0 = w["c"].get<double>();
    } else if (w["c"].is_array()) {
      for (const auto& v : w["c"]) cfg.spec.c_samples.push_back(v.get<double>());
      if (cfg.spec.c_samples.size() < 4) bad("waveguide.c needs at least 4 samples");
      cfg.spec.sample_dx = cfg.spec.X / double(cfg.spec.c_samples.size() - 1);
    } else {
      bad("waveguide.c must be a number or an array of samples");
    }
  }

  if (!j.contains("frequency")) bad("missing \"frequency\" block");
  const json& f = j["frequency"];
  check_keys(f, "frequency", {"omega", "k"});
  if (f.contains("omega") == f.contains("k")) bad("frequency needs exactly one of omega, k");
  if (f.contains("omega")) {
    cfg.omega = num_at(f, "omega", "frequency");
  } else {
    if (cfg.spec.sampled()) bad("frequency.k needs a constant sound speed; give omega instead");
    cfg.omega = num_at(f, "k", "frequency") * cfg.spec.c0;
  }

  if (j.contains("covariance")) {
    const json& c = j["covariance"];
    check_keys(c, "covariance", {"nu", "mu", "clip", "mixed_literal"});
    if (!c.contains("nu") || !c.contains("mu")) bad("covariance needs \"nu\" and \"mu\" blocks");
    cfg.model.nu = parse_process(c["nu"], "covariance.nu");
    cfg.model.mu = parse_process(c["mu"], "covariance.mu");
    cfg.model.clip = c.value("clip", false);
    cfg.mixed_literal = c.value("mixed_literal", false);
    cfg.has_model = true;
  }

  if (j.contains("source")) {
    const json& s = j["source"];
    check_keys(s, "source", {"x0", "fhat"});
    cfg.x0 = num_at(s, "x0", "source");
    if (s.contains("fhat")) {
      if (s["fhat"].is_number()) {
        cfg.fhat = {s["fhat"].get<double>(), 0.0};
      } else if (s["fhat"].is_array() && s["fhat"].size() == 2) {
        cfg.fhat = {s["fhat"][0].get<double>(), s["fhat"][1].get<double>()};
      } else {
        bad("source.fhat must be a number or [re, im]");
      }
    }
    cfg.has_source = true;
  }

  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    check_keys(s, "simulation", {"eps", "L", "h", "checkpoints", "M", "seed", "l_max"});
    cfg.solve.eps = num_or(s, "eps", 0.0, "simulation");
    cfg.solve.L = num_or(s, "L", 0.0, "simulation");
    cfg.solve.h = num_or(s, "h", 0.0, "simulation");
    if (s.contains("checkpoints")) {
      if (!s["checkpoints"].is_array()) bad("simulation.checkpoints must be an array");
      for (const auto& v : s["checkpoints"]) cfg.solve.checkpoints.push_back(v.get<double>());
    }
    cfg.M = static_cast<int>(num_or(s, "M", 0.0, "simulation"));
    if (s.contains("seed")) cfg.seed = s["seed"].get<uint64_t>();
    cfg.l_max = static_cast<int>(num_or(s, "l_max", -1.0, "simulation"));
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"dir", "format"});
    if (o.contains("dir")) cfg.out_dir = o["dir"].get<std::string>();
    if (o.contains("format")) cfg.format = o["format"].get<std::string>();
  }
  return cfg;
}

// one flat table rendered as CSV or as a columns/rows JSON document
struct Sink {
  fs::path dir;
  std::string hash, format;
  uint64_t seed = 0;

  static std::string cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
    return fmt(v.get<double>());
  }

  fs::path write(const std::string& base, const std::vector<std::string>& cols,
                 const std::vector<json>& rows, const std::vector<std::string>& notes = {}) const {
    fs::create_directories(dir);
    fs::path p = dir / (base + "." + format);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) bad("cannot write " + p.string());
    if (format == "json") {
      json doc;
      doc["header"] = "rwg " + std::string(kVersion) + " config=" + hash +
                      " seed=" + std::to_string(seed);
      doc["notes"] = notes;
      doc["columns"] = cols;
      doc["rows"] = rows;
      out << doc.dump(1) << "\n";
    } else {
      out << header_line(hash, seed);
      for (const auto& n : notes) out << "# " << n << "\n";
      for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
      out << "\n";
      for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << cell(r[i]);
        out << "\n";
      }
    }
    return p;
  }
};

ModeBasis basis_of(const RunConfig& cfg, int l_max_dflt = 0) {
  return build_mode_basis(cfg.spec, cfg.omega, cfg.l_max >= 0 ? cfg.l_max : l_max_dflt);
}

const CovarianceModel& model_of(const RunConfig& cfg) {
  if (!cfg.has_model) bad("this command needs a \"covariance\" block");
  return cfg.model;
}

Eigen::VectorXcd source_of(const RunConfig& cfg, const ModeBasis& basis) {
  if (!cfg.has_source) bad("this command needs a \"source\" block");
  return initial_amplitudes(basis, cfg.x0, cfg.fhat);
}

// checkpoint list for the moment-evolution commands, with a z = 0 baseline row
std::vector<double> theory_zs(const RunConfig& cfg) {
  std::vector<double> zs = cfg.solve.checkpoints;
  if (zs.empty()) {
    if (!(cfg.solve.L > 0.0)) bad("this command needs simulation.checkpoints or simulation.L");
    zs.push_back(cfg.solve.L);
  }
  for (size_t i = 0; i < zs.size(); ++i) {
    if (!(zs[i] > 0.0)) bad("checkpoints must be positive");
    if (i > 0 && zs[i] <= zs[i - 1]) bad("checkpoints must be ascending");
  }
  zs.insert(zs.begin(), 0.0);
  return zs;
}

SynthesisGrid derive_grid(const RunConfig& cfg) {
  auto eff = [](const Process& p) {
    return p.kind == Process::Kind::gaussian ? p.ell : p.span() / 10.0;
  };
  const double e1 = eff(cfg.model.nu), e2 = eff(cfg.model.mu);
  SynthesisGrid g;
  g.dz = std::min(e1, e2) / 10.0;
  g.zmax = std::max(cfg.solve.L / (cfg.solve.eps * cfg.solve.eps), 10.0 * std::max(e1, e2));
  g.third = cfg.spec.bc == BC::dn;
  return g;
}

void forward_gate(const RunConfig& cfg, const ModeBasis& basis, bool override_check,
                  bool warn_only) {
  ForwardReport rep = validate_forward_scattering(model_of(cfg), basis);
  if (rep.pass) return;
  if (warn_only || override_check) {
    std::fprintf(stderr, "warning: %s\n", rep.message.c_str());
    return;
  }
  throw ValidationError(rep.message + " (use --override-forward-check to run anyway)");
}

// ---------------------------------------------------------------- commands

void cmd_modes(const RunConfig& cfg, const Sink& sink) {
  ModeBasis b = basis_of(cfg);
  std::vector<json> rows;
  for (int j = 1; j <= b.N; ++j) {
    const Mode& m = b.mode(j);
    rows.push_back({j, m.lambda, m.beta, m.dphi0, m.dphiX, m.phiX});
  }
  sink.write("modes", {"j", "lambda", "beta", "dphi0", "dphiX", "phiX"}, rows);
}

void cmd_coupling(const RunConfig& cfg, const Sink& sink) {
  ModeBasis b = basis_of(cfg);
  CouplingTables t = coupling_integrals(b);
  SymmetryReport sym = verify_symmetries(t, b);
  const bool dn = b.spec.bc == BC::dn;
  std::vector<std::string> cols = {"j", "l", "c_nu", "c_mu", "d_nu", "d_mu"};
  if (dn) for (const char* c : {"e_nu", "f_nu", "q_nu", "q_mu"}) cols.push_back(c);
  std::vector<json> rows;
  for (int j = 0; j < b.total(); ++j)
    for (int l = 0; l < b.N; ++l) {
      json r = {j + 1, l + 1, t.c_nu(j, l), t.c_mu(j, l), t.d_nu(j, l), t.d_mu(j, l)};
      if (dn) {
        bool prop = j < b.N;
        for (const Eigen::MatrixXd* m : {&t.e_nu, &t.f_nu, &t.q_nu, &t.q_mu})
          r.push_back(prop ? json((*m)(j, l)) : json());
      }
      rows.push_back(r);
    }
  std::vector<std::string> notes = {
      "symmetry max_violation=" + fmt(sym.max_violation) + " tol=" + fmt(sym.tol) +
      " pass=" + (sym.pass ? "true" : "false")};
  sink.write("coupling", cols, rows, notes);
  if (!sym.pass) throw NumericalError("coupling symmetry check failed");
}

void cmd_gamma(const RunConfig& cfg, const Sink& sink, bool override_check) {
  ModeBasis b = basis_of(cfg);
  forward_gate(cfg, b, override_check, /*warn_only=*/true);
  GeneratorCoefficients g =
      generator_coefficients(b, coupling_integrals(b), model_of(cfg), cfg.mixed_literal);
  auto dump = [&](const char* base, const Eigen::MatrixXd& m) {
    std::vector<json> rows;
    for (int j = 0; j < g.N; ++j)
      for (int l = 0; l < g.N; ++l) rows.push_back({j + 1, l + 1, m(j, l)});
    sink.write(base, {"j", "l", "value"}, rows);
  };
  dump("gamma_c", g.Gc);
  dump("gamma_0", g.G0);
  dump("gamma_s", g.Gs);
}

void cmd_kappa(const RunConfig& cfg, const Sink& sink) {
  ModeBasis probe = basis_of(cfg);
  ModeBasis b = cfg.l_max >= 0 ? probe : build_mode_basis(cfg.spec, cfg.omega, 3 * probe.N);
  KappaResult k = kappa(b, coupling_integrals(b), model_of(cfg));
  std::vector<json> rows;
  for (int j = 0; j < b.N; ++j)
    rows.push_back({j + 1, k.a(j), k.e(j), k.tail(j)});
  sink.write("kappa", {"j", "kappa_a", "kappa_e", "tail_bound"}, rows,
             {"l_max=" + std::to_string(b.total() - b.N)});
}

void cmd_moments(const RunConfig& cfg, const Sink& sink) {
  ModeBasis b = basis_of(cfg);
  GeneratorCoefficients g =
      generator_coefficients(b, coupling_integrals(b), model_of(cfg), cfg.mixed_literal);
  Eigen::VectorXcd a0 = source_of(cfg, b);
  Eigen::VectorXd P0(b.N);
  for (int j = 0; j < b.N; ++j) P0(j) = std::norm(a0(j));
  std::vector<json> rows;
  for (double z : theory_zs(cfg)) {
    Eigen::VectorXd p = mean_powers(g, P0, z);
    for (int j = 0; j < b.N; ++j) rows.push_back({z, j + 1, p(j)});
  }
  sink.write("moments", {"z", "j", "P1"}, rows);
}

void cmd_fourth(const RunConfig& cfg, const Sink& sink) {
  ModeBasis b = basis_of(cfg);
  GeneratorCoefficients g =
      generator_coefficients(b, coupling_integrals(b), model_of(cfg), cfg.mixed_literal);
  Eigen::VectorXcd a0 = source_of(cfg, b);
  Eigen::VectorXd P0(b.N);
  for (int j = 0; j < b.N; ++j) P0(j) = std::norm(a0(j));
  std::vector<double> zs = theory_zs(cfg);
  std::vector<Eigen::MatrixXd> P2 = fourth_moments(g, P0, zs);
  std::vector<json> rows;
  for (size_t c = 0; c < zs.size(); ++c)
    for (int j = 0; j < b.N; ++j)
      for (int l = j; l < b.N; ++l) rows.push_back({zs[c], j + 1, l + 1, P2[c](j, l)});
  sink.write("fourth", {"z", "j", "l", "P2"}, rows);
}

void cmd_lengthscales(const RunConfig& cfg, const Sink& sink) {
  ModeBasis b = basis_of(cfg);
  GeneratorCoefficients g =
      generator_coefficients(b, coupling_integrals(b), model_of(cfg), cfg.mixed_literal);
  LengthScales s = length_scales(g);
  std::vector<json> rows;
  for (int j = 0; j < g.N; ++j)
    rows.push_back({j + 1, s.K(j), s.J(j), s.smfp(j), s.tmfp(j)});
  sink.write("lengthscales", {"j", "K", "J", "smfp", "tmfp"}, rows,
             {"equip=" + fmt(s.equip)});
}

// shared derivation for the high-frequency study commands
void hf_params(const RunConfig& cfg, int& N, double& alpha, double& kl) {
  if (cfg.spec.sampled() || cfg.spec.bc != BC::dd)
    bad("the asymptotic study needs a constant-speed dirichlet-dirichlet waveguide");
  const CovarianceModel& m = model_of(cfg);
  if (m.nu.kind != Process::Kind::gaussian || m.mu.kind != Process::Kind::gaussian ||
      m.nu.ell != m.mu.ell || m.nu.amp != 1.0 || m.mu.amp != 1.0)
    bad("the asymptotic study assumes unit-amplitude gaussian walls with equal ell");
  const double k = cfg.omega / cfg.spec.c0;
  const double t = k * cfg.spec.X / M_PI;
  N = static_cast<int>(std::floor(t));
  alpha = t - N;
  kl = k * m.nu.ell;
}

void cmd_estimates(const RunConfig& cfg, const Sink& sink) {
  int N;
  double alpha, kl;
  hf_params(cfg, N, alpha, kl);
  HfEstimates h = hf_estimates(N, alpha, kl, cfg.spec.X);
  std::vector<json> rows;
  for (int j = 0; j < N; ++j)
    rows.push_back({j + 1, h.beta(j), h.g0_exact(j), h.g0_asym(j), h.mgc_exact(j),
                    h.mgc_interm(j), h.K(j), h.J(j), h.scale_med(j)});
  std::vector<std::string> notes = {
      "N=" + std::to_string(N) + " alpha=" + fmt(alpha) + " kl=" + fmt(kl),
      "g0_1_asym=" + fmt(h.g0_1_asym) + " g0_N_asym=" + fmt(h.g0_N_asym),
      "mgc_1_watson=" + fmt(h.mgc_1_watson),
      "mgc_N_sqrt=" + fmt(h.mgc_N_sqrt) + " mgc_N_large=" + fmt(h.mgc_N_large) +
          " series_sum=" + fmt(h.series_sum),
      "scale_low=" + fmt(h.scale_low) + " scale_high_J=" + fmt(h.scale_high_J) +
          " scale_high_K=" + fmt(h.scale_high_K)};
  sink.write("estimates",
             {"j", "beta", "g0_exact", "g0_asym", "mgc_exact", "mgc_interm", "K", "J",
              "scale_med"},
             rows, notes);
}

void cmd_interior_compare(const RunConfig& cfg, const Sink& sink) {
  int N;
  double alpha, kl;
  hf_params(cfg, N, alpha, kl);
  InteriorComparison ic = interior_comparison(N, alpha, kl, cfg.spec.X);
  std::vector<json> rows;
  for (int j = 0; j < N; ++j)
    rows.push_back({j + 1, ic.Kt(j), ic.Jt(j), ic.K(j), ic.J(j), ic.ratio_K(j), ic.ratio_J(j)});
  std::vector<std::string> notes = {
      "N=" + std::to_string(N) + " alpha=" + fmt(alpha) + " kl=" + fmt(kl),
      "Kt1_branch=" + fmt(ic.Kt1_branch) + " Jt1_branch=" + fmt(ic.Jt1_branch),
      "KtN_branch=" + fmt(ic.KtN_branch) + " JtN_branch=" + fmt(ic.JtN_branch),
      "scale_low=" + fmt(ic.scale_low) + " scale_high=" + fmt(ic.scale_high)};
  sink.write("interior", {"j", "Kt", "Jt", "K", "J", "ratio_K", "ratio_J"}, rows, notes);
}

EnsembleStats run_simulation(const RunConfig& cfg, const Sink& sink, int workers,
                             bool override_check) {
  ModeBasis b = basis_of(cfg);
  forward_gate(cfg, b, override_check, /*warn_only=*/false);
  CouplingTables t = coupling_integrals(b);
  Eigen::VectorXcd a0 = source_of(cfg, b);

  EnsembleConfig ec;
  ec.M = cfg.M;
  ec.seed = cfg.seed;
  ec.workers = workers;
  ec.solve = cfg.solve;
  ec.grid = derive_grid(cfg);
  EnsembleStats st = run_ensemble(b, t, model_of(cfg), a0, ec);

  // debugging exports for the first realization
  BoundaryRealization r = synthesize(model_of(cfg), ec.grid, cfg.seed, 0);
  const int stride = std::max(1, (r.size() + 19999) / 20000);
  std::vector<json> rrows;
  for (int i = 0; i < r.size(); i += stride)
    rrows.push_back({i * r.dz, r.nu[i], r.dnu[i], r.ddnu[i], r.mu[i], r.dmu[i], r.ddmu[i]});
  sink.write("realization", {"zeta", "nu", "dnu", "ddnu", "mu", "dmu", "ddmu"}, rrows,
             {"index=0 stride=" + std::to_string(stride)});

  AmplitudeTrajectory traj = propagate_forward(t, b, r, a0, cfg.solve);
  std::vector<json> trows;
  for (size_t c = 0; c < traj.z.size(); ++c)
    for (int j = 0; j < b.N; ++j)
      trows.push_back({traj.z[c], j + 1, traj.a[c](j).real(), traj.a[c](j).imag(),
                       std::norm(traj.a[c](j))});
  sink.write("trajectory", {"z", "j", "re_a", "im_a", "abs2_a"}, trows, {"index=0"});

  const std::vector<std::string> cols = {"z",  "j",      "l",      "moment",
                                         "estimate", "stderr", "theory", "zscore"};
  std::vector<json> rows;
  for (size_t c = 0; c < st.z.size(); ++c) {
    const double z = st.z[c];
    for (int j = 0; j < st.N; ++j) {
      rows.push_back({z, j + 1, nullptr, "mean_re", st.mean_a[c](j).real(),
                      st.mean_a_se[c](j), nullptr, nullptr});
      rows.push_back({z, j + 1, nullptr, "mean_im", st.mean_a[c](j).imag(),
                      st.mean_a_se[c](j), nullptr, nullptr});
      rows.push_back({z, j + 1, nullptr, "P1", st.p1[c](j), st.p1_se[c](j), nullptr, nullptr});
    }
    for (int j = 0; j < st.N; ++j)
      for (int l = j; l < st.N; ++l)
        rows.push_back(
            {z, j + 1, l + 1, "P2", st.p2[c](j, l), st.p2_se[c](j, l), nullptr, nullptr});
    rows.push_back({z, nullptr, nullptr, "energy", st.energy[c], st.energy_se[c], nullptr,
                    nullptr});
  }
  sink.write("ensemble", cols, rows,
             {"M=" + std::to_string(st.M) + " eps=" + fmt(st.eps)});
  return st;
}

int cmd_compare(const RunConfig& cfg, const Sink& sink, int workers, bool override_check) {
  EnsembleStats st = run_simulation(cfg, sink, workers, override_check);
  ModeBasis b = basis_of(cfg);
  GeneratorCoefficients g =
      generator_coefficients(b, coupling_integrals(b), model_of(cfg), cfg.mixed_literal);
  Eigen::VectorXcd a0 = source_of(cfg, b);
  ComparisonReport rep = compare_to_limit(st, g, a0);

  std::vector<json> rows;
  for (const auto& r : rep.rows)
    rows.push_back({r.z, r.j, r.l >= 0 ? json(r.l) : json(), r.family, r.estimate, r.se,
                    r.theory, std::isfinite(r.zscore) ? json(r.zscore) : json("inf")});
  std::vector<std::string> notes = {
      "gated=" + std::to_string(rep.n_gated) + " passed=" + std::to_string(rep.n_pass) +
          " fraction=" + fmt(rep.pass_fraction),
      std::string("verdict=") + (rep.pass ? "pass" : "fail")};
  sink.write("comparison", {"z", "j", "l", "moment", "estimate", "stderr", "theory", "zscore"},
             rows, notes);
  std::printf("%s\n", rep.pass ? "pass" : "fail");
  std::fprintf(stderr, "comparison: %d/%d gated rows within tolerance (fraction %s)\n",
               rep.n_pass, rep.n_gated, fmt(rep.pass_fraction).c_str());
  return rep.pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mode statistics of waveguides with randomly perturbed walls"};
  app.require_subcommand(1);

  std::string config_path, out_flag, format_flag;
  int workers = 1;
  bool override_check = false;
  const std::vector<std::pair<const char*, const char*>> cmds = {
      {"modes", "export the propagating-mode table"},
      {"coupling", "export coupling-coefficient tables and their symmetry check"},
      {"gamma", "export the diffusion-limit generator matrices"},
      {"kappa", "export the dispersion coefficient with its truncation tail"},
      {"moments", "evolve the mean mode powers"},
      {"fourth", "evolve the fourth-order power moments"},
      {"lengthscales", "export attenuation and equilibration scales"},
      {"estimates", "export the high-frequency asymptotic study"},
      {"interior-compare", "compare boundary and interior scattering rates"},
      {"simulate", "run the Monte Carlo ensemble"},
      {"compare", "run the ensemble and test it against the limit theory"}};
  for (const auto& [name, desc] : cmds) {
    CLI::App* sc = app.add_subcommand(name, desc);
    sc->add_option("--config", config_path, "configuration file (JSON)")->required();
    sc->add_option("--out", out_flag, "output directory (default: config output.dir)");
    sc->add_option("--workers", workers, "worker threads for the ensemble");
    sc->add_option("--format", format_flag, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sc->add_flag("--override-forward-check", override_check,
                 "run even if the forward-scattering check fails");
  }

  try {
    app.parse(argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();
    RunConfig cfg = load_config(config_path);
    Sink sink;
    sink.dir = out_flag.empty() ? cfg.out_dir : out_flag;
    sink.format = format_flag.empty() ? cfg.format : format_flag;
    if (sink.format != "csv" && sink.format != "json")
      bad("output.format must be \"csv\" or \"json\"");
    sink.hash = cfg.hash;
    sink.seed = cfg.seed;

    if (cmd == "modes") {
      cmd_modes(cfg, sink);
    } else if (cmd == "coupling") {
      cmd_coupling(cfg, sink);
    } else if (cmd == "gamma") {
      cmd_gamma(cfg, sink, override_check);
    } else if (cmd == "kappa") {
      cmd_kappa(cfg, sink);
    } else if (cmd == "moments") {
      cmd_moments(cfg, sink);
    } else if (cmd == "fourth") {
      cmd_fourth(cfg, sink);
    } else if (cmd == "lengthscales") {
      cmd_lengthscales(cfg, sink);
    } else if (cmd == "estimates") {
      cmd_estimates(cfg, sink);
    } else if (cmd == "interior-compare") {
      cmd_interior_compare(cfg, sink);
    } else if (cmd == "simulate") {
      run_simulation(cfg, sink, workers, override_check);
    } else if (cmd == "compare") {
      return cmd_compare(cfg, sink, workers, override_check);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
