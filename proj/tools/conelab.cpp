#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conelab/acceptance.hpp"
#include "conelab/cone_op.hpp"
#include "conelab/error.hpp"
#include "conelab/fredholm.hpp"
#include "conelab/geometry.hpp"
#include "conelab/io.hpp"
#include "conelab/link.hpp"
#include "conelab/mode_kernels.hpp"

namespace fs = std::filesystem;
using namespace conelab;

namespace {

struct Output {
  std::string dir = "conelab_out";
  RunManifest manifest;

  std::string put(const std::string& name, const std::string& content) {
    fs::create_directories(dir);
    auto digest = write_text_file((fs::path(dir) / name).string(), content);
    manifest.outputs[name] = digest;
    return digest;
  }
  void put_json(const std::string& name, const Json& j) { put(name, j.dump(2) + "\n"); }
  void finish() {
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
  }
};

std::string real(double x) { return format_real(x); }

Json spectrum_meta(const LinkSpectrum& s) {
  Json j;
  j["label"] = s.label();
  j["distinct"] = s.entries().size();
  j["total_modes"] = s.total_modes();
  if (!s.entries().empty()) {
    j["s_min"] = s.entries().front().s;
    j["s_max"] = s.entries().back().s;
  }
  return j;
}

void grid_meta(CsvTable& t, const RadialGrid& g) {
  t.meta("grid", to_string(g.scheme));
  t.meta("N", std::to_string(g.size()));
  t.meta("theta", real(g.theta));
  t.meta("r_min", real(g.r_min));
}

// ---- spectrum

struct SpectrumArgs {
  int sphere = 0;
  int kmax = 0;
  std::string file;
};

int cmd_spectrum(const SpectrumArgs& a, Output& out) {
  LinkSpectrum s = a.file.empty() ? sphere_dirac_spectrum(a.sphere, a.kmax)
                                  : spectrum_from_json(read_json_file(a.file));
  auto gap = check_spectral_gap(s);
  Json j = to_json(s);
  out.manifest.inputs = {{"sphere", a.sphere}, {"kmax", a.kmax}, {"file", a.file}};
  out.put_json("spectrum.json", j);
  std::cout << j.dump() << "\n";
  if (!gap.has_gap) {
    std::cerr << "conelab: spectrum has no gap around +-1/2 (nearest " << gap.nearest_to_half << ")\n";
    return 1;
  }
  return 0;
}

// ---- schur-bounds

struct SchurArgs {
  std::vector<double> s;
  std::vector<std::string> targets;
  int N = 1024;
  double r_min = 1e-8;
};

int cmd_schur(const SchurArgs& a, Output& out) {
  if (a.s.empty()) throw CLI::ValidationError("--s", "at least one s value is required");
  std::vector<std::string> targets = a.targets;
  if (targets.empty()) targets = {"inv_r_P0", "P0_inv_r", "inv_r_P1", "P1_inv_r"};
  auto g = make_grid(1.0, a.N, GridScheme::LogRefined, a.r_min);
  CsvTable t({"s", "target", "bound", "discrete_norm", "passed"});
  grid_meta(t, g);
  t.meta("tolerance", "1e-6 relative");
  bool all = true;
  int rows = 0;
  for (double s : a.s) {
    for (const auto& name : targets) {
      auto target = schur_target_from_string(name);
      if (!schur_admissible(s, target)) {
        std::cerr << "conelab: skipping s = " << s << " for " << name << " (not admissible)\n";
        continue;
      }
      auto cert = schur_certificate(s, target);
      double nrm = operator_norm(s, target, g);
      bool ok = cert.passed && nrm <= cert.bound * (1 + 1e-6);
      all = all && ok;
      t.row({real(s), to_string(target), real(cert.bound), real(nrm), ok ? "true" : "false"});
      ++rows;
    }
  }
  if (rows == 0) throw Error("no admissible (s, target) pair");
  out.manifest.inputs = {{"s", a.s}, {"targets", targets}, {"N", a.N}, {"r_min", a.r_min}};
  out.manifest.grid = grid_metadata(g);
  out.put("schur_bounds.csv", t.str());
  std::cout << t.str();
  return all ? 0 : 1;
}

// ---- certify-parametrix

struct CertifyArgs {
  std::string spec;
  int N = 2048;
  std::string report = "certify.json";
  double eps = 0.1;
  double global_eps = 0.25;
  int probes = 3;
  bool norms = false;
  double tol = 1e-3;
  std::uint64_t seed = 0;
};

int cmd_certify(const CertifyArgs& a, Output& out) {
  auto spec = spec_from_json(read_json_file(a.spec));
  auto val = validate_spec(spec);
  Json rep;
  rep["spec"] = a.spec;
  rep["validation"] = to_json(val);
  rep["spectrum"] = spectrum_meta(spec.spectrum);
  rep["tolerance"] = a.tol;
  rep["seed"] = a.seed;
  auto g = share(make_grid(spec.theta, a.N, GridScheme::LogRefined));
  rep["grid"] = grid_metadata(*g);
  out.manifest.inputs = {{"spec", canonicalize(to_json(spec))}, {"N", a.N}, {"eps", a.eps},
                         {"global_eps", a.global_eps}, {"probes", a.probes}, {"norms", a.norms}, {"seed", a.seed}};
  out.manifest.grid = rep["grid"];
  bool ok = val.valid;
  if (val.valid) {
    ConeOperator op(spec, g);
    auto cut = make_cutoff(a.eps, *g);
    double hi = 0.9 * spec.cone_theta, lo = std::min(1e-3, 0.1 * hi);
    double right = 0.0, left = 0.0, exact = 0.0;
    for (int k = 0; k < a.probes; ++k) {
      auto u = random_smooth_section(g, op.spectrum_ptr(), lo, hi, a.seed * 7919ULL + 30 + k);
      right = std::max(right, parametrix_right_identity(op, cut, u));
      left = std::max(left, parametrix_left_identity(op, u));
      exact = std::max(exact, exact_inverse_residual(op, u));
    }
    auto ni = op.neumann_info();
    rep["eps"] = a.eps;
    rep["probes"] = a.probes;
    rep["neumann_q"] = ni.q;
    rep["j_max"] = ni.j_max;
    rep["right_identity"] = right;
    rep["left_identity"] = left;
    rep["exact_inverse"] = exact;
    ok = right <= a.tol && left <= a.tol && exact <= a.tol;
    if (a.norms) {
      auto cn = composite_norms(op, a.seed);
      rep["composite_norms"] = {{"inv_r_S0_P", cn.inv_r_S0_P}, {"cap_inv_r_S0_P", cn.cap_inv_r_S0_P},
                                {"P_inv_r_S0", cn.P_inv_r_S0}, {"cap_P_inv_r_S0", cn.cap_P_inv_r_S0},
                                {"inv_r_S1_P", cn.inv_r_S1_P}, {"cap_inv_r_S1_P", cn.cap_inv_r_S1_P},
                                {"P_inv_r_S1", cn.P_inv_r_S1}, {"cap_P_inv_r_S1", cn.cap_P_inv_r_S1},
                                {"inv_r_P", cn.inv_r_P}, {"cap_inv_r_P", cn.cap_inv_r_P},
                                {"P", cn.P}, {"P_bound_exp1", cn.P_bound_exp1},
                                {"P_bound_exp2", cn.P_bound_exp2}};
    }
    if (spec.bulk && spec.cone_theta == spec.theta) {
      auto gr = global_parametrix_check(spec, g, default_global_cutoffs(spec, a.global_eps), a.probes, a.seed);
      rep["global"] = {{"eps", a.global_eps}, {"X_norm", gr.X_norm}, {"X_design_bound", gr.X_design_bound},
                       {"Y_norm", gr.Y_norm}, {"right_residual", gr.right_residual},
                       {"left_residual", gr.left_residual}, {"remainder_norm", gr.remainder_norm},
                       {"cutoff_commutator_gap", gr.cutoff_commutator_gap}};
      ok = ok && gr.right_residual <= a.tol && gr.left_residual <= a.tol && gr.X_norm <= 0.75;
    }
  }
  rep["passed"] = ok;
  out.put_json(a.report, rep);
  std::cout << rep.dump(2) << "\n";
  if (!val.valid) std::cerr << "conelab: " << val.message << "\n";
  return ok ? 0 : 1;
}

// ---- domain-equiv

struct DomainArgs {
  std::string spec;
  std::vector<int> grids = {1024, 4096};
  int sections = 100;
  double tol = 0.1;
  std::uint64_t seed = 0;
};

int cmd_domain(const DomainArgs& a, Output& out) {
  auto spec = spec_from_json(read_json_file(a.spec));
  if (a.grids.size() < 2) throw CLI::ValidationError("--grids", "needs at least two grid sizes");
  CsvTable t({"N", "section", "u_norm", "graph_norm", "h1_cone_norm", "ratio"});
  t.meta("theta", real(spec.theta));
  t.meta("modes", std::to_string(spec.spectrum.total_modes()));
  t.meta("tolerance", real(a.tol));
  t.meta("seed", std::to_string(a.seed));
  Json rep;
  rep["spectrum"] = spectrum_meta(spec.spectrum);
  rep["tolerance"] = a.tol;
  rep["seed"] = a.seed;
  Json rows = Json::array();
  std::vector<double> lo, hi;
  for (int N : a.grids) {
    auto g = share(make_grid(spec.theta, N, GridScheme::LogRefined));
    ConeOperator op(spec, g);
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (int k = 0; k < a.sections; ++k) {
      auto u = random_smooth_section(g, op.spectrum_ptr(), 1e-3 * spec.cone_theta, 0.9 * spec.cone_theta,
                                     a.seed * 7919ULL + 500 + k);
      auto nr = norm_report(op, u);
      if (!nr.ratio) continue;
      mn = std::min(mn, *nr.ratio);
      mx = std::max(mx, *nr.ratio);
      t.row({std::to_string(N), std::to_string(k), real(nr.u_norm), real(nr.graph_norm),
             real(nr.h1_cone_norm), real(*nr.ratio)});
    }
    lo.push_back(mn);
    hi.push_back(mx);
    rows.push_back({{"grid", grid_metadata(*g)}, {"c", mn}, {"C", mx}});
  }
  double dc = std::abs(lo.front() / lo.back() - 1.0), dC = std::abs(hi.front() / hi.back() - 1.0);
  rep["levels"] = rows;
  rep["rel_change_c"] = dc;
  rep["rel_change_C"] = dC;
  bool ok = lo.back() > 0.0 && std::isfinite(hi.back()) && dc <= a.tol && dC <= a.tol;
  rep["passed"] = ok;
  out.manifest.inputs = {{"spec", canonicalize(to_json(spec))}, {"grids", a.grids},
                         {"sections", a.sections}, {"seed", a.seed}};
  out.manifest.grid = rows.back()["grid"];
  out.put("domain_equiv.csv", t.str());
  out.put_json("domain_equiv.json", rep);
  std::cout << rep.dump(2) << "\n";
  return ok ? 0 : 1;
}

// ---- index / deform-index

struct IndexArgs {
  std::string model;
  std::string family;
  int steps = 10;
  SvdOptions svd;
  bool set_N = false, set_rmin = false, set_thr = false;
};

void override_svd(const IndexArgs& a, SvdOptions& o) {
  if (a.set_N) o.N = a.svd.N;
  if (a.set_rmin) o.r_min = a.svd.r_min;
  if (a.set_thr) o.threshold_rel = a.svd.threshold_rel;
}

int cmd_index(const IndexArgs& a, Output& out) {
  auto model = model_from_json(read_json_file(a.model));
  SvdOptions o;
  override_svd(a, o);
  auto rep = svd_index(model, o);
  Json j = to_json(rep);
  j["model"] = to_json(model);
  j["r_min"] = o.r_min;
  out.manifest.inputs = {{"model", canonicalize(to_json(model))}, {"N", o.N}, {"r_min", o.r_min},
                         {"threshold_rel", o.threshold_rel}};
  out.manifest.grid = {{"scheme", "two-ended"}, {"N", o.N}, {"length", std::numbers::pi}, {"r_min", o.r_min}};
  out.put_json("index.json", j);
  std::cout << j.dump(2) << "\n";
  return rep.agree ? 0 : 1;
}

int cmd_deform(const IndexArgs& a, Output& out) {
  auto fam = family_from_json(read_json_file(a.family));
  override_svd(a, fam.svd);
  auto tr = deform_index_trace(fam, a.steps);
  CsvTable t({"t", "svd_index", "analytic_index", "step_modulus"});
  t.meta("N", std::to_string(fam.svd.N));
  t.meta("r_min", real(fam.svd.r_min));
  t.meta("threshold_rel", real(fam.svd.threshold_rel));
  t.meta("modes", std::to_string(fam.base.modes.size()));
  for (size_t i = 0; i < tr.t.size(); ++i)
    t.row({real(tr.t[i]), std::to_string(tr.svd_index[i]), std::to_string(tr.analytic_index[i]),
           real(tr.step_modulus[i])});
  Json j;
  j["family"] = to_json(fam);
  j["steps"] = a.steps;
  j["t"] = tr.t;
  j["svd_index"] = tr.svd_index;
  j["analytic_index"] = tr.analytic_index;
  j["step_modulus"] = tr.step_modulus;
  j["max_modulus"] = tr.max_modulus;
  j["constant"] = tr.constant;
  out.manifest.inputs = {{"family", canonicalize(to_json(fam))}, {"steps", a.steps}};
  out.manifest.grid = {{"scheme", "two-ended"}, {"N", fam.svd.N}, {"r_min", fam.svd.r_min}};
  out.put("deform_trace.csv", t.str());
  out.put_json("deform_trace.json", j);
  std::cout << t.str();
  return tr.constant ? 0 : 1;
}

// ---- curvature

struct CurvatureArgs {
  std::vector<std::string> suspension;  // n scal_g rho
  std::string cone;
  std::string samples;  // custom rho: JSON {"r": [...], "rho": [...]}
  int points = 200;
  double r0 = 0.01;
};

WarpFunction parse_rho(const std::string& name, const std::string& samples) {
  if (name == "custom") {
    if (samples.empty()) throw CLI::ValidationError("--samples", "custom rho needs --samples file.json");
    auto j = read_json_file(samples);
    return WarpFunction::custom(j.at("r").get<std::vector<double>>(), j.at("rho").get<std::vector<double>>());
  }
  auto kind = warp_kind_from_string(name);
  if (kind == WarpKind::Sin) return WarpFunction::sin();
  if (kind == WarpKind::Linear) return WarpFunction::linear();
  return WarpFunction::constant();
}

int cmd_curvature(const CurvatureArgs& a, Output& out) {
  if (a.suspension.empty() == a.cone.empty())
    throw CLI::ValidationError("curvature", "give exactly one of --suspension n scal rho or --cone fam.json");
  CsvTable t({"r", "scal", "r2_scal"});
  Json rep;
  CurvatureProfile prof;
  if (!a.suspension.empty()) {
    int n = std::stoi(a.suspension[0]);
    double scal_g = std::stod(a.suspension[1]);
    auto rho = parse_rho(a.suspension[2], a.samples);
    std::vector<double> r(a.points);
    for (int i = 0; i < a.points; ++i) r[i] = std::numbers::pi * (i + 1) / (a.points + 1);
    prof = suspension_scal(n, scal_g, rho, r);
    t.meta("n", std::to_string(n));
    t.meta("scal_g", real(scal_g));
    t.meta("rho", a.suspension[2]);
    rep = {{"mode", "suspension"}, {"n", n}, {"scal_g", scal_g}, {"rho", a.suspension[2]}};
    out.manifest.inputs = {{"suspension", a.suspension}, {"samples", a.samples}, {"points", a.points}};
  } else {
    auto fam = cone_family_from_json(read_json_file(a.cone));
    std::vector<double> r(a.points);
    for (int i = 0; i < a.points; ++i) r[i] = std::pow(10.0, -4.0 + 3.0 * i / std::max(1, a.points - 1));
    auto adm = cone_admissibility(fam);
    prof = generalized_cone_scal(fam, r, a.r0);
    t.meta("n", std::to_string(fam.n));
    t.meta("scal_link", real(fam.scal_link));
    t.meta("richardson_r0", real(a.r0));
    t.meta("admissibility_tol", real(adm.tol));
    rep = {{"mode", "cone"}, {"family", to_json(fam)},
           {"admissibility", {{"max_r_d1", adm.max_r_d1}, {"max_r2_d2", adm.max_r2_d2}, {"tol", adm.tol}}},
           {"expected_limit", fam.scal_link - fam.n * (fam.n - 1.0)}};
    out.manifest.inputs = {{"cone", canonicalize(to_json(fam))}, {"points", a.points}, {"r0", a.r0}};
  }
  t.meta("points", std::to_string(prof.r.size()));
  for (size_t i = 0; i < prof.r.size(); ++i) t.row({real(prof.r[i]), real(prof.scal[i]), real(prof.r2_scal[i])});
  if (prof.limit_estimate) {
    rep["limit_estimate"] = *prof.limit_estimate;
    rep["richardson_samples"] = prof.richardson_samples;
  }
  rep["points"] = prof.r.size();
  out.put("curvature.csv", t.str());
  out.put_json("curvature.json", rep);
  std::cout << rep.dump(2) << "\n";
  return 0;
}

// ---- suspension-reduce

struct ReduceArgs {
  int n = 3;
  int kmax = 10;
  double Lambda = 1.0;
  double omega = 1.0;
  double theta = 1.0;
  std::string spec_out = "suspension_spec.json";
};

int cmd_reduce(const ReduceArgs& a, Output& out) {
  auto spec = mode_reduce_suspension(sphere_dirac_spectrum(a.n, a.kmax), a.Lambda, a.omega, a.theta);
  auto val = validate_spec(spec);
  Json j = to_json(spec);
  out.manifest.inputs = {{"n", a.n}, {"kmax", a.kmax}, {"Lambda", a.Lambda}, {"omega_bound", a.omega},
                         {"theta", a.theta}};
  out.put_json(a.spec_out, j);
  Json rep = {{"theta_prime", spec.cone_theta}, {"spectrum", spectrum_meta(spec.spectrum)},
              {"validation", to_json(val)}, {"spec_file", a.spec_out}};
  out.put_json("suspension_reduce.json", rep);
  std::cout << rep.dump(2) << "\n";
  return val.valid ? 0 : 1;
}

// ---- suite

struct SuiteArgs {
  std::uint64_t seed = 0;
  bool quick = false;
  std::vector<int> only;
};

int cmd_suite(const SuiteArgs& a, Output& out) {
  AcceptanceOptions opt;
  opt.seed = a.seed;
  opt.quick = a.quick;
  opt.only = a.only;
  bool all = true;
  std::vector<CriterionResult> rs;
  for (int id = 1; id <= 11; ++id) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    rs.push_back(run_criterion(id, opt));
    std::cout << summary_line(rs.back()) << std::endl;
    all = all && rs.back().passed;
  }
  out.manifest.inputs = {{"seed", a.seed}, {"quick", a.quick}, {"only", a.only}};
  out.put_json("suite.json", results_json(rs));
  Json timing = Json::array();
  for (const auto& r : rs) timing.push_back({{"id", r.id}, {"seconds", r.seconds}, {"budget", r.budget}});
  // timings vary run to run, kept out of suite.json
  fs::create_directories(out.dir);
  write_text_file((fs::path(out.dir) / "timings.json").string(), timing.dump(2) + "\n");
  std::cout << (all ? "suite passed" : "suite FAILED") << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conelab: numerical experiments for Dirac operators on cone-like ends"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Output out;
  app.add_option("-o,--out", out.dir, "output directory")->capture_default_str();

  SpectrumArgs sp;
  auto* c_sp = app.add_subcommand("spectrum", "print a link Dirac spectrum as JSON");
  c_sp->add_option("--sphere", sp.sphere, "round sphere S^n");
  c_sp->add_option("--kmax", sp.kmax, "highest eigenvalue level kept");
  c_sp->add_option("--file", sp.file, "spectrum JSON to check instead")->check(CLI::ExistingFile);
  c_sp->callback([&] {
    if (sp.file.empty() && (sp.sphere < 1 || sp.kmax < 0))
      throw CLI::ValidationError("spectrum", "needs --sphere n --kmax K or --file");
  });

  SchurArgs sc;
  auto* c_sc = app.add_subcommand("schur-bounds", "Schur-test bounds against discrete operator norms");
  c_sc->add_option("--s,--s-list", sc.s, "mode eigenvalues")->delimiter(',');
  c_sc->add_option("--target,--targets", sc.targets, "inv_r_P0, P0_inv_r, inv_r_P1, P1_inv_r")->delimiter(',');
  c_sc->add_option("--grid", sc.N, "log-refined grid size")->capture_default_str()->check(CLI::Range(16, 1 << 20));
  c_sc->add_option("--r-min", sc.r_min, "smallest grid node")->capture_default_str();

  CertifyArgs ce;
  auto* c_ce = app.add_subcommand("certify-parametrix", "validate a spec and measure parametrix residuals");
  c_ce->add_option("--spec", ce.spec, "ConeOperatorSpec JSON")->required()->check(CLI::ExistingFile);
  c_ce->add_option("--grid", ce.N, "log-refined grid size")->capture_default_str()->check(CLI::Range(16, 1 << 20));
  c_ce->add_option("--report", ce.report, "report file name inside the output directory")->capture_default_str();
  c_ce->add_option("--eps", ce.eps, "cutoff parameter")->capture_default_str();
  c_ce->add_option("--global-eps", ce.global_eps, "cutoff parameter of the bulk-glued check")->capture_default_str();
  c_ce->add_option("--probes", ce.probes, "random probe sections")->capture_default_str()->check(CLI::PositiveNumber);
  c_ce->add_option("--tol", ce.tol, "residual tolerance")->capture_default_str();
  c_ce->add_flag("--norms", ce.norms, "also estimate the composite operator norms");
  c_ce->add_option("--seed", ce.seed, "RNG seed")->capture_default_str();

  DomainArgs de;
  auto* c_de = app.add_subcommand("domain-equiv", "graph norm against H1_cone norm over random sections");
  c_de->add_option("--spec", de.spec, "ConeOperatorSpec JSON")->required()->check(CLI::ExistingFile);
  c_de->add_option("--grids", de.grids, "grid sizes, coarse to fine")->delimiter(',')->capture_default_str();
  c_de->add_option("--sections", de.sections, "random sections per grid")->capture_default_str()->check(CLI::PositiveNumber);
  c_de->add_option("--tol", de.tol, "allowed relative change of c and C")->capture_default_str();
  c_de->add_option("--seed", de.seed, "RNG seed")->capture_default_str();

  IndexArgs ix;
  auto svd_opts = [&](CLI::App* c) {
    c->add_option("--N", ix.svd.N, "two-ended grid size (>= 512)")->each([&](const std::string&) { ix.set_N = true; });
    c->add_option("--r-min", ix.svd.r_min, "grid end offset")->each([&](const std::string&) { ix.set_rmin = true; });
    c->add_option("--threshold-rel", ix.svd.threshold_rel, "relative rank threshold")
        ->each([&](const std::string&) { ix.set_thr = true; });
  };
  auto* c_ix = app.add_subcommand("index", "analytic and SVD index of a mode model");
  c_ix->add_option("--model", ix.model, "SuspensionModeModel JSON")->required()->check(CLI::ExistingFile);
  svd_opts(c_ix);
  auto* c_df = app.add_subcommand("deform-index", "index along a deformation family");
  c_df->add_option("--family", ix.family, "DeformFamily JSON")->required()->check(CLI::ExistingFile);
  c_df->add_option("--steps", ix.steps, "number of steps")->capture_default_str()->check(CLI::PositiveNumber);
  svd_opts(c_df);

  CurvatureArgs cu;
  auto* c_cu = app.add_subcommand("curvature", "scalar curvature profiles");
  c_cu->add_option("--suspension", cu.suspension, "n scal_g rho (rho: sin, linear, constant, custom)")
      ->expected(3);
  c_cu->add_option("--cone", cu.cone, "WarpedMetricFamily JSON")->check(CLI::ExistingFile);
  c_cu->add_option("--samples", cu.samples, "custom rho samples JSON {r, rho}")->check(CLI::ExistingFile);
  c_cu->add_option("--points", cu.points, "profile points")->capture_default_str()->check(CLI::Range(3, 1000000));
  c_cu->add_option("--r0", cu.r0, "Richardson base radius")->capture_default_str();

  ReduceArgs rd;
  auto* c_rd = app.add_subcommand("suspension-reduce", "mode-reduced suspension spec with validated theta'");
  c_rd->add_option("--n", rd.n, "link sphere dimension")->capture_default_str();
  c_rd->add_option("--kmax", rd.kmax, "spectrum truncation")->capture_default_str();
  c_rd->add_option("--Lambda", rd.Lambda, "link curvature bound")->capture_default_str();
  c_rd->add_option("--omega", rd.omega, "connection form bound")->capture_default_str();
  c_rd->add_option("--theta", rd.theta, "radial interval length")->capture_default_str();
  c_rd->add_option("--spec-out", rd.spec_out, "spec file name")->capture_default_str();

  SuiteArgs su;
  auto* c_su = app.add_subcommand("suite", "run the acceptance battery");
  c_su->add_option("--seed", su.seed, "RNG seed")->capture_default_str();
  c_su->add_flag("--quick", su.quick, "shorter determinism replay");
  c_su->add_option("--only", su.only, "criterion ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string command = app.get_subcommands().front()->get_name();
  out.manifest.command = command;
  int rc = 0;
  try {
    if (command == "spectrum") rc = cmd_spectrum(sp, out);
    else if (command == "schur-bounds") rc = cmd_schur(sc, out);
    else if (command == "certify-parametrix") rc = cmd_certify(ce, out);
    else if (command == "domain-equiv") rc = cmd_domain(de, out);
    else if (command == "index") rc = cmd_index(ix, out);
    else if (command == "deform-index") rc = cmd_deform(ix, out);
    else if (command == "curvature") rc = cmd_curvature(cu, out);
    else if (command == "suspension-reduce") rc = cmd_reduce(rd, out);
    else if (command == "suite") rc = cmd_suite(su, out);
    out.finish();
  } catch (const CLI::ParseError& e) {
    std::cerr << "conelab " << command << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "conelab " << command << ": " << e.what() << "\n";
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "conelab " << command << ": bad input: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "conelab " << command << ": bad argument: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
