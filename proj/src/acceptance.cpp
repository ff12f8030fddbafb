#include "conelab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "conelab/cone_op.hpp"
#include "conelab/error.hpp"
#include "conelab/fredholm.hpp"
#include "conelab/geometry.hpp"
#include "conelab/mode_kernels.hpp"

namespace conelab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Named {
  const char* name;
  double budget;
};

Named criterion_info(int id) {
  switch (id) {
    case 1: return {"parametrix ODE identities", 10};
    case 2: return {"Schur norm bounds and Mellin values", 60};
    case 3: return {"parametrix identities with perturbation", 60};
    case 4: return {"commutation against matrix products", 0};
    case 5: return {"graph / H1 norm equivalence", 0};
    case 6: return {"Fredholm index oracle equivalence", 120};
    case 7: return {"toy index-formula shape", 0};
    case 8: return {"suspension curvature", 0};
    case 9: return {"generalized cone limit", 0};
    case 10: return {"cutoff family", 0};
    case 11: return {"determinism", 0};
  }
  throw Error("unknown criterion " + std::to_string(id));
}

bool c1(Json& d) {
  auto bump = [](double r, int k) {
    static const double c[3] = {0.3, 0.55, 0.08}, w[3] = {0.15, 0.25, 0.05};
    return poly_bump(r, c[k], w[k]);
  };
  bool ok = true;
  std::vector<GridPtr> grids;
  for (int N : {1024, 2048, 4096}) grids.push_back(share(make_grid(1.0, N, GridScheme::LogRefined)));
  Json rows = Json::array();
  for (double s : {-3.0, -1.2, 0.8, 1.0, 5.0}) {
    KernelKind kind = s > 0.5 ? KernelKind::P0 : KernelKind::P1;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> res;
      for (const auto& g : grids) {
        std::vector<double> w(g->size());
        for (int i = 0; i < g->size(); ++i) w[i] = bump(g->nodes[i], k);
        res.push_back(ode_residual(KernelOperator(kind, s, *g), w));
      }
      bool pass = res[1] <= 1e-3 && res[0] > res[1] && res[1] > res[2];
      ok = ok && pass;
      rows.push_back({{"s", s}, {"bump", k}, {"res_1024", res[0]}, {"res_2048", res[1]}, {"res_4096", res[2]}, {"pass", pass}});
    }
  }
  d["cases"] = rows;
  return ok;
}

bool c2(Json& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 1000003ULL + 2);
  std::uniform_real_distribution<double> U(-6.0, 6.0);
  RadialGrid g = make_grid(1.0, 512, GridScheme::LogRefined, 1e-8);
  const SchurTarget all[4] = {SchurTarget::InvRP0, SchurTarget::P0InvR, SchurTarget::InvRP1, SchurTarget::P1InvR};
  bool ok = true;
  int certs = 0, fails = 0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 200; ++k) {
    double s;
    do s = U(rng); while (std::abs(s + 0.5) < 0.02 || std::abs(s - 0.5) < 0.02);
    for (SchurTarget t : all) {
      if (!schur_admissible(s, t)) continue;
      auto cert = schur_certificate(s, t);
      double nrm = operator_norm(s, t, g);
      double ratio = nrm / cert.bound;
      worst_ratio = std::max(worst_ratio, ratio);
      ++certs;
      if (!cert.passed || ratio > 1.0 + 1e-6) ++fails;
    }
  }
  ok = fails == 0;
  RadialGrid fine = make_grid(1.0, 4096, GridScheme::LogRefined, 1e-8);
  double hardy = operator_norm(0.0, SchurTarget::InvRP0, fine);
  double one = operator_norm(1.0, SchurTarget::InvRP0, fine);
  bool mellin = std::abs(hardy - 2.0) <= 0.05 * 2.0 && std::abs(one - 2.0 / 3.0) <= 0.05 * 2.0 / 3.0;
  d["samples"] = 200;
  d["certificates"] = certs;
  d["failures"] = fails;
  d["max_norm_over_bound"] = worst_ratio;
  d["hardy_norm_s0"] = hardy;
  d["norm_s1"] = one;
  d["grid"] = grid_metadata(g);
  d["mellin_grid"] = grid_metadata(fine);
  return ok && mellin;
}

bool c3(Json& d, std::uint64_t seed) {
  auto spec = mode_reduce_suspension(sphere_dirac_spectrum(3, 10), 1.0, 1.0);
  auto val = validate_spec(spec);
  auto g = share(make_grid(spec.theta, 4096, GridScheme::LogRefined));
  ConeOperator op(spec, g);
  auto cut = make_cutoff(0.1, *g);
  double right = 0.0, left = 0.0, exact = 0.0;
  for (int k = 0; k < 3; ++k) {
    auto u = random_smooth_section(g, op.spectrum_ptr(), 1e-3, 0.9 * spec.cone_theta, seed * 7919ULL + 30 + k);
    right = std::max(right, parametrix_right_identity(op, cut, u));
    left = std::max(left, parametrix_left_identity(op, u));
    exact = std::max(exact, exact_inverse_residual(op, u));
  }
  auto ni = op.neumann_info();
  d["theta_prime"] = spec.cone_theta;
  d["validation"] = to_json(val);
  d["modes"] = spec.spectrum.total_modes();
  d["neumann_q"] = ni.q;
  d["j_max"] = ni.j_max;
  d["right_identity"] = right;
  d["left_identity"] = left;
  d["exact_inverse"] = exact;
  d["grid"] = grid_metadata(*g);
  return val.valid && right <= 1e-3 && left <= 1e-3 && exact <= 1e-3;
}

// dense block matrices for the commutation oracle
Eigen::MatrixXd dense_parametrix(const ConeOperatorSpec& spec, const RadialGrid& g) {
  const auto s = spec.spectrum.mode_eigenvalues();
  const int M = int(s.size()), N = g.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(M * N, M * N);
  for (int m = 0; m < M; ++m) {
    KernelOperator k(s[m] > 0.5 ? KernelKind::P0 : KernelKind::P1, s[m], g, spec.cone_theta);
    P.block(m * N, m * N, N, N) = dense_matrix(k);
  }
  return P;
}

Eigen::MatrixXd dense_s1_over_r(const ConeOperatorSpec& spec, const RadialGrid& g) {
  const auto s = spec.spectrum.mode_eigenvalues();
  const int M = int(s.size()), N = g.size();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M * N, M * N);
  Eigen::MatrixXd C = Eigen::MatrixXd(spec.perturbation.coupling.matrix(M));
  for (int i = 0; i < N; ++i) {
    double r = g.nodes[i];
    for (int m = 0; m < M; ++m) {
      S(m * N + i, m * N + i) += s[m] * spec.perturbation.diag.value(s[m], r) / r;
      for (int q = 0; q < M; ++q) S(m * N + i, q * N + i) += spec.perturbation.coupling.beta(r) / r * C(m, q);
    }
  }
  return S;
}

Eigen::VectorXcd flatten(const ModeSection& u) {
  Eigen::VectorXcd v(u.modes() * u.nodes());
  for (int m = 0; m < u.modes(); ++m)
    for (int i = 0; i < u.nodes(); ++i) v(m * u.nodes() + i) = u.coeffs()(m, i);
  return v;
}

bool c4(Json& d, std::uint64_t seed) {
  ConeOperatorSpec spec;
  spec.spectrum = LinkSpectrum({{-2.5, 1}, {-1.5, 1}, {1.5, 1}, {2.5, 1}});
  spec.theta = spec.cone_theta = 1.0;
  spec.perturbation.diag = {DiagonalKind::Linear, 0.2};
  spec.perturbation.coupling.kind = CouplingKind::Tridiagonal;
  spec.perturbation.coupling.shape = CouplingShape::Linear;
  spec.perturbation.coupling.amplitude = 0.3;
  auto g = share(make_grid(1.0, 256, GridScheme::LogRefined));
  ConeOperator op(spec, g);
  auto u = random_smooth_section(g, op.spectrum_ptr(), 1e-3, 0.9, seed * 7919ULL + 40);
  Eigen::MatrixXd P = dense_parametrix(spec, *g), S = dense_s1_over_r(spec, *g);
  Eigen::MatrixXd A = P * S, B = S * P;
  Eigen::VectorXcd x = flatten(u);
  bool ok = true;
  Json rows = Json::array();
  Eigen::VectorXcd oracle_l = P.cast<std::complex<double>>() * x, oracle_r = x;
  ModeSection lib_l = op.apply_parametrix(u), lib_r = u;
  for (int j = 1; j <= 3; ++j) {
    oracle_l = A.cast<std::complex<double>>() * oracle_l;
    oracle_r = B.cast<std::complex<double>>() * oracle_r;
    lib_l = op.apply_P_inv_r_S1(lib_l);
    lib_r = op.apply_inv_r_S1_P(lib_r);
    Eigen::VectorXcd o_r = P.cast<std::complex<double>>() * oracle_r;
    ModeSection lib_rp = op.apply_parametrix(lib_r);
    double el = (flatten(lib_l) - oracle_l).norm() / oracle_l.norm();
    double er = (flatten(lib_rp) - o_r).norm() / o_r.norm();
    double oracle_comm = (oracle_l - o_r).norm() / std::max(oracle_l.norm(), o_r.norm());
    double comm = commutation_check(op, j, u);
    bool pass = el <= 1e-5 && er <= 1e-5 && comm <= 1e-5 && oracle_comm <= 1e-5;
    ok = ok && pass;
    rows.push_back({{"j", j}, {"lhs_vs_oracle", el}, {"rhs_vs_oracle", er}, {"commutation", comm},
                    {"oracle_commutation", oracle_comm}, {"pass", pass}});
  }
  d["cases"] = rows;
  d["grid"] = grid_metadata(*g);
  return ok;
}

bool c5(Json& d, std::uint64_t seed) {
  ConeOperatorSpec spec;
  spec.spectrum = sphere_dirac_spectrum(3, 3);
  spec.theta = spec.cone_theta = 1.0;
  spec.perturbation.diag = {DiagonalKind::Linear, 0.1};
  std::vector<double> lo, hi;
  for (int N : {1024, 4096}) {
    auto g = share(make_grid(1.0, N, GridScheme::LogRefined));
    ConeOperator op(spec, g);
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (int k = 0; k < 100; ++k) {
      auto u = random_smooth_section(g, op.spectrum_ptr(), 1e-3, 0.9, seed * 7919ULL + 500 + k);
      auto rep = norm_report(op, u);
      mn = std::min(mn, *rep.ratio);
      mx = std::max(mx, *rep.ratio);
    }
    lo.push_back(mn);
    hi.push_back(mx);
  }
  double dc = std::abs(lo[0] / lo[1] - 1.0), dC = std::abs(hi[0] / hi[1] - 1.0);
  d["c_1024"] = lo[0];
  d["C_1024"] = hi[0];
  d["c_4096"] = lo[1];
  d["C_4096"] = hi[1];
  d["rel_change_c"] = dc;
  d["rel_change_C"] = dC;
  d["sections"] = 100;
  return lo[1] > 0.0 && std::isfinite(hi[1]) && dc <= 0.1 && dC <= 0.1;
}

bool c6(Json& d) {
  bool ok = true;
  Json models = Json::array();
  auto ms = shipped_models();
  for (const auto& m : ms) {
    auto rep = svd_index(m);
    ok = ok && rep.agree;
    models.push_back({{"label", m.label}, {"analytic", rep.analytic_index}, {"svd", rep.svd_index}, {"agree", rep.agree}});
  }
  ok = ok && ms.size() >= 20;
  d["models"] = models;

  Json scans = Json::array();
  auto scan = [&](const char* label, ScanEndpoint ep, double slope, double t0, double t1, std::vector<double> expect) {
    ScanFamily f;
    f.base.modes = {{-1, 1, 1}};
    f.endpoint = ep;
    f.slope = slope;
    f.t0 = t0;
    f.t1 = t1;
    auto r = index_jump_scan(f);
    bool pass = r.coincide && r.jumps.size() == expect.size();
    for (std::size_t k = 0; pass && k < expect.size(); ++k) pass = std::abs(r.jumps[k] - expect[k]) <= 1e-3;
    ok = ok && pass;
    scans.push_back({{"label", label}, {"jumps", r.jumps}, {"crossings", r.crossings},
                     {"svd_checked", r.svd_checked.size()}, {"svd_disagree", r.svd_disagree.size()},
                     {"svd_unstable", r.svd_unstable}, {"pass", pass}});
  };
  scan("s_pi(t) = t", ScanEndpoint::SPi, 1.0, 0.4, 1.6, {0.5});
  scan("s0(t) = -t", ScanEndpoint::S0, -1.0, 0.4, 1.6, {0.5});
  scan("s_pi(t) = t, no crossing", ScanEndpoint::SPi, 1.0, 0.6, 1.4, {});
  d["scans"] = scans;

  Json traces = Json::array();
  auto trace = [&](const char* label, const DeformFamily& f) {
    auto tr = deform_index_trace(f, 10);
    ok = ok && tr.constant;
    traces.push_back({{"label", label}, {"index", tr.svd_index}, {"max_modulus", tr.max_modulus}, {"constant", tr.constant}});
  };
  DeformFamily warp;
  warp.kind = DeformKind::Warp;
  warp.base.modes = {{-1, 1, 2}, {1.2, -0.8, 1}, {2, 2, 1}};
  trace("sin -> straight warp", warp);
  DeformFamily pert;
  pert.kind = DeformKind::Perturbation;
  pert.base.modes = {{-1, 1, 1}, {1.5, -1.5, 1}, {-3, -3, 1}};
  pert.kappa_max = 0.2;
  trace("t S_1 scaling", pert);
  DeformFamily drift;
  drift.kind = DeformKind::SpectrumDrift;
  drift.base.modes = {{-1, 1, 1}, {2, -1, 1}};
  drift.target = {{-2, 3, 1}, {0.7, -2.5, 1}};
  trace("gapped spectrum drift", drift);
  d["traces"] = traces;
  return ok;
}

bool c7(Json& d) {
  bool ok = true;
  Json rows = Json::array();
  for (int deg = -2; deg <= 2; ++deg) {
    auto m = flow_model(deg);
    auto r = svd_index(m);
    bool pass = r.svd_index == 2 * deg && r.analytic_index == 2 * deg;
    ok = ok && pass;
    rows.push_back({{"d", deg}, {"svd", r.svd_index}, {"analytic", r.analytic_index}, {"pass", pass}});
  }
  d["cases"] = rows;
  return ok;
}

bool c8(Json& d) {
  bool ok = true;
  Json rows = Json::array();
  for (int n : {2, 3, 5}) {
    const double target = n * (n + 1.0);
    std::vector<double> r;
    for (int i = 0; i < 200; ++i) r.push_back(0.05 + (kPi - 0.1) * i / 199.0);
    auto an = suspension_scal(n, n * (n - 1.0), WarpFunction::sin(), r);
    double ea = 0.0;
    for (double x : an.scal) ea = std::max(ea, std::abs(x - target));
    std::vector<double> rs, vs;
    for (int i = 0; i < 2001; ++i) {
      rs.push_back(0.1 + (kPi - 0.2) * i / 2000.0);
      vs.push_back(std::sin(rs.back()));
    }
    auto fd = suspension_scal(n, n * (n - 1.0), WarpFunction::custom(rs, vs), {});
    double ef = 0.0;
    for (double x : fd.scal) ef = std::max(ef, std::abs(x - target));
    bool pass = ea <= 1e-9 && ef <= 1e-4;
    ok = ok && pass;
    rows.push_back({{"n", n}, {"analytic_max_error", ea}, {"fd_max_error", ef}, {"fd_samples", 2001}, {"pass", pass}});
  }
  d["cases"] = rows;
  return ok;
}

bool c9(Json& d) {
  bool ok = true;
  Json rows = Json::array();
  std::vector<double> r;
  for (int i = 0; i < 60; ++i) r.push_back(std::pow(10.0, -3.0 + 3.0 * i / 59.0));
  for (int n : {2, 3}) {
    for (double c : {0.0, double(n * (n - 1)), 1.5 * n * (n - 1)}) {
      WarpedMetricFamily fam;
      fam.n = n;
      fam.scal_link = c;
      auto p = generalized_cone_scal(fam, r);
      double e = 0.0;
      for (double x : p.r2_scal) e = std::max(e, std::abs(x - (c - n * (n - 1))));
      double el = std::abs(*p.limit_estimate - (c - n * (n - 1)));
      bool pass = e <= 1e-9 && el <= 1e-9;
      ok = ok && pass;
      rows.push_back({{"family", "exact cone"}, {"n", n}, {"scal_link", c}, {"max_error", e}, {"limit_error", el}, {"pass", pass}});
    }
    std::vector<std::vector<LambdaFunction>> fams = {
        std::vector<LambdaFunction>(n, LambdaFunction{LambdaKind::Quadratic, 1.0, 2.0}),
        [&] {
          std::vector<LambdaFunction> v;
          for (int i = 0; i < n; ++i) v.push_back({LambdaKind::Quadratic, 1.0 + i, 2.0});
          return v;
        }()};
    for (std::size_t q = 0; q < fams.size(); ++q) {
      WarpedMetricFamily fam;
      fam.n = n;
      fam.lambdas = fams[q];
      auto p = generalized_cone_scal(fam, r);
      double el = std::abs(*p.limit_estimate + n * (n - 1.0));
      auto metric = flat_patch_metric(fam);
      double ec = 0.0;
      for (double x : {0.02, 0.05, 0.1, 0.3}) {
        double a = generalized_cone_scal_at(fam, x), b = christoffel_scal(metric, x, 1e-2 * x);
        ec = std::max(ec, std::abs(a - b) / std::max(1.0, std::abs(a)));
      }
      bool pass = el <= 1e-4 && ec <= 1e-6;
      ok = ok && pass;
      rows.push_back({{"family", q == 0 ? "lambda = 1 + r^2" : "lambda_i = 1 + i r^2"}, {"n", n}, {"limit", *p.limit_estimate},
                      {"limit_error", el}, {"christoffel_rel_error", ec}, {"pass", pass}});
    }
  }
  d["cases"] = rows;
  return ok;
}

bool c10(Json& d) {
  bool ok = true;
  Json rows = Json::array();
  std::vector<RadialGrid> grids = {make_grid(1.0, 4096, GridScheme::LogRefined, 1e-14),
                                   make_grid(1.0, 4096, GridScheme::Uniform)};
  RadialGrid dense;
  dense.theta = 1.0;
  for (int i = 0; i <= 100000; ++i) dense.nodes.push_back(std::pow(10.0, -14.0 + 14.0 * i / 100000.0));
  dense.weights.assign(dense.nodes.size(), 0.0);
  for (double eps : {0.5, 0.25, 0.1}) {
    double slope = 0.0;
    bool support = true, plateau = true;
    auto scan = [&](const RadialGrid& g) {
      Cutoff c = make_cutoff(eps, g);
      for (int i = 0; i < g.size(); ++i) {
        double r = g.nodes[i], tau = c.ramp.value(r), dt = c.ramp.derivative(r);
        slope = std::max(slope, std::abs(r * dt));
        if (r > eps && (tau != 0.0 || dt != 0.0)) support = false;
        if (r <= c.delta * eps && tau != 1.0) plateau = false;
      }
      for (int i = 0; i < g.size() && !c.tau.empty(); ++i) {
        slope = std::max(slope, std::abs(g.nodes[i] * c.dtau[i]));
        if (g.nodes[i] > eps && c.tau[i] != 0.0) support = false;
      }
    };
    for (const auto& g : grids) scan(g);
    scan(dense);
    bool pass = slope <= eps && support && plateau;
    ok = ok && pass;
    rows.push_back({{"eps", eps}, {"sup_r_tau_prime", slope}, {"support_ok", support}, {"plateau_ok", plateau}, {"pass", pass}});
  }
  d["cases"] = rows;
  return ok;
}

bool c11(Json& d, const AcceptanceOptions& opt) {
  std::vector<int> ids = opt.quick ? std::vector<int>{4, 7, 10} : std::vector<int>{1, 4, 7, 8, 9, 10};
  bool ok = true;
  Json rows = Json::array();
  for (int id : ids) {
    AcceptanceOptions o = opt;
    auto a = run_criterion(id, o), b = run_criterion(id, o);
    auto da = sha256_hex(a.detail.dump()), db = sha256_hex(b.detail.dump());
    ok = ok && da == db;
    rows.push_back({{"criterion", id}, {"digest", da}, {"identical", da == db}});
  }
  d["replays"] = rows;
  return ok;
}

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& opt) {
  CriterionResult r;
  r.id = id;
  auto info = criterion_info(id);
  r.name = info.name;
  r.budget = info.budget;
  auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    switch (id) {
      case 1: ok = c1(r.detail); break;
      case 2: ok = c2(r.detail, opt.seed); break;
      case 3: ok = c3(r.detail, opt.seed); break;
      case 4: ok = c4(r.detail, opt.seed); break;
      case 5: ok = c5(r.detail, opt.seed); break;
      case 6: ok = c6(r.detail); break;
      case 7: ok = c7(r.detail); break;
      case 8: ok = c8(r.detail); break;
      case 9: ok = c9(r.detail); break;
      case 10: ok = c10(r.detail); break;
      case 11: ok = c11(r.detail, opt); break;
    }
  } catch (const std::exception& e) {
    r.detail["error"] = e.what();
    ok = false;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.detail["checks_passed"] = ok;
  r.passed = ok && (r.budget <= 0.0 || r.seconds <= r.budget);
  return r;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 11; ++id) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    out.push_back(run_criterion(id, opt));
  }
  return out;
}

std::string summary_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " (" << std::fixed;
  os.precision(2);
  os << r.seconds << " s";
  if (r.budget > 0) os << ", budget " << r.budget << " s";
  os << ")";
  if (r.detail.contains("error")) os << " error: " << r.detail["error"].get<std::string>();
  return os.str();
}

Json results_json(const std::vector<CriterionResult>& rs) {
  Json a = Json::array();
  for (const auto& r : rs) a.push_back({{"id", r.id}, {"name", r.name}, {"detail", r.detail}});
  return a;
}

}  // namespace conelab
