#include "conelab/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "conelab/error.hpp"

extern "C" void dlasdq_(const char* uplo, const int* sqre, const int* n, const int* ncvt,
                        const int* nru, const int* ncc, double* d, double* e, double* vt,
                        const int* ldvt, double* u, const int* ldu, double* c, const int* ldc,
                        double* work, int* info, std::size_t uplo_len);
extern "C" void dstevx_(const char* jobz, const char* range, const int* n, double* d, double* e,
                        const double* vl, const double* vu, const int* il, const int* iu,
                        const double* abstol, int* m, double* w, double* z, const int* ldz,
                        double* work, int* iwork, int* ifail, int* info, std::size_t jobz_len,
                        std::size_t range_len);

namespace conelab {

namespace {

constexpr double kPi = std::numbers::pi;

// singular values of the n x (n+1) upper bidiagonal matrix (d, e), ascending
std::vector<double> bidiagonal_singular_values(std::vector<double> d, std::vector<double> e) {
  const int n = int(d.size());
  if (n == 0) return {};
  const int sqre = 1, zero = 0, one = 1;
  std::vector<double> work(4 * std::size_t(n) + 4);
  double dummy = 0.0;
  int info = 0;
  dlasdq_("U", &sqre, &n, &zero, &zero, &zero, d.data(), e.data(), &dummy, &one, &dummy, &one,
          &dummy, &one, work.data(), &info, 1);
  if (info != 0) throw Error("bidiagonal SVD did not converge (info " + std::to_string(info) + ")");
  for (auto& x : d) x = std::abs(x);
  std::sort(d.begin(), d.end());
  return d;
}

double effective(double s, const SuspensionModeModel& m) { return s * (1.0 + m.kappa); }

// coefficient c at the midpoints of the grid cells
std::vector<double> midpoint_coefficients(const ModeFlow& mode, const SuspensionModeModel& model,
                                          const RadialGrid& g) {
  const int n = g.size() - 1;
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i) {
    double r = 0.5 * (g.nodes[i] + g.nodes[i + 1]);
    c[i] = (1.0 + model.kappa) * ramp_profile(mode, r) / warp_sigma(model.warp_blend, r);
  }
  return c;
}

struct Bidiagonal {
  std::vector<double> d, e;
};

// weighted box scheme: row i is the midpoint rule on [r_i, r_{i+1}], scaled by sqrt(h_i);
// columns scaled by 1/sqrt(w_j)
Bidiagonal box_matrix(const std::vector<double>& c, const RadialGrid& g, bool adjoint,
                      bool derivative_part = true) {
  const int n = g.size() - 1;
  Bidiagonal B;
  B.d.resize(n);
  B.e.resize(n);
  const double sg = adjoint ? -1.0 : 1.0;
  for (int i = 0; i < n; ++i) {
    double h = g.nodes[i + 1] - g.nodes[i];
    double dd = derivative_part ? sg / h : 0.0;
    double sh = std::sqrt(h);
    B.d[i] = (-dd + 0.5 * c[i]) * sh / std::sqrt(g.weights[i]);
    B.e[i] = (dd + 0.5 * c[i]) * sh / std::sqrt(g.weights[i + 1]);
  }
  return B;
}

// right singular vectors (weighted coordinates) for singular values with ascending index
// [first, last] (0-based, non-structural), from eigenvectors of the Golub-Kahan tridiagonal
std::vector<std::vector<double>> right_singular_vectors(const Bidiagonal& B, int first, int last) {
  const int n = int(B.d.size());
  const int m2 = 2 * n + 1;
  std::vector<double> diag(m2, 0.0), off(m2, 0.0);
  for (int i = 0; i < n; ++i) {
    off[2 * i] = B.d[i];
    off[2 * i + 1] = B.e[i];
  }
  // eigenvalues -sigma (n of them), 0, +sigma; +sigma_k sits at 1-based index n + 2 + k
  const int il = n + 2 + first, iu = n + 2 + last;
  const double vl = 0.0, vu = 0.0, abstol = 0.0;
  int found = 0, info = 0;
  std::vector<double> w(m2), z(std::size_t(m2) * (iu - il + 1)), work(5 * std::size_t(m2));
  std::vector<int> iwork(5 * std::size_t(m2)), ifail(m2);
  dstevx_("V", "I", &m2, diag.data(), off.data(), &vl, &vu, &il, &iu, &abstol, &found, w.data(),
          z.data(), &m2, work.data(), iwork.data(), ifail.data(), &info, 1, 1);
  if (info != 0) throw Error("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");
  std::vector<std::vector<double>> out;
  for (int k = 0; k < found; ++k) {
    std::vector<double> v(n + 1);
    for (int j = 0; j <= n; ++j) v[j] = z[std::size_t(k) * m2 + 2 * j];
    out.push_back(std::move(v));
  }
  return out;
}

// endpoint-decay metric of a weighted-normalized nodal vector u (plain nodal values)
double decay_metric(const std::vector<double>& u, const RadialGrid& g) {
  double nrm = g.l2_norm(u);
  if (!(nrm > 0.0) || !std::isfinite(nrm)) return std::numeric_limits<double>::infinity();
  const double L = g.theta;
  double a = std::abs(u.front()) / nrm * std::sqrt(g.nodes.front());
  double b = std::abs(u.back()) / nrm * std::sqrt(L - g.nodes.back());
  return std::max(a, b);
}

// structural null vector of the bidiagonal box matrix (unweighted nodal values), from the
// two-term recurrence carried in log scale
std::vector<double> structural_null_vector(const Bidiagonal& B, const RadialGrid& g) {
  const int N = g.size();
  std::vector<double> logu(N), sign(N, 1.0);
  logu[0] = 0.0;
  for (int i = 0; i + 1 < N; ++i) {
    // in unweighted form: A_ii = d_i sqrt(w_i), A_i,i+1 = e_i sqrt(w_{i+1})
    double aii = B.d[i] * std::sqrt(g.weights[i]);
    double aij = B.e[i] * std::sqrt(g.weights[i + 1]);
    if (aij == 0.0) throw Error("box scheme degenerate: zero superdiagonal");
    double ratio = -aii / aij;
    if (ratio == 0.0) {
      logu[i + 1] = -1e300;
    } else {
      logu[i + 1] = logu[i] + std::log(std::abs(ratio));
    }
    sign[i + 1] = sign[i] * (ratio < 0 ? -1.0 : 1.0);
  }
  double mx = *std::max_element(logu.begin(), logu.end());
  std::vector<double> u(N);
  for (int i = 0; i < N; ++i) u[i] = sign[i] * std::exp(logu[i] - mx);
  return u;
}

struct ModeCount {
  int count = 0;           // genuine null vectors
  double decay = 0.0;      // decay metric of the structural candidate
  double smallest = 0.0;   // smallest non-structural singular value
  double sigma_max = 0.0;
  // sigma / threshold of decaying candidates with sigma < 10 threshold
  std::vector<double> decaying_small;
};

ModeCount count_null(const ModeFlow& mode, const SuspensionModeModel& model, const RadialGrid& g,
                     bool adjoint, double threshold_rel, double decay_tol) {
  auto c = midpoint_coefficients(mode, model, g);
  Bidiagonal B = box_matrix(c, g, adjoint);
  auto sv = bidiagonal_singular_values(B.d, B.e);
  ModeCount mc;
  mc.sigma_max = sv.back();
  mc.smallest = sv.front();
  const double thr = threshold_rel * mc.sigma_max;
  auto u = structural_null_vector(B, g);
  mc.decay = decay_metric(u, g);
  if (mc.decay < decay_tol) ++mc.count;
  int k = int(std::count_if(sv.begin(), sv.end(), [&](double x) { return x < 10.0 * thr; }));
  if (k > 0) {
    auto vecs = right_singular_vectors(B, 0, k - 1);
    for (int q = 0; q < int(vecs.size()) && q < k; ++q) {
      std::vector<double> v(g.size());
      for (int j = 0; j < g.size(); ++j) v[j] = vecs[q][j] / std::sqrt(g.weights[j]);
      if (decay_metric(v, g) >= decay_tol) continue;
      mc.decaying_small.push_back(sv[q] / thr);
      if (sv[q] < thr) ++mc.count;
    }
  }
  return mc;
}

}  // namespace

double ramp_profile(const ModeFlow& mode, double r) {
  double x = (r - kPi / 3.0) / (kPi / 3.0);
  return mode.s0 + (mode.s_pi - mode.s0) * smooth_step(x);
}

double straight_warp(double r) {
  double b = smooth_step((r - 1.0) / (kPi - 2.0));
  return (1.0 - b) * r + b * (kPi - r);
}

double warp_sigma(double blend, double r) {
  return blend * straight_warp(r) + (1.0 - blend) * std::sin(r);
}

void validate_model(const SuspensionModeModel& model) {
  if (model.modes.empty()) throw Error("model has no modes");
  if (!(model.warp_blend >= 0.0 && model.warp_blend <= 1.0))
    throw Error("warp blend must lie in [0, 1]");
  if (!(1.0 + model.kappa > 0.0)) throw Error("perturbation factor 1 + kappa must be positive");
  for (std::size_t k = 0; k < model.modes.size(); ++k) {
    const auto& m = model.modes[k];
    if (m.mult < 1) throw Error("mode multiplicity must be >= 1");
    double a = effective(m.s0, model), b = effective(m.s_pi, model);
    if (!(std::abs(a) > 0.5) || !(std::abs(b) > 0.5)) {
      std::ostringstream os;
      os << "endpoint in gap: mode " << k << " has (s0, s_pi) = (" << a << ", " << b << ")";
      throw Error(os.str());
    }
  }
}

int analytic_mode_index(const SuspensionModeModel& model) {
  validate_model(model);
  int idx = 0;
  for (const auto& m : model.modes) {
    double a = effective(m.s0, model), b = effective(m.s_pi, model);
    int ker = (a < -0.5 && b > 0.5) ? 1 : 0;
    int coker = (a > 0.5 && b < -0.5) ? 1 : 0;
    idx += m.mult * (ker - coker);
  }
  return idx;
}

std::vector<double> mode_singular_values(const ModeFlow& mode, const SuspensionModeModel& model,
                                         const RadialGrid& grid, bool adjoint) {
  auto c = midpoint_coefficients(mode, model, grid);
  Bidiagonal B = box_matrix(c, grid, adjoint);
  return bidiagonal_singular_values(B.d, B.e);
}

IndexReport svd_index(const SuspensionModeModel& model, const SvdOptions& opt) {
  validate_model(model);
  if (opt.N < 512) throw Error("svd_index needs N >= 512");
  IndexReport rep;
  rep.analytic_index = analytic_mode_index(model);
  rep.N = opt.N;
  rep.threshold_rel = opt.threshold_rel;
  rep.decay_tol = opt.decay_tol;
  RadialGrid g1 = make_two_ended_grid(kPi, opt.N, opt.r_min);
  RadialGrid g2 = make_two_ended_grid(kPi, 2 * opt.N, opt.r_min);
  std::map<std::pair<double, double>, ModeIndexDetail> cache;
  auto ambiguous = [](const ModeCount& a, const ModeCount& b) {
    auto near = [](const std::vector<double>& v) {
      for (double x : v)
        if (x > 0.1) return true;
      return false;
    };
    return near(a.decaying_small) && near(b.decaying_small);
  };
  int total = 0;
  for (const auto& m : model.modes) {
    auto key = std::make_pair(m.s0, m.s_pi);
    auto it = cache.find(key);
    if (it == cache.end()) {
      ModeIndexDetail det;
      det.mode = m;
      ModeCount k1 = count_null(m, model, g1, false, opt.threshold_rel, opt.decay_tol);
      ModeCount k2 = count_null(m, model, g2, false, opt.threshold_rel, opt.decay_tol);
      ModeCount c1 = count_null(m, model, g1, true, opt.threshold_rel, opt.decay_tol);
      ModeCount c2 = count_null(m, model, g2, true, opt.threshold_rel, opt.decay_tol);
      if (k1.count != k2.count || c1.count != c2.count || ambiguous(k1, k2) || ambiguous(c1, c2)) {
        std::ostringstream os;
        os << "rank decision unstable for mode (" << m.s0 << ", " << m.s_pi << ") at N = " << opt.N
           << " and " << 2 * opt.N;
        throw Error(os.str());
      }
      det.ker = k1.count;
      det.coker = c1.count;
      det.ker_decay = k1.decay;
      det.coker_decay = c1.decay;
      det.smallest_singular = k1.smallest;
      det.smallest_singular_adjoint = c1.smallest;
      det.sigma_max = std::max(k1.sigma_max, c1.sigma_max);
      it = cache.emplace(key, det).first;
    }
    ModeIndexDetail det = it->second;
    det.mode = m;
    total += m.mult * (det.ker - det.coker);
    rep.threshold = std::max(rep.threshold, opt.threshold_rel * det.sigma_max);
    rep.near_zero_singulars.push_back(det.smallest_singular);
    rep.near_zero_singulars.push_back(det.smallest_singular_adjoint);
    rep.details.push_back(det);
  }
  rep.svd_index = total;
  rep.agree = rep.svd_index == rep.analytic_index;
  return rep;
}

JumpScanReport index_jump_scan(const ScanFamily& f) {
  if (f.mode < 0 || f.mode >= int(f.base.modes.size())) throw Error("scan mode index out of range");
  if (!(f.resolution > 0.0) || !(f.t1 > f.t0)) throw Error("scan needs t1 > t0 and resolution > 0");
  if (f.slope == 0.0) throw Error("scan slope must be nonzero");
  JumpScanReport rep;
  const int n = int(std::llround((f.t1 - f.t0) / f.resolution));
  auto model_at_t = [&](double t) {
    SuspensionModeModel m = f.base;
    double v = f.slope * t + f.offset;
    if (f.endpoint == ScanEndpoint::S0)
      m.modes[f.mode].s0 = v;
    else
      m.modes[f.mode].s_pi = v;
    return m;
  };
  for (int k = 0; k <= n; ++k) {
    double t = f.t0 + (f.t1 - f.t0) * double(k) / double(n);
    rep.params.push_back(t);
    SuspensionModeModel m = model_at_t(t);
    std::optional<int> st;
    try {
      st = analytic_mode_index(m);
    } catch (const Error&) {
      st.reset();
    }
    rep.analytic.push_back(st);
    if (st && f.svd_stride > 0 && k % f.svd_stride == 0) {
      rep.svd_checked.push_back(t);
      try {
        auto ir = svd_index(m, f.svd);
        if (!ir.agree) rep.svd_disagree.push_back(t);
      } catch (const Error&) {
        rep.svd_unstable.push_back(t);
      }
    }
  }
  for (std::size_t k = 1; k < rep.params.size(); ++k)
    if (rep.analytic[k] != rep.analytic[k - 1]) rep.jumps.push_back(0.5 * (rep.params[k] + rep.params[k - 1]));
  for (double sgn : {-1.0, 1.0}) {
    double t = (sgn * 0.5 / (1.0 + f.base.kappa) - f.offset) / f.slope;
    if (t >= f.t0 && t <= f.t1) rep.crossings.push_back(t);
  }
  std::sort(rep.crossings.begin(), rep.crossings.end());
  auto near_any = [&](double x, const std::vector<double>& ys, double tol) {
    for (double y : ys)
      if (std::abs(x - y) <= tol) return true;
    return false;
  };
  const double tol = f.resolution * (1.0 + 1e-9);
  bool ok = rep.svd_disagree.empty();
  for (double j : rep.jumps) ok = ok && near_any(j, rep.crossings, tol);
  for (double c : rep.crossings) ok = ok && near_any(c, rep.jumps, tol);
  for (double u : rep.svd_unstable) ok = ok && near_any(u, rep.crossings, 10.0 * f.resolution);
  rep.coincide = ok;
  return rep;
}

SuspensionModeModel model_at(const DeformFamily& f, double t) {
  SuspensionModeModel m = f.base;
  switch (f.kind) {
    case DeformKind::Warp:
      m.warp_blend = t;
      break;
    case DeformKind::Perturbation:
      m.kappa = t * f.kappa_max;
      break;
    case DeformKind::SpectrumDrift:
      if (f.target.size() != f.base.modes.size())
        throw Error("spectrum drift target must have as many modes as the base model");
      for (std::size_t k = 0; k < m.modes.size(); ++k) {
        m.modes[k].s0 = (1.0 - t) * f.base.modes[k].s0 + t * f.target[k].s0;
        m.modes[k].s_pi = (1.0 - t) * f.base.modes[k].s_pi + t * f.target[k].s_pi;
      }
      break;
  }
  return m;
}

namespace {

// caps on kappa for eigenvalue s: |kappa| < min(|(2s+1)/(4s)|, |(2s-1)/(4s)|)
double kappa_cap(double s) {
  return std::min(std::abs((2 * s + 1) / (4 * s)), std::abs((2 * s - 1) / (4 * s)));
}

}  // namespace

DeformTrace deform_index_trace(const DeformFamily& f, int steps) {
  if (steps < 1) throw Error("deform_index_trace needs steps >= 1");
  DeformTrace tr;
  RadialGrid g = make_two_ended_grid(kPi, f.svd.N, f.svd.r_min);
  std::vector<std::vector<double>> prev;
  for (int k = 0; k <= steps; ++k) {
    double t = double(k) / double(steps);
    SuspensionModeModel m = model_at(f, t);
    try {
      validate_model(m);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "gap fails at t = " << t << ": " << e.what();
      throw Error(os.str());
    }
    if (f.kind == DeformKind::Perturbation) {
      for (const auto& md : f.base.modes)
        for (double s : {md.s0, md.s_pi})
          if (!(std::abs(m.kappa) < kappa_cap(s))) {
            std::ostringstream os;
            os << "perturbation caps violated at t = " << t;
            throw Error(os.str());
          }
    }
    auto rep = svd_index(m, f.svd);
    tr.t.push_back(t);
    tr.svd_index.push_back(rep.svd_index);
    tr.analytic_index.push_back(rep.analytic_index);
    std::vector<std::vector<double>> cur;
    for (const auto& md : m.modes) cur.push_back(midpoint_coefficients(md, m, g));
    double mod = 0.0;
    if (!prev.empty()) {
      for (std::size_t q = 0; q < cur.size(); ++q) {
        std::vector<double> dc(cur[q].size());
        for (std::size_t i = 0; i < dc.size(); ++i) dc[i] = cur[q][i] - prev[q][i];
        auto diff = box_matrix(dc, g, false, false);
        auto full = box_matrix(cur[q], g, false);
        double num = bidiagonal_singular_values(diff.d, diff.e).back();
        double den = bidiagonal_singular_values(full.d, full.e).back();
        mod = std::max(mod, num / den);
      }
    }
    tr.step_modulus.push_back(mod);
    tr.max_modulus = std::max(tr.max_modulus, mod);
    prev = std::move(cur);
  }
  tr.constant = true;
  for (std::size_t k = 0; k < tr.svd_index.size(); ++k)
    tr.constant = tr.constant && tr.svd_index[k] == tr.svd_index[0] &&
                  tr.analytic_index[k] == tr.analytic_index[0];
  return tr;
}

std::vector<SuspensionModeModel> shipped_models() {
  auto mk = [](std::string label, std::vector<ModeFlow> modes, double warp = 0.0, double kappa = 0.0) {
    SuspensionModeModel m;
    m.label = std::move(label);
    m.modes = std::move(modes);
    m.warp_blend = warp;
    m.kappa = kappa;
    return m;
  };
  return {
      mk("updown", {{-1, 1, 1}}),
      mk("downup", {{1, -1, 1}}),
      mk("flat_positive", {{1, 1, 1}}),
      mk("flat_negative", {{-2, -2, 1}}),
      mk("symmetric_pair", {{-2, -2, 1}, {2, 2, 1}}),
      mk("three_up_one_down", {{-1, 1, 1}, {-1, 1, 1}, {-1, 1, 1}, {1, -1, 1}}),
      mk("triple_up", {{-1.5, 1.5, 3}}),
      mk("mixed", {{-1, 1, 2}, {1.2, -0.8, 1}, {2, 2, 1}}),
      mk("near_gap_up", {{-0.55, 0.55, 1}}),
      mk("near_gap_down", {{0.55, -0.55, 1}}),
      mk("asymmetric_up", {{-3, 2, 1}}),
      mk("asymmetric_down", {{2, -1.5, 2}}),
      mk("wide_up", {{-4, 4, 1}}),
      mk("straight_warp_up", {{-1, 1, 1}}, 1.0),
      mk("scaled_mixed", {{-1, 1, 1}, {1, -1, 2}}, 0.0, 0.2),
      mk("negative_drift", {{-1, -3, 1}}),
      mk("positive_drift", {{0.8, 3, 1}}),
      mk("double_up", {{-1, 1, 2}}),
      mk("double_down", {{1, -1, 1}, {1.5, -1.5, 1}}),
      mk("heavy_mix", {{-1, 1, 4}, {1, -1, 1}, {-2, -2, 2}}),
      mk("dirac_like", {{-1.5, 1.5, 2}, {1.5, -1.5, 2}, {-2.5, 2.5, 6}, {2.5, 2.5, 6}}),
      mk("half_warp_scaled", {{-1.2, 1.2, 1}, {1.3, 1.4, 1}}, 0.5, -0.1),
  };
}

SuspensionModeModel flow_model(int d) {
  SuspensionModeModel m;
  m.label = "flow d=" + std::to_string(d);
  int up = d > 0 ? 2 * d : 0, down = d < 0 ? -2 * d : 0;
  m.modes.push_back({-1.5, 1.5, up + 1});
  m.modes.push_back({1.5, -1.5, down + 1});
  m.modes.push_back({2.5, 2.5, 2});
  return m;
}

GlobalCutoffs default_global_cutoffs(const ConeOperatorSpec& spec, double eps) {
  if (!(eps > 0.0)) throw Error("cutoff eps must be positive");
  GlobalCutoffs c;
  c.chi.outer = 0.9 * spec.cone_theta;
  c.chi.inner = c.chi.outer * std::exp(-2.0 / eps);
  c.psi.outer = c.chi.inner;
  c.psi.inner = c.psi.outer / 4.0;
  c.phi.outer = c.psi.inner;
  c.phi.inner = c.phi.outer / 4.0;
  return c;
}

namespace {

std::vector<double> sample(const LogRamp& r, const RadialGrid& g, bool deriv, bool complement) {
  std::vector<double> v(g.size());
  for (int i = 0; i < g.size(); ++i) {
    double x = deriv ? r.derivative(g.nodes[i]) : r.value(g.nodes[i]);
    v[i] = complement ? (deriv ? -x : 1.0 - x) : x;
  }
  return v;
}

class GlobalSystem {
 public:
  GlobalSystem(const ConeOperator& op, const GlobalCutoffs& c)
      : op_(op), g_(op.grid()) {
    const auto& bulk = *op.spec().bulk;
    A_ = bulk.block;
    G_ = bulk.glue;
    lu_ = Eigen::FullPivLU<Eigen::MatrixXd>(A_);
    phi_ = sample(c.phi, g_, false, false);
    dphi_ = sample(c.phi, g_, true, false);
    one_phi_ = sample(c.phi, g_, false, true);
    psi_ = sample(c.psi, g_, false, false);
    dpsi_ = sample(c.psi, g_, true, false);
    one_psi_ = sample(c.psi, g_, false, true);
    chi_ = sample(c.chi, g_, false, false);
    dchi_ = sample(c.chi, g_, true, false);
  }

  Eigen::VectorXcd trace(const ModeSection& u) const {
    return u.coeffs().col(u.nodes() - 1);
  }
  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const {
    Eigen::VectorXd re = lu_.solve(b.real()), im = lu_.solve(b.imag());
    Eigen::VectorXcd x(re.size());
    for (int i = 0; i < re.size(); ++i) x(i) = {re(i), im(i)};
    return x;
  }

  GlobalVector apply(const GlobalVector& u) const {
    GlobalVector out{A_.cast<std::complex<double>>() * u.bulk +
                         G_.cast<std::complex<double>>() * trace(u.cone),
                     op_.apply_K(u.cone)};
    return out;
  }

  GlobalVector right_parametrix(const GlobalVector& f) const {
    ModeSection p_out = op_.apply_parametrix(f.cone.times_radial(one_psi_));
    ModeSection p_in = op_.apply_parametrix(f.cone.times_radial(psi_));
    GlobalVector out{solve(f.bulk - G_.cast<std::complex<double>>() * trace(p_out)),
                     p_out.times_radial(one_phi_) + p_in.times_radial(chi_)};
    return out;
  }

  ModeSection X(const ModeSection& f) const {
    ModeSection p = op_.apply_parametrix(f.times_radial(psi_));
    return op_.apply_S1_over_r(p).times_radial(chi_) + p.times_radial(dchi_);
  }
  ModeSection X_adjoint(const ModeSection& g) const {
    ModeSection a = op_.apply_parametrix_adjoint(op_.apply_S1_over_r_adjoint(g.times_radial(chi_)));
    ModeSection b = op_.apply_parametrix_adjoint(g.times_radial(dchi_));
    return (a + b).times_radial(psi_);
  }
  ModeSection R(const ModeSection& f) const {
    ModeSection p = op_.apply_parametrix(f.times_radial(one_psi_));
    ModeSection out = op_.apply_S1_over_r(p).times_radial(one_phi_);
    out -= p.times_radial(dphi_);
    return out;
  }
  ModeSection R_perturbation_part(const ModeSection& f) const {
    ModeSection p = op_.apply_parametrix(f.times_radial(one_psi_));
    return op_.apply_S1_over_r(p).times_radial(one_phi_);
  }

  GlobalVector left_parametrix(const GlobalVector& g) const {
    ModeSection p_out = op_.apply_parametrix(g.cone.times_radial(one_psi_));
    ModeSection p_in = op_.apply_parametrix(op_.apply_V(g.cone.times_radial(psi_)));
    GlobalVector out{solve(g.bulk - G_.cast<std::complex<double>>() * trace(p_out)),
                     p_out.times_radial(one_phi_) + p_in.times_radial(chi_)};
    return out;
  }

  // u + L u - Y u
  GlobalVector left_model(const GlobalVector& u) const {
    ModeSection w = op_.apply_P_inv_r_S1(u.cone.times_radial(one_psi_));
    w += op_.apply_parametrix(u.cone.times_radial(dpsi_));
    ModeSection Y = Y_apply(u.cone);
    GlobalVector out{u.bulk - solve(G_.cast<std::complex<double>>() * trace(w)),
                     u.cone + w.times_radial(one_phi_) - Y};
    return out;
  }

  ModeSection Y_apply(const ModeSection& u) const {
    return op_.apply_parametrix(op_.apply_V(u.times_radial(dpsi_))).times_radial(chi_);
  }
  ModeSection Y_adjoint(const ModeSection& g) const {
    ModeSection x = op_.apply_parametrix_adjoint(g.times_radial(chi_));
    // V^* = sum (-B^*)^j, B^* = P^* (S_1/r)^*
    const int jmax = op_.neumann_info().j_max;
    ModeSection acc = x, term = x;
    for (int j = 1; j <= jmax; ++j) {
      term = op_.apply_parametrix_adjoint(op_.apply_S1_over_r_adjoint(term));
      term *= -1.0;
      acc += term;
    }
    return acc.times_radial(dpsi_);
  }

  int bulk_dim() const { return int(A_.rows()); }

 private:
  const ConeOperator& op_;
  const RadialGrid& g_;
  Eigen::MatrixXd A_, G_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  std::vector<double> phi_, dphi_, one_phi_, psi_, dpsi_, one_psi_, chi_, dchi_;
};

double global_norm(const GlobalVector& v) {
  return std::sqrt(v.bulk.squaredNorm() + std::pow(v.cone.l2_norm(), 2));
}

GlobalVector global_diff(const GlobalVector& a, const GlobalVector& b) {
  return GlobalVector{a.bulk - b.bulk, a.cone - b.cone};
}

Eigen::VectorXcd random_bulk(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(d);
  for (int i = 0; i < d; ++i) v(i) = {nd(rng), nd(rng)};
  return v;
}

}  // namespace

GlobalParametrixReport global_parametrix_check(const ConeOperatorSpec& spec, GridPtr grid,
                                               const GlobalCutoffs& cut, int probes,
                                               std::uint64_t seed) {
  if (!spec.bulk) throw Error("bulk block absent");
  const auto& bulk = *spec.bulk;
  const int M = spec.spectrum.total_modes();
  if (bulk.block.rows() == 0 || bulk.block.rows() != bulk.block.cols())
    throw Error("bulk block must be a nonempty square matrix");
  if (bulk.glue.rows() != bulk.block.rows() || bulk.glue.cols() != M)
    throw Error("glue must be (bulk dim) x (total modes)");
  if (!Eigen::FullPivLU<Eigen::MatrixXd>(bulk.block).isInvertible())
    throw Error("bulk block is singular");
  if (std::abs(spec.cone_theta - spec.theta) > 1e-12 * spec.theta)
    throw Error("global check expects cone_theta == theta");
  if (!(cut.phi.outer <= cut.psi.inner && cut.psi.outer <= cut.chi.inner && cut.chi.outer < spec.theta))
    throw Error("cutoffs must nest: phi inside {psi = 1}, psi inside {chi = 1}, chi supported below theta");
  if (probes < 1) throw Error("need at least one probe");
  ConeOperator op(spec, grid);
  if (std::abs(op.grid().nodes.back() - spec.theta) > 1e-12 * spec.theta)
    throw Error("grid must end at theta");
  if (cut.phi.inner <= op.grid().nodes.front())
    throw Error("cutoffs fall below the first grid node (increase eps or refine r_min)");
  GlobalSystem sys(op, cut);
  const int d = sys.bulk_dim();
  const double rmin = op.grid().nodes.front();

  GlobalParametrixReport rep;
  rep.probes = probes;
  rep.eps = cut.chi.log_slope();
  rep.remainder.resize(d + M * op.grid().size(), probes);
  std::mt19937_64 rng(seed);
  const double top = 0.95 * spec.theta;
  for (int k = 0; k < probes; ++k) {
    std::uint64_t s1 = rng(), s2 = rng(), s3 = rng(), s4 = rng();
    // right identity, general probe
    GlobalVector f{random_bulk(d, rng), random_log_section(grid, op.spectrum_ptr(), 2 * rmin, top, s1)};
    GlobalVector lhs = sys.apply(sys.right_parametrix(f));
    ModeSection Xf = sys.X(f.cone), Rf = sys.R(f.cone);
    GlobalVector model{f.bulk, f.cone + Xf + Rf};
    double fn = global_norm(f);
    rep.right_residual = std::max(rep.right_residual, global_norm(global_diff(lhs, model)) / fn);
    rep.remainder_norm = std::max(rep.remainder_norm, Rf.l2_norm() / fn);
    rep.cutoff_commutator_gap =
        std::max(rep.cutoff_commutator_gap, sys.R_perturbation_part(f.cone).l2_norm() / fn);
    rep.remainder.col(k).setZero();
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < op.grid().size(); ++i) rep.remainder(d + m * op.grid().size() + i, k) = Rf.coeffs()(m, i);

    // left identity, general probe (vanishes near theta)
    GlobalVector u{random_bulk(d, rng), random_log_section(grid, op.spectrum_ptr(), 2 * rmin, 0.9 * spec.theta, s2)};
    GlobalVector l = sys.left_parametrix(sys.apply(u));
    rep.left_residual = std::max(rep.left_residual, global_norm(global_diff(l, sys.left_model(u))) / global_norm(u));

    // localized probes: inside {phi = 1} and beyond the support of chi
    const double lo_hi = 0.9 * cut.phi.inner;
    const double hi_lo = 1.05 * cut.chi.outer;
    for (int zone = 0; zone < 2; ++zone) {
      double lo = zone == 0 ? 2 * rmin : hi_lo;
      double hi = zone == 0 ? lo_hi : top;
      if (!(hi > 1.5 * lo)) continue;
      GlobalVector fl{random_bulk(d, rng), random_log_section(grid, op.spectrum_ptr(), lo, hi, zone == 0 ? s3 : s4)};
      GlobalVector lr = sys.apply(sys.right_parametrix(fl));
      GlobalVector mr{fl.bulk, fl.cone + sys.X(fl.cone) + sys.R(fl.cone)};
      rep.local_right_residual = std::max(rep.local_right_residual, global_norm(global_diff(lr, mr)) / global_norm(fl));
      double hl = zone == 0 ? lo_hi : 0.9 * spec.theta;
      GlobalVector ul{random_bulk(d, rng), random_log_section(grid, op.spectrum_ptr(), lo, hl, zone == 0 ? s4 : s3)};
      GlobalVector ll = sys.left_parametrix(sys.apply(ul));
      rep.local_left_residual =
          std::max(rep.local_left_residual, global_norm(global_diff(ll, sys.left_model(ul))) / global_norm(ul));
    }
  }

  ModeSection start = random_log_section(grid, op.spectrum_ptr(), 2 * rmin, top, seed ^ 0x9e3779b97f4a7c15ULL);
  rep.X_norm = power_norm([&](const ModeSection& x) { return sys.X(x); },
                          [&](const ModeSection& x) { return sys.X_adjoint(x); }, start);
  rep.Y_norm = power_norm([&](const ModeSection& x) { return sys.Y_apply(x); },
                          [&](const ModeSection& x) { return sys.Y_adjoint(x); }, start);
  double inv_gap = 0.0;
  for (const auto& e : spec.spectrum.entries()) inv_gap = std::max(inv_gap, 1.0 / std::abs(e.s + 0.5));
  rep.X_design_bound = op.neumann_info().q + cut.chi.log_slope() * inv_gap;
  return rep;
}

}  // namespace conelab
