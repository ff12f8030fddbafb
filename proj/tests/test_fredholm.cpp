#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "conelab/error.hpp"
#include "conelab/fredholm.hpp"

using namespace conelab;

namespace {

constexpr double kPi = std::numbers::pi;

// log-coordinate tables of u = exp(-int_{pi/2}^r c) toward one end; returns int |u|^2 (or |1/u|^2) over
// the end region down to distance delta
double end_mass(const ModeFlow& m, const SuspensionModeModel& model, bool at_pi, bool adjoint, double delta) {
  auto c = [&](double r) { return (1 + model.kappa) * ramp_profile(m, r) / warp_sigma(model.warp_blend, r); };
  const int n = 40000;
  double x0 = std::log(delta), x1 = std::log(kPi / 2);
  double h = (x1 - x0) / n;
  // L(x) = int from the end-distance e^x up to pi/2 of the signed coefficient
  std::vector<double> L(n + 1, 0.0);
  auto f = [&](double x) {
    double d = std::exp(x);
    double r = at_pi ? kPi - d : d;
    return (at_pi ? -c(r) : c(r)) * d;
  };
  for (int i = n - 1; i >= 0; --i) {
    double a = x0 + i * h, b = a + h;
    L[i] = L[i + 1] + h / 6 * (f(a) + 4 * f(0.5 * (a + b)) + f(b));
  }
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    double d = std::exp(x0 + i * h);
    double e = adjoint ? -2 * L[i] : 2 * L[i];
    acc += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(e) * d * h;
  }
  return acc;
}

bool in_l2(const ModeFlow& m, const SuspensionModeModel& model, bool at_pi, bool adjoint) {
  double a = end_mass(m, model, at_pi, adjoint, 1e-6), b = end_mass(m, model, at_pi, adjoint, 1e-12);
  return b - a <= 0.5 * a;
}

// index from L^2 membership of the closed-form kernel and cokernel solutions
int quadrature_index(const SuspensionModeModel& model) {
  int idx = 0;
  for (const auto& m : model.modes) {
    bool ker = in_l2(m, model, false, false) && in_l2(m, model, true, false);
    bool coker = in_l2(m, model, false, true) && in_l2(m, model, true, true);
    idx += m.mult * (int(ker) - int(coker));
  }
  return idx;
}

SuspensionModeModel model(std::vector<ModeFlow> modes, double warp = 0.0, double kappa = 0.0) {
  SuspensionModeModel m;
  m.modes = std::move(modes);
  m.warp_blend = warp;
  m.kappa = kappa;
  return m;
}

}  // namespace

TEST_SUITE("fredholm") {

TEST_CASE("analytic index examples") {
  CHECK(analytic_mode_index(model({{-1, 1, 1}})) == 1);
  CHECK(analytic_mode_index(model({{1, -1, 1}})) == -1);
  CHECK(analytic_mode_index(model({{1, 1, 1}})) == 0);
  CHECK(analytic_mode_index(model({{-2, -2, 1}})) == 0);
  CHECK_THROWS_AS(analytic_mode_index(model({{-0.3, 1, 1}})), Error);
  CHECK_THROWS_AS(analytic_mode_index(model({{-1, 0.5, 1}})), Error);
}

TEST_CASE("analytic index against quadrature of the closed-form solutions") {
  for (const auto& m : shipped_models()) {
    INFO(m.label);
    CHECK(analytic_mode_index(m) == quadrature_index(m));
  }
  CHECK(quadrature_index(model({{-1, 1, 1}})) == 1);
  CHECK(quadrature_index(model({{1, -1, 1}})) == -1);
}

TEST_CASE("svd index examples") {
  auto a = svd_index(model({{-1, 1, 1}}));
  CHECK(a.svd_index == 1);
  CHECK(a.analytic_index == 1);
  CHECK(a.agree);
  CHECK(a.N == 512);
  CHECK(svd_index(model({{-2, -2, 1}, {2, 2, 1}})).svd_index == 0);
  CHECK(svd_index(model({{-1, 1, 1}, {-1, 1, 1}, {-1, 1, 1}, {1, -1, 1}})).svd_index == 2);
  SvdOptions small;
  small.N = 256;
  CHECK_THROWS_WITH_AS(svd_index(model({{-1, 1, 1}}), small), "svd_index needs N >= 512", Error);
}

TEST_CASE("shipped models agree") {
  auto ms = shipped_models();
  CHECK(ms.size() >= 20);
  std::set<int> seen;
  for (const auto& m : ms) {
    INFO(m.label);
    auto r = svd_index(m);
    CHECK(r.agree);
    CHECK(r.svd_index == r.analytic_index);
    seen.insert(r.svd_index);
  }
  CHECK(seen.count(-1));
  CHECK(seen.count(0));
  CHECK(seen.count(1));
}

TEST_CASE("singular values of the box scheme") {
  // constant-coefficient mode: one structural null vector and a spectrum bounded away from 0
  auto m = model({{-1, 1, 1}});
  auto g = make_two_ended_grid(kPi, 512, 1e-3);
  auto sv = mode_singular_values(m.modes[0], m, g, false);
  auto sa = mode_singular_values(m.modes[0], m, g, true);
  CHECK(sv.size() == 511);
  CHECK(std::is_sorted(sv.begin(), sv.end()));
  CHECK(sv.front() >= 0.0);
  // no singular value below the rank threshold: ker D is the one structural column, D* is injective
  const double thr = SvdOptions{}.threshold_rel;
  CHECK(sv.front() > 100 * thr * sv.back());
  CHECK(sa.front() > 10 * thr * sa.back());
}

TEST_CASE("additivity and adjoint antisymmetry") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.6, 3.0);
  auto pick = [&]() { return (rng() % 2 ? 1.0 : -1.0) * U(rng); };
  for (int t = 0; t < 10; ++t) {
    auto a = model({{pick(), pick(), 1 + int(rng() % 2)}});
    auto b = model({{pick(), pick(), 1}, {pick(), pick(), 2}});
    auto ab = a;
    ab.modes.insert(ab.modes.end(), b.modes.begin(), b.modes.end());
    CHECK(analytic_mode_index(ab) == analytic_mode_index(a) + analytic_mode_index(b));
    CHECK(svd_index(ab).svd_index == svd_index(a).svd_index + svd_index(b).svd_index);
    auto neg = ab;
    for (auto& m : neg.modes) {
      m.s0 = -m.s0;
      m.s_pi = -m.s_pi;
    }
    CHECK(analytic_mode_index(neg) == -analytic_mode_index(ab));
  }
}

TEST_CASE("jump scans") {
  ScanFamily f;
  f.base = model({{-1, 1, 1}});
  f.endpoint = ScanEndpoint::SPi;
  f.t0 = 0.4;
  f.t1 = 1.6;
  auto r = index_jump_scan(f);
  REQUIRE(r.jumps.size() == 1);
  CHECK(std::abs(r.jumps[0] - 0.5) <= 1e-3);
  REQUIRE(r.crossings.size() == 1);
  CHECK(r.crossings[0] == doctest::Approx(0.5));
  CHECK(r.coincide);
  CHECK(r.svd_disagree.empty());

  ScanFamily g;
  g.base = model({{-1, 1, 1}});
  g.endpoint = ScanEndpoint::S0;
  g.slope = -1.0;
  g.t0 = 0.4;
  g.t1 = 1.6;
  auto s = index_jump_scan(g);
  REQUIRE(s.jumps.size() == 1);
  CHECK(std::abs(s.jumps[0] - 0.5) <= 1e-3);
  CHECK(s.coincide);

  ScanFamily h = f;
  h.t0 = 0.6;
  h.t1 = 1.4;
  auto q = index_jump_scan(h);
  CHECK(q.jumps.empty());
  CHECK(q.crossings.empty());
  CHECK(q.coincide);
}

TEST_CASE("deformation traces") {
  auto base = model({{-1, 1, 1}, {1.5, -1.5, 1}, {2, 2, 1}});
  DeformFamily w;
  w.kind = DeformKind::Warp;
  w.base = base;
  auto tw = deform_index_trace(w, 8);
  CHECK(tw.constant);
  CHECK(tw.t.size() == 9);
  for (int k : tw.svd_index) CHECK(k == 0);

  DeformFamily p;
  p.kind = DeformKind::Perturbation;
  p.base = model({{-1, 1, 2}});
  p.kappa_max = 0.2;
  auto tp = deform_index_trace(p, 6);
  CHECK(tp.constant);
  for (int k : tp.svd_index) CHECK(k == 2);
  CHECK(tp.max_modulus > 0.0);

  DeformFamily d;
  d.kind = DeformKind::SpectrumDrift;
  d.base = model({{-1, 1, 1}});
  d.target = {{-2.5, 3, 1}};
  auto td = deform_index_trace(d, 6);
  CHECK(td.constant);

  DeformFamily bad = d;
  bad.target = {{1, 1, 1}};
  CHECK_THROWS_AS(deform_index_trace(bad, 6), Error);
  try {
    deform_index_trace(bad, 6);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("gap fails at t =") != std::string::npos);
  }
  DeformFamily over = p;
  over.kappa_max = 5.0;
  CHECK_THROWS_AS(deform_index_trace(over, 4), Error);
}

TEST_CASE("model_at interpolates") {
  DeformFamily d;
  d.kind = DeformKind::SpectrumDrift;
  d.base = model({{-1, 1, 1}});
  d.target = {{-3, 2, 1}};
  auto m = model_at(d, 0.5);
  CHECK(m.modes[0].s0 == doctest::Approx(-2));
  CHECK(m.modes[0].s_pi == doctest::Approx(1.5));
  DeformFamily w;
  w.kind = DeformKind::Warp;
  w.base = d.base;
  CHECK(model_at(w, 0.25).warp_blend == doctest::Approx(0.25));
}

TEST_CASE("toy index formula") {
  for (int d = -2; d <= 2; ++d) {
    auto m = flow_model(d);
    CHECK(analytic_mode_index(m) == 2 * d);
    CHECK(svd_index(m).svd_index == 2 * d);
  }
}

TEST_CASE("global parametrix check") {
  ConeOperatorSpec spec;
  spec.spectrum = LinkSpectrum({{-2.5, 1}, {-1.5, 1}, {1.5, 1}, {2.5, 1}});
  spec.perturbation.diag = {DiagonalKind::Constant, 0.2};
  BulkBlock b;
  std::mt19937_64 rng(0);
  std::normal_distribution<double> nd;
  b.block = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  b.glue = Eigen::MatrixXd(3, 4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) b.block(i, j) += 0.3 * nd(rng);
    for (int j = 0; j < 4; ++j) b.glue(i, j) = nd(rng);
  }
  spec.bulk = b;
  auto g = share(make_grid(1.0, 2048, GridScheme::LogRefined));
  auto cut = default_global_cutoffs(spec, 0.25);
  auto r = global_parametrix_check(spec, g, cut, 3, 0);
  CHECK(r.X_norm <= 0.75);
  CHECK(r.X_norm <= r.X_design_bound * (1 + 1e-6));
  CHECK(r.X_norm > 0.0);
  CHECK(r.local_right_residual <= 1e-3);
  CHECK(r.local_left_residual <= 1e-3);
  CHECK(r.right_residual <= 1e-3);
  CHECK(r.left_residual <= 1e-3);
  CHECK(r.remainder.cols() == 3);

  auto flat = spec;
  flat.perturbation = {};
  auto rf = global_parametrix_check(flat, g, cut, 3, 0);
  CHECK(rf.cutoff_commutator_gap <= 1e-12 * std::max(1.0, rf.remainder_norm));

  auto none = spec;
  none.bulk.reset();
  CHECK_THROWS_WITH_AS(global_parametrix_check(none, g, cut, 3, 0), "bulk block absent", Error);
  auto sing = spec;
  sing.bulk->block.setZero();
  CHECK_THROWS_WITH_AS(global_parametrix_check(sing, g, cut, 3, 0), "bulk block is singular", Error);
  CHECK_THROWS_AS(global_parametrix_check(spec, g, default_global_cutoffs(spec, 0.05), 3, 0), Error);
}

}
