#include "conelab/cone_op.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "conelab/error.hpp"

namespace conelab {

namespace {

// r/sin r - 1, series near 0
double csc_excess(double r) {
  if (std::abs(r) < 1e-3) {
    double r2 = r * r;
    return r2 / 6.0 + 7.0 * r2 * r2 / 360.0;
  }
  return r / std::sin(r) - 1.0;
}

}  // namespace

double DiagonalProfile::value(double, double r) const {
  switch (kind) {
    case DiagonalKind::Zero: return 0.0;
    case DiagonalKind::Constant: return amplitude;
    case DiagonalKind::Linear: return amplitude * r;
    case DiagonalKind::Suspension: return amplitude * csc_excess(r);
  }
  return 0.0;
}

double CouplingProfile::beta(double r) const {
  if (kind == CouplingKind::None) return 0.0;
  return shape == CouplingShape::Constant ? amplitude : amplitude * r;
}

double CouplingProfile::matrix_norm(int modes) const {
  if (kind == CouplingKind::None || modes < 2) return 0.0;
  return std::cos(M_PI / (modes + 1));
}

Eigen::SparseMatrix<double> CouplingProfile::matrix(int modes) const {
  Eigen::SparseMatrix<double> C(modes, modes);
  if (kind == CouplingKind::None) return C;
  std::vector<Eigen::Triplet<double>> t;
  for (int m = 0; m + 1 < modes; ++m) {
    t.emplace_back(m, m + 1, 0.5);
    t.emplace_back(m + 1, m, 0.5);
  }
  C.setFromTriplets(t.begin(), t.end());
  return C;
}

std::pair<double, double> ac6_norms_at(const ConeOperatorSpec& spec, double r) {
  double amax = 0.0;
  for (const auto& e : spec.spectrum.entries())
    amax = std::max(amax, std::abs(spec.perturbation.diag.value(e.s, r)));
  double c = 0.0;
  const auto& cp = spec.perturbation.coupling;
  if (!cp.is_zero())
    c = std::abs(cp.beta(r)) * cp.matrix_norm(spec.spectrum.total_modes()) / spec.spectrum.min_abs_eigenvalue();
  return {amax + c, amax + c};
}

ValidationReport validate_spec(const ConeOperatorSpec& spec, int samples) {
  ValidationReport rep;
  if (spec.spectrum.empty()) {
    rep.message = "empty link spectrum";
    return rep;
  }
  rep.gap_ok = check_spectral_gap(spec.spectrum).has_gap;
  if (!rep.gap_ok) {
    rep.message = "spectral gap violated";
    return rep;
  }
  rep.caps = caps_ac6(spec.spectrum);
  if (spec.perturbation.is_zero()) {
    rep.ac6_ok = rep.valid = true;
    rep.theta_prime = spec.cone_theta;
    rep.message = "zero perturbation";
    return rep;
  }
  // unit log-refined nodes scaled to the cone, so cone_theta may exceed 1
  RadialGrid g = make_grid(1.0, std::max(samples, 16), GridScheme::LogRefined);
  for (double& x : g.nodes) x *= spec.cone_theta;
  int last_ok = -1;
  bool prefix = true;
  for (int i = 0; i < g.size(); ++i) {
    auto [right, left] = ac6_norms_at(spec, g.nodes[i]);
    rep.sup_right = std::max(rep.sup_right, right);
    rep.sup_left = std::max(rep.sup_left, left);
    bool ok = right <= rep.caps.cap_right && left <= rep.caps.cap_left;
    if (prefix && ok) last_ok = i;
    else prefix = false;
  }
  rep.ac6_ok = prefix;
  rep.valid = rep.gap_ok && rep.ac6_ok;
  if (last_ok >= 0) rep.theta_prime = last_ok == g.size() - 1 ? spec.cone_theta : g.nodes[last_ok];
  if (rep.valid) rep.message = "gap and perturbation caps hold on (0, theta]";
  else if (rep.theta_prime) rep.message = "perturbation caps hold only after absorbing to theta'";
  else rep.message = "perturbation caps fail at every sampled radius";
  return rep;
}

ConeOperatorSpec absorb_cone(const ConeOperatorSpec& spec, double theta_prime) {
  if (!(theta_prime > 0.0 && theta_prime < spec.cone_theta))
    throw Error("absorb_cone: theta' must lie in (0, cone_theta)");
  ConeOperatorSpec out = spec;
  out.cone_theta = theta_prime;
  return out;
}

ConeOperator::ConeOperator(ConeOperatorSpec spec, GridPtr grid)
    : spec_(std::move(spec)), grid_(std::move(grid)) {
  if (!grid_) throw Error("ConeOperator: null grid");
  if (std::abs(grid_->theta - spec_.theta) > 1e-12 * spec_.theta)
    throw Error("grid mismatch: grid theta differs from spec theta");
  if (spec_.spectrum.empty()) throw Error("empty link spectrum");
  if (!(spec_.cone_theta > 0.0 && spec_.cone_theta <= spec_.theta))
    throw Error("ConeOperatorSpec: cone_theta must lie in (0, theta]");
  spectrum_ = std::make_shared<const LinkSpectrum>(spec_.spectrum);
  const auto& r = grid_->nodes;
  cone_last_ = int(std::upper_bound(r.begin(), r.end(), spec_.cone_theta * (1 + 1e-15)) - r.begin()) - 1;
  if (cone_last_ < 2) throw Error("ConeOperator: cone part has fewer than three grid nodes");
  mode_s_ = spec_.spectrum.mode_eigenvalues();
  mode_entry_ = spec_.spectrum.mode_entry_index();
  const int n = grid_->size();
  for (const auto& e : spec_.spectrum.entries()) {
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = e.s * spec_.perturbation.diag.value(e.s, r[i]) / r[i];
    diag_coef_.push_back(std::move(d));
  }
  beta_over_r_.resize(n);
  for (int i = 0; i < n; ++i) beta_over_r_[i] = spec_.perturbation.coupling.beta(r[i]) / r[i];
  bool gapped = check_spectral_gap(spec_.spectrum).has_gap;
  if (gapped) {
    for (const auto& e : spec_.spectrum.entries()) {
      if (e.s > 0.5) kernels_.emplace_back(KernelKind::P0, e.s, *grid_);
      else kernels_.emplace_back(KernelKind::P1, e.s, *grid_, spec_.cone_theta);
    }
  }
}

void ConeOperator::check(const ModeSection& u) const {
  if (u.nodes() != grid_->size() || (u.grid_ptr() != grid_ && u.grid().nodes != grid_->nodes))
    throw Error("grid mismatch: section not on the operator grid");
  if (u.modes() != int(mode_s_.size()) || !(u.spectrum() == spec_.spectrum))
    throw Error("spectrum mismatch: section modes differ from the spec");
}

ModeSection ConeOperator::apply_dr(const ModeSection& u) const {
  check(u);
  ModeSection out = zero();
  for (int m = 0; m < u.modes(); ++m) differentiate(*grid_, u.coeffs().row(m).data(), out.coeffs().row(m).data());
  return out;
}

ModeSection ConeOperator::apply_S0_over_r(const ModeSection& u) const {
  check(u);
  ModeSection out = zero();
  const auto& r = grid_->nodes;
  for (int m = 0; m < u.modes(); ++m)
    for (int i = 0; i < u.nodes(); ++i) out.coeffs()(m, i) = mode_s_[m] / r[i] * u.coeffs()(m, i);
  return out;
}

ModeSection ConeOperator::apply_S1_over_r(const ModeSection& u) const {
  check(u);
  ModeSection out = zero();
  const int M = u.modes(), n = u.nodes();
  const auto& c = u.coeffs();
  auto& o = out.coeffs();
  if (!spec_.perturbation.diag.is_zero())
    for (int m = 0; m < M; ++m) {
      const auto& d = diag_coef_[mode_entry_[m]];
      for (int i = 0; i < n; ++i) o(m, i) = d[i] * c(m, i);
    }
  if (!spec_.perturbation.coupling.is_zero())
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < n; ++i) {
        std::complex<double> nb = 0.0;
        if (m > 0) nb += c(m - 1, i);
        if (m + 1 < M) nb += c(m + 1, i);
        o(m, i) += 0.5 * beta_over_r_[i] * nb;
      }
  return out;
}

// real diagonal plus symmetric coupling: self-adjoint pointwise
ModeSection ConeOperator::apply_S1_over_r_adjoint(const ModeSection& u) const { return apply_S1_over_r(u); }

ModeSection ConeOperator::apply_K(const ModeSection& u) const {
  ModeSection out = apply_dr(u);
  const auto& r = grid_->nodes;
  for (int m = 0; m < u.modes(); ++m)
    for (int i = 0; i < u.nodes(); ++i) out.coeffs()(m, i) += mode_s_[m] / r[i] * u.coeffs()(m, i);
  if (!spec_.perturbation.is_zero()) out += apply_S1_over_r(u);
  return out;
}

ModeSection ConeOperator::apply_parametrix(const ModeSection& u) const {
  check(u);
  if (kernels_.empty()) throw Error("mode inside gap: parametrix needs the spectral gap");
  ModeSection out = zero();
  const int n = u.nodes();
  for (int m = 0; m < u.modes(); ++m) {
    auto* o = out.coeffs().row(m).data();
    kernels_[mode_entry_[m]].apply(u.coeffs().row(m).data(), o);
    for (int i = cone_last_ + 1; i < n; ++i) o[i] = 0.0;
  }
  return out;
}

ModeSection ConeOperator::apply_parametrix_adjoint(const ModeSection& u) const {
  check(u);
  if (kernels_.empty()) throw Error("mode inside gap: parametrix needs the spectral gap");
  ModeSection out = zero();
  const int n = u.nodes();
  const auto& w = grid_->weights;
  std::vector<std::complex<double>> y(n);
  for (int m = 0; m < u.modes(); ++m) {
    for (int i = 0; i < n; ++i) y[i] = i <= cone_last_ ? w[i] * u.coeffs()(m, i) : 0.0;
    auto* o = out.coeffs().row(m).data();
    kernels_[mode_entry_[m]].apply_transpose(y.data(), o);
    for (int i = 0; i < n; ++i) o[i] /= w[i];
  }
  return out;
}

ModeSection ConeOperator::apply_inv_r_S0_P(const ModeSection& u) const { return apply_S0_over_r(apply_parametrix(u)); }
ModeSection ConeOperator::apply_P_inv_r_S0(const ModeSection& u) const { return apply_parametrix(apply_S0_over_r(u)); }
ModeSection ConeOperator::apply_inv_r_S1_P(const ModeSection& u) const { return apply_S1_over_r(apply_parametrix(u)); }
ModeSection ConeOperator::apply_P_inv_r_S1(const ModeSection& u) const { return apply_parametrix(apply_S1_over_r(u)); }

ModeSection ConeOperator::apply_inv_r_P(const ModeSection& u) const {
  ModeSection p = apply_parametrix(u);
  std::vector<double> inv(grid_->size());
  for (int i = 0; i < grid_->size(); ++i) inv[i] = 1.0 / grid_->nodes[i];
  return p.times_radial(inv);
}

std::pair<double, double> s1_caps(const ConeOperatorSpec& spec) {
  if (spec.perturbation.is_zero()) return {0.0, 0.0};
  auto rep = validate_spec(spec);
  if (!rep.gap_ok) throw Error("mode inside gap: caps need the spectral gap");
  double sp = 0.0, sm = 0.0;
  for (const auto& e : spec.spectrum.entries()) {
    sp = std::max(sp, std::abs(e.s) / std::abs(e.s + 0.5));
    sm = std::max(sm, std::abs(e.s) / std::abs(e.s - 0.5));
  }
  return {rep.sup_right * sp, rep.sup_left * sm};
}

NeumannInfo ConeOperator::neumann_info() const {
  NeumannInfo info;
  info.q = s1_caps(spec_).first;
  if (info.q > 0.5 * (1 + 1e-12)) throw Error("perturbation too large");
  if (info.q == 0.0) return info;
  int j = 0;
  while (std::pow(info.q, j + 1) > 1e-10) ++j;
  info.j_max = j;
  return info;
}

ModeSection ConeOperator::apply_V(const ModeSection& u) const {
  auto info = neumann_info();
  ModeSection acc = u;
  ModeSection v = u;
  for (int j = 1; j <= info.j_max; ++j) {
    v = apply_inv_r_S1_P(v);
    v *= -1.0;
    acc += v;
  }
  return acc;
}

ModeSection ConeOperator::restrict_to_cone(const ModeSection& u) const {
  check(u);
  ModeSection out = u;
  for (int m = 0; m < u.modes(); ++m)
    for (int i = cone_last_ + 1; i < u.nodes(); ++i) out.coeffs()(m, i) = 0.0;
  return out;
}

double ConeOperator::cone_norm(const ModeSection& u) const { return restrict_to_cone(u).l2_norm(); }

Eigen::SparseMatrix<double> ConeOperator::collar_block(int mode) const {
  const int n = grid_->size();
  const int nc = n - 1 - cone_last_;
  Eigen::SparseMatrix<double> B(nc, n);
  std::vector<Eigen::Triplet<double>> t;
  const auto& r = grid_->nodes;
  const auto& d = diag_coef_[mode_entry_[mode]];
  for (int k = 0; k < nc; ++k) {
    int i = cone_last_ + 1 + k;
    for (int j = 0; j < kStencilWidth; ++j) t.emplace_back(k, grid_->stencil_start[i] + j, grid_->stencil[i][j]);
    t.emplace_back(k, i, mode_s_[mode] / r[i] + d[i]);
  }
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

ModeSection apply_K(const ConeOperatorSpec& spec, const ModeSection& u) {
  return ConeOperator(spec, u.grid_ptr()).apply_K(u);
}

ModeSection apply_parametrix(const ConeOperatorSpec& spec, const ModeSection& u) {
  return ConeOperator(spec, u.grid_ptr()).apply_parametrix(u);
}

double parametrix_right_identity(const ConeOperator& op, const Cutoff& psi, const ModeSection& u) {
  const int n = op.grid().size();
  if (int(psi.tau.size()) != n) throw Error("cutoff not sampled on the operator grid");
  for (int i = op.cone_nodes(); i < n; ++i)
    if (psi.tau[i] != 0.0) throw Error("right identity: cutoff must be supported in the cone part");
  if (u.l2_norm() == 0.0) return 0.0;
  ModeSection P = op.apply_parametrix(u);
  ModeSection lhs = op.apply_K(P.times_radial(psi.tau));
  ModeSection rhs = op.restrict_to_cone(u).times_radial(psi.tau);
  rhs += op.apply_S1_over_r(P).times_radial(psi.tau);
  rhs += P.times_radial(psi.dtau);
  double denom = rhs.l2_norm();
  if (denom == 0.0) denom = u.l2_norm();
  return (lhs - rhs).l2_norm() / denom;
}

static void require_cone_support(const ConeOperator& op, const ModeSection& u, const char* what) {
  for (int m = 0; m < u.modes(); ++m)
    for (int i = op.cone_nodes() - 1; i < u.nodes(); ++i)
      if (u.coeffs()(m, i) != 0.0)
        throw Error(std::string(what) + ": u must be compactly supported inside the cone part");
}

double parametrix_left_identity(const ConeOperator& op, const ModeSection& u) {
  require_cone_support(op, u, "left identity");
  double un = u.l2_norm();
  if (un == 0.0) return 0.0;
  ModeSection res = op.apply_parametrix(op.apply_K(u));
  res -= u;
  res -= op.apply_P_inv_r_S1(u);
  return op.cone_norm(res) / un;
}

double exact_inverse_residual(const ConeOperator& op, const ModeSection& u) {
  require_cone_support(op, u, "exact inverse");
  double un = u.l2_norm();
  if (un == 0.0) return 0.0;
  ModeSection res = op.apply_parametrix(op.apply_V(op.apply_K(u)));
  res -= u;
  return op.cone_norm(res) / un;
}

double commutation_check(const ConeOperator& op, int j, const ModeSection& u) {
  if (j < 1) throw Error("commutation_check: j must be >= 1");
  ModeSection lhs = op.apply_parametrix(u);
  for (int k = 0; k < j; ++k) lhs = op.apply_P_inv_r_S1(lhs);
  ModeSection rhs = u;
  for (int k = 0; k < j; ++k) rhs = op.apply_inv_r_S1_P(rhs);
  rhs = op.apply_parametrix(rhs);
  double scale = std::max(lhs.l2_norm(), rhs.l2_norm());
  if (scale == 0.0) return 0.0;
  return (lhs - rhs).l2_norm() / scale;
}

NormReport norm_report(const ConeOperator& op, const ModeSection& u) {
  NormReport rep;
  rep.u_norm = u.l2_norm();
  rep.K_norm = op.apply_K(u).l2_norm();
  rep.dr_norm = op.apply_dr(u).l2_norm();
  rep.S0_over_r_norm = op.apply_S0_over_r(u).l2_norm();
  rep.graph_norm = std::sqrt(rep.u_norm * rep.u_norm + rep.K_norm * rep.K_norm);
  rep.h1_cone_norm = std::sqrt(rep.u_norm * rep.u_norm + rep.dr_norm * rep.dr_norm +
                               rep.S0_over_r_norm * rep.S0_over_r_norm);
  if (rep.h1_cone_norm > 0.0) rep.ratio = rep.graph_norm / rep.h1_cone_norm;
  return rep;
}

double leibniz_residual(const ConeOperator& op, const std::vector<double>& phi,
                        const std::vector<double>& dphi, const ModeSection& u) {
  ModeSection lhs = op.apply_K(u.times_radial(phi));
  lhs -= op.apply_K(u).times_radial(phi);
  ModeSection rhs = u.times_radial(dphi);
  double denom = rhs.l2_norm();
  if (denom == 0.0) return lhs.l2_norm();
  return (lhs - rhs).l2_norm() / denom;
}

double power_norm(const std::function<ModeSection(const ModeSection&)>& T,
                  const std::function<ModeSection(const ModeSection&)>& Tadj, ModeSection x,
                  int max_iter, double tol) {
  // Golub-Kahan-Lanczos with full reorthogonalization; plain power iteration stalls when the
  // leading singular values cluster
  double nx = x.l2_norm();
  if (nx == 0.0) throw Error("power_norm: zero start vector");
  x *= 1.0 / nx;
  auto orth = [](ModeSection& v, const std::vector<ModeSection>& basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.inner(v) * b;
    return v.l2_norm();
  };
  std::vector<ModeSection> P, Q;
  std::vector<double> alpha, beta;
  double prev = -1.0;
  int stable = 0;
  for (int k = 0; k < max_iter; ++k) {
    P.push_back(x);
    ModeSection y = T(x);
    if (k > 0) y -= std::complex<double>(beta.back()) * Q.back();
    double a = orth(y, Q);
    alpha.push_back(a);
    const int m = int(alpha.size());
    Eigen::VectorXd dg(m), sub(std::max(m - 1, 0));
    for (int i = 0; i < m; ++i) dg[i] = alpha[i] * alpha[i] + (i > 0 ? beta[i - 1] * beta[i - 1] : 0.0);
    for (int i = 0; i + 1 < m; ++i) sub[i] = alpha[i] * beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(dg, sub, Eigen::EigenvaluesOnly);
    double sig = std::sqrt(std::max(es.eigenvalues()[m - 1], 0.0));
    if (sig == 0.0 && k == 0) return 0.0;
    stable = (prev > 0.0 && std::abs(sig - prev) <= tol * sig) ? stable + 1 : 0;
    prev = sig;
    if (stable >= 3 || a == 0.0) return sig;
    y *= 1.0 / a;
    Q.push_back(y);
    x = Tadj(y);
    x -= std::complex<double>(a) * P.back();
    double b = orth(x, P);
    if (b <= 1e-14 * sig) return sig;
    beta.push_back(b);
    x *= 1.0 / b;
  }
  throw Error("power_norm: no convergence");
}

CompositeNorms composite_norms(const ConeOperator& op, std::uint64_t seed) {
  const auto& spec = op.spec();
  if (!check_spectral_gap(spec.spectrum).has_gap) throw Error("mode inside gap: composites need the spectral gap");
  CompositeNorms cn;
  RadialGrid cone;
  const auto& g = op.grid();
  cone.theta = g.nodes[op.cone_nodes() - 1];
  cone.r_min = g.r_min;
  cone.scheme = g.scheme;
  cone.nodes.assign(g.nodes.begin(), g.nodes.begin() + op.cone_nodes());
  double sup_inv = 0.0, sup_inv2 = 0.0;
  for (const auto& e : spec.spectrum.entries()) {
    double s = e.s, as = std::abs(s);
    bool pos = s > 0.5;
    double n1 = galerkin_norm(kernel_of(s, pos ? SchurTarget::InvRP0 : SchurTarget::InvRP1), cone);
    double n2 = galerkin_norm(kernel_of(s, pos ? SchurTarget::P0InvR : SchurTarget::P1InvR), cone);
    double n3 = galerkin_norm(plain_kernel(pos ? KernelKind::P0 : KernelKind::P1, s), cone);
    cn.inv_r_S0_P = std::max(cn.inv_r_S0_P, as * n1);
    cn.cap_inv_r_S0_P = std::max(cn.cap_inv_r_S0_P, as / std::abs(s + 0.5));
    cn.P_inv_r_S0 = std::max(cn.P_inv_r_S0, as * n2);
    cn.cap_P_inv_r_S0 = std::max(cn.cap_P_inv_r_S0, as / std::abs(s - 0.5));
    cn.inv_r_P = std::max(cn.inv_r_P, n1);
    cn.P = std::max(cn.P, n3);
    sup_inv = std::max(sup_inv, 1.0 / std::abs(s + 0.5));
    sup_inv2 = std::max(sup_inv2, 1.0 / ((s + 0.5) * (s + 0.5)));
  }
  cn.cap_inv_r_P = sup_inv;
  cn.P_bound_exp1 = cone.theta * sup_inv;
  cn.P_bound_exp2 = sup_inv2;
  auto caps = s1_caps(spec);
  cn.cap_inv_r_S1_P = caps.first;
  cn.cap_P_inv_r_S1 = caps.second;
  if (!spec.perturbation.is_zero()) {
    double lo = g.nodes[0], hi = cone.theta;
    ModeSection start = random_smooth_section(op.grid_ptr(), op.spectrum_ptr(), lo + 0.05 * (hi - lo), 0.95 * hi, seed);
    cn.inv_r_S1_P = power_norm([&](const ModeSection& x) { return op.apply_inv_r_S1_P(x); },
                               [&](const ModeSection& y) { return op.apply_parametrix_adjoint(op.apply_S1_over_r_adjoint(y)); },
                               start);
    cn.P_inv_r_S1 = power_norm([&](const ModeSection& x) { return op.apply_P_inv_r_S1(op.restrict_to_cone(x)); },
                               [&](const ModeSection& y) { return op.restrict_to_cone(op.apply_S1_over_r_adjoint(op.apply_parametrix_adjoint(y))); },
                               start);
  }
  return cn;
}

}  // namespace conelab
