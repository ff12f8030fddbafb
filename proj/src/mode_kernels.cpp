#include "conelab/mode_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "conelab/error.hpp"

namespace conelab {

namespace {

// int_q^1 t^p dt with L = -ln q
double unit_power_integral(double p, double L) {
  double e = p + 1.0;
  if (e == 0.0) return L;
  return -std::expm1(-e * L) / e;
}

// Weights of w(a), w(b) in int_a^b (y/b)^s w(y) dy / b for linear w on [a, b].
struct LocalWeights {
  double ja, jb;
};

LocalWeights local_weights(double s, double a, double b) {
  double L = std::log(b / a);
  double q = a / b;
  double omq = -std::expm1(-L);
  double i0 = unit_power_integral(s, L);
  double i1 = unit_power_integral(s + 1.0, L);
  return {(i0 - i1) / omq, (i1 - q * i0) / omq};
}

}  // namespace

KernelOperator::KernelOperator(KernelKind kind, double s, const RadialGrid& grid, double upper)
    : kind_(kind), s_(s), grid_(&grid), upper_(upper) {
  if (kind == KernelKind::P0 && !(s > -0.5))
    throw Error("kernel parameter outside admissible range: P0 requires s > -1/2");
  if (kind == KernelKind::P1 && !(s < 0.5))
    throw Error("kernel parameter outside admissible range: P1 requires s < 1/2");
  const auto& r = grid.nodes;
  const int n = grid.size();
  if (n < 3) throw Error("KernelOperator: grid too small");
  c_.assign(n, 0.0);
  a_.assign(n, 0.0);
  b_.assign(n, 0.0);
  if (kind == KernelKind::P0) {
    upper_ = r.back();
    last_ = n - 1;
    b_[0] = r[0] / (s + 1.0);
    for (int i = 1; i < n; ++i) {
      auto lw = local_weights(s, r[i - 1], r[i]);
      c_[i] = std::pow(r[i - 1] / r[i], s);
      a_[i] = r[i] * lw.ja;
      b_[i] = r[i] * lw.jb;
    }
    return;
  }
  if (upper_ <= 0.0) upper_ = r.back();
  if (upper_ > r.back() * (1 + 1e-14)) throw Error("KernelOperator: upper endpoint beyond grid");
  if (upper_ < r.front()) throw Error("KernelOperator: upper endpoint below first node");
  last_ = int(std::upper_bound(r.begin(), r.end(), upper_) - r.begin()) - 1;
  last_ = std::clamp(last_, 0, n - 1);
  const int K = last_;
  if (upper_ > r[K] && K + 1 < n) {
    auto lw = local_weights(s, r[K], upper_);
    double grow = std::pow(upper_ / r[K], s);
    double lam = (upper_ - r[K]) / (r[K + 1] - r[K]);
    a_[K] = -grow * upper_ * (lw.ja + (1.0 - lam) * lw.jb);
    b_[K] = -grow * upper_ * lam * lw.jb;
  }
  for (int i = K - 1; i >= 0; --i) {
    auto lw = local_weights(s, r[i], r[i + 1]);
    c_[i] = std::pow(r[i + 1] / r[i], s);
    a_[i] = -c_[i] * r[i + 1] * lw.ja;
    b_[i] = -c_[i] * r[i + 1] * lw.jb;
  }
}

template <class T>
void KernelOperator::apply(const T* in, T* out) const {
  const int n = grid_->size();
  if (kind_ == KernelKind::P0) {
    out[0] = b_[0] * in[0];
    for (int i = 1; i < n; ++i) out[i] = c_[i] * out[i - 1] + a_[i] * in[i - 1] + b_[i] * in[i];
    return;
  }
  const int K = last_;
  for (int i = K + 1; i < n; ++i) out[i] = T(0);
  out[K] = a_[K] * in[K] + (K + 1 < n ? b_[K] * in[K + 1] : T(0));
  for (int i = K - 1; i >= 0; --i) out[i] = c_[i] * out[i + 1] + a_[i] * in[i] + b_[i] * in[i + 1];
}

template <class T>
void KernelOperator::apply_transpose(const T* in, T* out) const {
  const int n = grid_->size();
  std::vector<T> z(n, T(0));
  if (kind_ == KernelKind::P0) {
    z[n - 1] = in[n - 1];
    for (int i = n - 2; i >= 0; --i) z[i] = in[i] + c_[i + 1] * z[i + 1];
    for (int j = 0; j < n; ++j) out[j] = b_[j] * z[j] + (j + 1 < n ? a_[j + 1] * z[j + 1] : T(0));
    return;
  }
  const int K = last_;
  z[0] = in[0];
  for (int i = 1; i <= K; ++i) z[i] = in[i] + c_[i - 1] * z[i - 1];
  for (int j = 0; j < n; ++j) out[j] = T(0);
  for (int j = 0; j <= K; ++j) out[j] = a_[j] * z[j] + (j > 0 ? b_[j - 1] * z[j - 1] : T(0));
  if (K + 1 < n) out[K + 1] = b_[K] * z[K];
}

template void KernelOperator::apply<double>(const double*, double*) const;
template void KernelOperator::apply<std::complex<double>>(const std::complex<double>*,
                                                          std::complex<double>*) const;
template void KernelOperator::apply_transpose<double>(const double*, double*) const;
template void KernelOperator::apply_transpose<std::complex<double>>(const std::complex<double>*,
                                                                    std::complex<double>*) const;

std::vector<double> KernelOperator::apply(const std::vector<double>& w) const {
  if (int(w.size()) != grid_->size()) throw Error("apply_P: omega not sampled on the grid");
  std::vector<double> out(w.size());
  apply(w.data(), out.data());
  return out;
}

std::vector<double> KernelOperator::apply_transpose(const std::vector<double>& w) const {
  if (int(w.size()) != grid_->size()) throw Error("apply_P: omega not sampled on the grid");
  std::vector<double> out(w.size());
  apply_transpose(w.data(), out.data());
  return out;
}

std::vector<double> apply_P(const KernelOperator& op, const std::vector<double>& omega) {
  return op.apply(omega);
}

Eigen::MatrixXd dense_matrix(const KernelOperator& op) {
  const auto& r = op.grid().nodes;
  const int n = op.grid().size();
  const double s = op.s();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  std::vector<LocalWeights> lw(n);
  if (op.kind() == KernelKind::P0) {
    for (int k = 1; k < n; ++k) lw[k] = local_weights(s, r[k - 1], r[k]);
    for (int i = 0; i < n; ++i) {
      M(i, 0) += std::exp(s * std::log(r[0] / r[i])) * r[0] / (s + 1.0);
      for (int k = 1; k <= i; ++k) {
        double f = std::exp(s * std::log(r[k] / r[i])) * r[k];
        M(i, k - 1) += f * lw[k].ja;
        M(i, k) += f * lw[k].jb;
      }
    }
    return M;
  }
  const int K = op.last_node();
  const double U = op.upper();
  for (int k = 0; k < K; ++k) lw[k] = local_weights(s, r[k], r[k + 1]);
  const bool partial = U > r[K] && K + 1 < n;
  LocalWeights tail{};
  double lam = 0.0;
  if (partial) {
    tail = local_weights(s, r[K], U);
    lam = (U - r[K]) / (r[K + 1] - r[K]);
  }
  for (int i = 0; i <= K; ++i) {
    for (int k = i; k < K; ++k) {
      double f = std::exp(s * std::log(r[k + 1] / r[i])) * r[k + 1];
      M(i, k) -= f * lw[k].ja;
      M(i, k + 1) -= f * lw[k].jb;
    }
    if (partial) {
      double f = std::exp(s * std::log(U / r[i])) * U;
      M(i, K) -= f * (tail.ja + (1.0 - lam) * tail.jb);
      M(i, K + 1) -= f * lam * tail.jb;
    }
  }
  return M;
}

static double weighted_norm(const RadialGrid& g, const std::vector<double>& f) { return g.l2_norm(f); }

double ode_residual(const KernelOperator& op, const std::vector<double>& omega) {
  const auto& g = op.grid();
  if (int(omega.size()) != g.size()) throw Error("ode_residual: omega not sampled on the grid");
  double wn = weighted_norm(g, omega);
  if (wn == 0.0) throw Error("empty input");
  auto P = op.apply(omega);
  auto dP = derivative(g, P);
  std::vector<double> res(g.size());
  for (int i = 0; i < g.size(); ++i) res[i] = dP[i] + op.s() / g.nodes[i] * P[i] - omega[i];
  return weighted_norm(g, res) / wn;
}

double inverse_residual(const KernelOperator& op, const std::vector<double>& nu) {
  const auto& g = op.grid();
  if (int(nu.size()) != g.size()) throw Error("inverse_residual: nu not sampled on the grid");
  if ((op.kind() == KernelKind::P0 && !(op.s() > 0.5)) || (op.kind() == KernelKind::P1 && !(op.s() < -0.5)))
    throw Error("left-inverse range violated");
  double nn = weighted_norm(g, nu);
  if (nn == 0.0) return 0.0;
  auto dnu = derivative(g, nu);
  std::vector<double> y(g.size());
  for (int i = 0; i < g.size(); ++i) y[i] = dnu[i] + op.s() / g.nodes[i] * nu[i];
  auto P = op.apply(y);
  for (int i = 0; i < g.size(); ++i) P[i] -= nu[i];
  return weighted_norm(g, P) / nn;
}

std::string to_string(SchurTarget t) {
  switch (t) {
    case SchurTarget::InvRP0: return "inv_r_P0";
    case SchurTarget::P0InvR: return "P0_inv_r";
    case SchurTarget::InvRP1: return "inv_r_P1";
    case SchurTarget::P1InvR: return "P1_inv_r";
  }
  return "unknown";
}

SchurTarget schur_target_from_string(const std::string& name) {
  if (name == "inv_r_P0") return SchurTarget::InvRP0;
  if (name == "P0_inv_r") return SchurTarget::P0InvR;
  if (name == "inv_r_P1") return SchurTarget::InvRP1;
  if (name == "P1_inv_r") return SchurTarget::P1InvR;
  throw Error("unknown Schur target: " + name);
}

bool schur_admissible(double s, SchurTarget t) {
  switch (t) {
    case SchurTarget::InvRP0: return s > -0.5;
    case SchurTarget::P0InvR: return s > 0.5;
    case SchurTarget::InvRP1: return s < -0.5;
    case SchurTarget::P1InvR: return s < 0.5;
  }
  return false;
}

double schur_bound(double s, SchurTarget t) {
  if (!schur_admissible(s, t)) throw Error("schur: s outside the validity range of " + to_string(t));
  if (t == SchurTarget::InvRP0 || t == SchurTarget::InvRP1) return 1.0 / std::abs(s + 0.5);
  return 1.0 / std::abs(s - 0.5);
}

PowerKernel kernel_of(double s, SchurTarget t) {
  switch (t) {
    case SchurTarget::InvRP0: return {-s - 1.0, s, true};
    case SchurTarget::P0InvR: return {-s, s - 1.0, true};
    case SchurTarget::InvRP1: return {-s - 1.0, s, false};
    case SchurTarget::P1InvR: return {-s, s - 1.0, false};
  }
  return {};
}

PowerKernel plain_kernel(KernelKind kind, double s) { return {-s, s, kind == KernelKind::P0}; }

namespace {

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
};

// Golub-Welsch
const GaussRule& gauss16() {
  static const GaussRule rule = [] {
    const int n = 16;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      double b = k / std::sqrt(4.0 * k * k - 1.0);
      J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule g;
    for (int k = 0; k < n; ++k) {
      g.x.push_back(es.eigenvalues()(k));
      double v = es.eigenvectors()(0, k);
      g.w.push_back(2.0 * v * v);
    }
    return g;
  }();
  return rule;
}

template <class F>
double gauss_panel(const F& f, double a, double b) {
  const auto& g = gauss16();
  double mid = 0.5 * (a + b), half = 0.5 * (b - a), acc = 0.0;
  for (std::size_t k = 0; k < g.x.size(); ++k) acc += g.w[k] * f(mid + half * g.x[k]);
  return acc * half;
}

// int over t in [lo, hi] of f(t), panels of width <= 1
template <class F>
double integrate_finite(const F& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  int panels = std::max(1, int(std::ceil(hi - lo)));
  double h = (hi - lo) / panels, acc = 0.0;
  for (int p = 0; p < panels; ++p) acc += gauss_panel(f, lo + p * h, lo + (p + 1) * h);
  return acc;
}

// int over t in (-inf, hi] of f(t), f decaying as t -> -inf
template <class F>
double integrate_to_minus_inf(const F& f, double hi) {
  double acc = 0.0;
  for (int p = 0; p < 20000; ++p) {
    double c = gauss_panel(f, hi - p - 1.0, hi - p);
    acc += c;
    if (std::abs(c) <= 1e-17 * std::abs(acc)) return acc;
  }
  throw Error("schur_certificate: log-coordinate quadrature did not converge");
}

}  // namespace

SchurCertificate schur_certificate(double s, SchurTarget target) {
  SchurCertificate cert;
  cert.s = s;
  cert.target = target;
  cert.bound = schur_bound(s, target);
  const PowerKernel k = kernel_of(s, target);
  std::vector<double> samples;
  for (int i = 0; i < 48; ++i) samples.push_back(std::pow(10.0, -12.0 + 12.0 * i / 48.0));
  for (double v : {0.5, 0.9, 0.99, 0.999999}) samples.push_back(v);
  double row_max = 0.0, col_max = 0.0;
  for (double x : samples) {
    const double lx = std::log(x);
    // row: sqrt(r) * int k(r,y) y^{-1/2} dy, log coordinate t = ln y
    auto row_f = [&](double t) { return std::exp(k.alpha * lx + (k.beta + 0.5) * t); };
    double row = k.lower ? integrate_to_minus_inf(row_f, lx) : integrate_finite(row_f, lx, 0.0);
    row_max = std::max(row_max, row * std::sqrt(x));
    // column: sqrt(y) * int k(r,y) r^{-1/2} dr, t = ln r
    auto col_f = [&](double t) { return std::exp((k.alpha + 0.5) * t + k.beta * lx); };
    double col = k.lower ? integrate_finite(col_f, lx, 0.0) : integrate_to_minus_inf(col_f, lx);
    col_max = std::max(col_max, col * std::sqrt(x));
  }
  cert.row_check_max = row_max;
  cert.col_check_max = col_max;
  cert.passed = row_max <= cert.bound * (1 + 1e-9) && col_max <= cert.bound * (1 + 1e-9);
  return cert;
}

namespace {

bool near_minus_one(double p) { return std::abs(p + 1.0) < 1e-12; }

// int_a^b x^p dx, a >= 0
double power_integral(double p, double a, double b) {
  if (a == 0.0) {
    if (!(p > -1.0)) throw Error("galerkin: non-integrable kernel at r = 0");
    return std::pow(b, p + 1.0) / (p + 1.0);
  }
  if (near_minus_one(p)) return std::log(b / a);
  double e = p + 1.0;
  return std::pow(b, e) * (-std::expm1(e * std::log(a / b))) / e;
}

// int_a^b r^al int_a^r y^be dy dr
double diag_lower(double al, double be, double a, double b) {
  if (near_minus_one(be)) {
    if (a == 0.0) throw Error("galerkin: non-integrable kernel at r = 0");
    if (near_minus_one(al)) return 0.5 * std::pow(std::log(b / a), 2);
    double e = al + 1.0, L = std::log(b / a);
    return std::pow(b, e) * (L / e - 1.0 / (e * e)) + std::pow(a, e) / (e * e);
  }
  double inner_lo = a == 0.0 ? 0.0 : std::pow(a, be + 1.0);
  double t2 = a == 0.0 ? 0.0 : inner_lo * power_integral(al, a, b);
  return (power_integral(al + be + 1.0, a, b) - t2) / (be + 1.0);
}

// int_a^b r^al int_r^b y^be dy dr
double diag_upper(double al, double be, double a, double b) {
  if (near_minus_one(be)) {
    if (near_minus_one(al)) {
      if (a == 0.0) throw Error("galerkin: non-integrable kernel at r = 0");
      return 0.5 * std::pow(std::log(b / a), 2);
    }
    double e = al + 1.0;
    double ga = a == 0.0 ? 0.0 : std::pow(a, e) * (std::log(b / a) / e + 1.0 / (e * e));
    return std::pow(b, e) / (e * e) - ga;
  }
  return (std::pow(b, be + 1.0) * power_integral(al, a, b) - power_integral(al + be + 1.0, a, b)) /
         (be + 1.0);
}

// cell factors scaled by the right cell end b_i so large |s| does not overflow:
// int_cell r^al = u_i b_i^(al+1), int_cell y^be = v_i b_i^(be+1), diagonal block d_i b_i^(al+be+2)
struct GalerkinFactors {
  std::vector<double> u, v, d, h, logb;
};

GalerkinFactors galerkin_factors(const PowerKernel& k, const RadialGrid& grid) {
  const int n = grid.size();
  GalerkinFactors f;
  f.u.resize(n);
  f.v.resize(n);
  f.d.resize(n);
  f.h.resize(n);
  f.logb.resize(n);
  for (int i = 0; i < n; ++i) {
    double a = i == 0 ? 0.0 : grid.nodes[i - 1], b = grid.nodes[i];
    double t = a / b;
    f.h[i] = b - a;
    f.logb[i] = std::log(b);
    // unused boundary factors may diverge
    bool need_u = k.lower ? i > 0 : i < n - 1;
    bool need_v = k.lower ? i < n - 1 : i > 0;
    f.u[i] = need_u ? power_integral(k.alpha, t, 1.0) : 0.0;
    f.v[i] = need_v ? power_integral(k.beta, t, 1.0) : 0.0;
    double d = k.lower ? diag_lower(k.alpha, k.beta, t, 1.0) : diag_upper(k.alpha, k.beta, t, 1.0);
    f.d[i] = d * std::exp((k.alpha + k.beta + 2.0) * f.logb[i]);
  }
  return f;
}

// y_i = x_i d_i + p_i sum_{j before i} q_j x_j, with p, q carrying the exponents ep, eq;
// the running sum is kept relative to the last added cell
void sweep(const GalerkinFactors& f, const std::vector<double>& p, double ep, const std::vector<double>& q,
           double eq, bool forward, const std::vector<double>& x, std::vector<double>& y) {
  const int n = int(x.size());
  double acc = 0.0, lref = 0.0;
  bool any = false;
  for (int s = 0; s < n; ++s) {
    int i = forward ? s : n - 1 - s;
    double off = any ? p[i] * acc * std::exp(ep * f.logb[i] + eq * lref) : 0.0;
    y[i] = off + f.d[i] * x[i];
    if (any) acc *= std::exp(eq * (lref - f.logb[i]));
    acc += q[i] * x[i];
    lref = f.logb[i];
    any = true;
  }
}

}  // namespace

Eigen::MatrixXd galerkin_matrix(const PowerKernel& k, const RadialGrid& grid) {
  auto f = galerkin_factors(k, grid);
  const int n = grid.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double e = 0.0;
      if (i == j) e = f.d[i];
      else if ((k.lower && j < i) || (!k.lower && j > i))
        e = f.u[i] * f.v[j] * std::exp((k.alpha + 1.0) * f.logb[i] + (k.beta + 1.0) * f.logb[j]);
      G(i, j) = e / std::sqrt(f.h[i] * f.h[j]);
    }
  }
  return G;
}

double galerkin_norm(const PowerKernel& k, const RadialGrid& grid, int max_iter, double tol) {
  auto f = galerkin_factors(k, grid);
  const int n = grid.size();
  std::vector<double> sh(n);
  for (int i = 0; i < n; ++i) sh[i] = std::sqrt(f.h[i]);
  const double ea = k.alpha + 1.0, eb = k.beta + 1.0;
  std::vector<double> tmp(n);
  auto mul = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int j = 0; j < n; ++j) tmp[j] = x[j] / sh[j];
    sweep(f, f.u, ea, f.v, eb, k.lower, tmp, y);
    for (int i = 0; i < n; ++i) y[i] /= sh[i];
  };
  auto mul_t = [&](const std::vector<double>& y, std::vector<double>& x) {
    for (int i = 0; i < n; ++i) tmp[i] = y[i] / sh[i];
    sweep(f, f.v, eb, f.u, ea, !k.lower, tmp, x);
    for (int j = 0; j < n; ++j) x[j] /= sh[j];
  };
  // Golub-Kahan-Lanczos with full reorthogonalization. For large |s| the leading singular values
  // cluster to ~1e-6 relative and convergence may need close to N steps
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  auto orth = [&](std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) {
        double c = dot(v, b);
        for (int i = 0; i < n; ++i) v[i] -= c * b[i];
      }
    return std::sqrt(dot(v, v));
  };
  const int steps = std::min(n, max_iter);
  std::vector<std::vector<double>> P, Q;
  std::vector<double> alpha, beta;
  std::vector<double> p(n), q(n);
  for (auto& e : p) e = gauss(rng);
  double nrm = std::sqrt(dot(p, p));
  for (auto& e : p) e /= nrm;
  double prev = -1.0;
  int stable = 0;
  for (int k = 0; k < steps; ++k) {
    P.push_back(p);
    mul(p, q);
    if (k > 0)
      for (int i = 0; i < n; ++i) q[i] -= beta.back() * Q.back()[i];
    double a = orth(q, Q);
    alpha.push_back(a);
    if (a > 0.0)
      for (auto& e : q) e /= a;
    Q.push_back(q);
    // top eigenvalue of B^T B, B upper bidiagonal (alpha; beta)
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
    if (stable >= 3) return sig;
    mul_t(q, p);
    for (int i = 0; i < n; ++i) p[i] -= a * P.back()[i];
    double b = orth(p, P);
    if (b <= 1e-14 * sig || k + 1 == n) return sig;  // invariant subspace: Ritz values exact
    beta.push_back(b);
    for (auto& e : p) e /= b;
  }
  throw Error("operator_norm: Lanczos bidiagonalization did not converge after " + std::to_string(steps) +
              " steps");
}

double operator_norm(double s, SchurTarget target, const RadialGrid& grid) {
  if (!schur_admissible(s, target))
    throw Error("operator_norm: s outside the validity range of " + to_string(target));
  return galerkin_norm(kernel_of(s, target), grid);
}

}  // namespace conelab
