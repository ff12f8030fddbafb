#include "conelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "conelab/error.hpp"

namespace conelab {

std::string to_string(WarpKind k) {
  switch (k) {
    case WarpKind::Sin: return "sin";
    case WarpKind::Linear: return "linear";
    case WarpKind::Constant: return "constant";
    case WarpKind::Custom: return "custom";
  }
  return "?";
}

WarpKind warp_kind_from_string(const std::string& name) {
  if (name == "sin") return WarpKind::Sin;
  if (name == "linear") return WarpKind::Linear;
  if (name == "constant") return WarpKind::Constant;
  if (name == "custom") return WarpKind::Custom;
  throw Error("unknown warp '" + name + "' (sin, linear, constant, custom)");
}

WarpFunction WarpFunction::custom(std::vector<double> r, std::vector<double> values) {
  if (r.size() != values.size() || r.size() < 6) throw Error("custom warp needs >= 6 matching samples");
  const double h = (r.back() - r.front()) / double(r.size() - 1);
  if (!(h > 0.0)) throw Error("custom warp abscissae must increase");
  for (std::size_t i = 0; i < r.size(); ++i)
    if (std::abs(r[i] - (r.front() + h * double(i))) > 1e-9 * std::max(1.0, std::abs(r.back())))
      throw Error("custom warp abscissae must be uniform");
  return {WarpKind::Custom, std::move(r), std::move(values)};
}

std::vector<double> uniform_d1(const std::vector<double>& f, double h) {
  const int n = int(f.size());
  if (n < 5) throw Error("uniform_d1 needs >= 5 samples");
  std::vector<double> d(n);
  const double k = 1.0 / (12.0 * h);
  for (int i = 2; i < n - 2; ++i) d[i] = (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) * k;
  d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) * k;
  d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) * k;
  d[n - 1] = -(-25 * f[n - 1] + 48 * f[n - 2] - 36 * f[n - 3] + 16 * f[n - 4] - 3 * f[n - 5]) * k;
  d[n - 2] = -(-3 * f[n - 1] - 10 * f[n - 2] + 18 * f[n - 3] - 6 * f[n - 4] + f[n - 5]) * k;
  return d;
}

std::vector<double> uniform_d2(const std::vector<double>& f, double h) {
  const int n = int(f.size());
  if (n < 6) throw Error("uniform_d2 needs >= 6 samples");
  std::vector<double> d(n);
  const double k = 1.0 / (12.0 * h * h);
  for (int i = 2; i < n - 2; ++i)
    d[i] = (-f[i + 2] + 16 * f[i + 1] - 30 * f[i] + 16 * f[i - 1] - f[i - 2]) * k;
  auto left = [&](auto at, int i) {
    if (i == 0) return (45 * at(0) - 154 * at(1) + 214 * at(2) - 156 * at(3) + 61 * at(4) - 10 * at(5)) * k;
    return (10 * at(0) - 15 * at(1) - 4 * at(2) + 14 * at(3) - 6 * at(4) + at(5)) * k;
  };
  d[0] = left([&](int j) { return f[j]; }, 0);
  d[1] = left([&](int j) { return f[j]; }, 1);
  d[n - 1] = left([&](int j) { return f[n - 1 - j]; }, 0);
  d[n - 2] = left([&](int j) { return f[n - 1 - j]; }, 1);
  return d;
}

WarpSamples sample_warp(const WarpFunction& w, const std::vector<double>& r) {
  WarpSamples s;
  if (w.kind == WarpKind::Custom) {
    s.r = w.r;
    s.rho = w.values;
    const double h = (w.r.back() - w.r.front()) / double(w.r.size() - 1);
    s.d1 = uniform_d1(w.values, h);
    s.d2 = uniform_d2(w.values, h);
    return s;
  }
  s.r = r;
  for (double x : r) {
    switch (w.kind) {
      case WarpKind::Sin:
        s.rho.push_back(std::sin(x));
        s.d1.push_back(std::cos(x));
        s.d2.push_back(-std::sin(x));
        break;
      case WarpKind::Linear:
        s.rho.push_back(x);
        s.d1.push_back(1.0);
        s.d2.push_back(0.0);
        break;
      default:
        s.rho.push_back(1.0);
        s.d1.push_back(0.0);
        s.d2.push_back(0.0);
        break;
    }
  }
  return s;
}

namespace {

double suspension_formula(int n, double scal_g, double rho, double d1, double d2) {
  return scal_g / (rho * rho) - n * ((n - 1) * d1 * d1 + 2.0 * rho * d2) / (rho * rho);
}

double richardson(double f1, double f2, double f4) { return (f1 - 6.0 * f2 + 8.0 * f4) / 3.0; }

}  // namespace

CurvatureProfile suspension_scal(int n, double scal_g, const WarpFunction& rho,
                                 const std::vector<double>& r) {
  if (n < 1) throw Error("link dimension n must be >= 1");
  WarpSamples ws = sample_warp(rho, r);
  CurvatureProfile p;
  p.r = ws.r;
  for (std::size_t i = 0; i < ws.r.size(); ++i) {
    if (!(std::abs(ws.rho[i]) > 1e-300) || !std::isfinite(ws.rho[i])) {
      std::ostringstream os;
      os << "warp function vanishes at r = " << ws.r[i];
      throw Error(os.str());
    }
    double sc = suspension_formula(n, scal_g, ws.rho[i], ws.d1[i], ws.d2[i]);
    p.scal.push_back(sc);
    p.r2_scal.push_back(ws.r[i] * ws.r[i] * sc);
  }
  if (rho.kind != WarpKind::Custom) {
    const double r0 = 0.01;
    for (double x : {r0, r0 / 2, r0 / 4}) {
      WarpSamples one = sample_warp(rho, {x});
      p.richardson_samples.push_back(x * x * suspension_formula(n, scal_g, one.rho[0], one.d1[0], one.d2[0]));
    }
    p.limit_estimate = richardson(p.richardson_samples[0], p.richardson_samples[1], p.richardson_samples[2]);
  }
  return p;
}

std::string to_string(LambdaKind k) {
  switch (k) {
    case LambdaKind::One: return "one";
    case LambdaKind::Quadratic: return "quadratic";
    case LambdaKind::Power: return "power";
    case LambdaKind::SinLog: return "sinlog";
    case LambdaKind::RLog: return "rlog";
  }
  return "?";
}

LambdaKind lambda_kind_from_string(const std::string& name) {
  if (name == "one") return LambdaKind::One;
  if (name == "quadratic") return LambdaKind::Quadratic;
  if (name == "power") return LambdaKind::Power;
  if (name == "sinlog") return LambdaKind::SinLog;
  if (name == "rlog") return LambdaKind::RLog;
  throw Error("unknown lambda kind '" + name + "' (one, quadratic, power, sinlog, rlog)");
}

double LambdaFunction::value(double r) const {
  switch (kind) {
    case LambdaKind::One: return 1.0;
    case LambdaKind::Quadratic: return 1.0 + a * r * r;
    case LambdaKind::Power: return 1.0 + a * std::pow(r, p);
    case LambdaKind::SinLog: return 1.0 + a * std::sin(std::log(r));
    case LambdaKind::RLog: return 1.0 - a * r * std::log(r);
  }
  return 1.0;
}

double LambdaFunction::d1(double r) const {
  switch (kind) {
    case LambdaKind::One: return 0.0;
    case LambdaKind::Quadratic: return 2.0 * a * r;
    case LambdaKind::Power: return a * p * std::pow(r, p - 1.0);
    case LambdaKind::SinLog: return a * std::cos(std::log(r)) / r;
    case LambdaKind::RLog: return -a * (std::log(r) + 1.0);
  }
  return 0.0;
}

double LambdaFunction::d2(double r) const {
  switch (kind) {
    case LambdaKind::One: return 0.0;
    case LambdaKind::Quadratic: return 2.0 * a;
    case LambdaKind::Power: return a * p * (p - 1.0) * std::pow(r, p - 2.0);
    case LambdaKind::SinLog: return -a * (std::sin(std::log(r)) + std::cos(std::log(r))) / (r * r);
    case LambdaKind::RLog: return -a / r;
  }
  return 0.0;
}

namespace {

std::vector<LambdaFunction> lambdas_of(const WarpedMetricFamily& fam) {
  if (fam.n < 1) throw Error("link dimension n must be >= 1");
  if (fam.lambdas.empty()) return std::vector<LambdaFunction>(fam.n);
  if (int(fam.lambdas.size()) != fam.n) throw Error("family needs exactly n lambda functions");
  return fam.lambdas;
}

bool isotropic(const std::vector<LambdaFunction>& l) {
  for (const auto& x : l)
    if (x.kind != l[0].kind || x.a != l[0].a || x.p != l[0].p) return false;
  return true;
}

}  // namespace

AdmissibilityReport cone_admissibility(const WarpedMetricFamily& fam, double tol) {
  auto ls = lambdas_of(fam);
  AdmissibilityReport rep;
  rep.tol = tol;
  // log-spaced probe radii in [1e-10, 1e-6]
  for (int k = 0; k < 64; ++k) {
    double r = std::exp(std::log(1e-10) + (std::log(1e-6) - std::log(1e-10)) * k / 63.0);
    for (const auto& l : ls) {
      rep.max_r_d1 = std::max(rep.max_r_d1, std::abs(r * l.d1(r) / l.value(r)));
      rep.max_r2_d2 = std::max(rep.max_r2_d2, std::abs(r * r * l.d2(r) / l.value(r)));
    }
  }
  rep.ok = rep.max_r_d1 <= tol && rep.max_r2_d2 <= tol;
  return rep;
}

double generalized_cone_scal_at(const WarpedMetricFamily& fam, double r) {
  auto ls = lambdas_of(fam);
  const int n = fam.n;
  if (!(r > 0.0)) throw Error("radius must be positive");
  if (fam.scal_link != 0.0 && !isotropic(ls))
    throw Error("anisotropic family requires a flat link (scal_link = 0)");
  // f_i = r sqrt(lambda_i); metric dr^2 + sum f_i^2 e_i^2
  std::vector<double> q1(n), q2(n);  // f'/f and f''/f
  for (int i = 0; i < n; ++i) {
    double l = ls[i].value(r), l1 = ls[i].d1(r), l2 = ls[i].d2(r);
    if (!(l > 0.0)) throw Error("lambda must stay positive");
    // log f = log r + log(lambda)/2
    double g1 = 1.0 / r + 0.5 * l1 / l;
    double g2 = -1.0 / (r * r) + 0.5 * (l2 / l - (l1 / l) * (l1 / l));
    q1[i] = g1;
    q2[i] = g2 + g1 * g1;
  }
  double sum1 = 0.0, sum1sq = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    sum1 += q1[i];
    sum1sq += q1[i] * q1[i];
    sum2 += q2[i];
  }
  double scal = -2.0 * sum2 - (sum1 * sum1 - sum1sq);
  if (fam.scal_link != 0.0) scal += fam.scal_link / (ls[0].value(r) * r * r);
  return scal;
}

CurvatureProfile generalized_cone_scal(const WarpedMetricFamily& fam, const std::vector<double>& r,
                                       double r0) {
  auto adm = cone_admissibility(fam);
  if (!adm.ok) {
    std::ostringstream os;
    os << "generalized-cone admissibility violated: max|r lambda'| = " << adm.max_r_d1
       << ", max|r^2 lambda''| = " << adm.max_r2_d2 << " near r = 0";
    throw Error(os.str());
  }
  CurvatureProfile p;
  p.r = r;
  for (double x : r) {
    double sc = generalized_cone_scal_at(fam, x);
    p.scal.push_back(sc);
    p.r2_scal.push_back(x * x * sc);
  }
  for (double x : {r0, r0 / 2, r0 / 4}) p.richardson_samples.push_back(x * x * generalized_cone_scal_at(fam, x));
  p.limit_estimate = richardson(p.richardson_samples[0], p.richardson_samples[1], p.richardson_samples[2]);
  return p;
}

namespace {

// 4th-order central difference of a vector-valued function
std::vector<double> central_d1(const std::function<std::vector<double>(double)>& f, double r, double h) {
  auto a = f(r - 2 * h), b = f(r - h), c = f(r + h), d = f(r + 2 * h);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - 8 * b[i] + 8 * c[i] - d[i]) / (12 * h);
  return out;
}

}  // namespace

double christoffel_scal(const std::function<std::vector<double>(double)>& metric_diag, double r,
                        double h) {
  // coordinates (r, x_1..x_n), g_00 = 1, g_ii = metric_diag(r)[i-1]; only d/dr is nonzero
  auto full = [&](double x) {
    auto g = metric_diag(x);
    g.insert(g.begin(), 1.0);
    return g;
  };
  const int D = int(full(r).size());
  // Gamma^k_ij as a flat vector, index (k * D + i) * D + j
  auto gamma = [&](double x) {
    auto g = full(x);
    auto dg = central_d1(full, x, h);
    std::vector<double> G(std::size_t(D) * D * D, 0.0);
    auto d = [&](int c, int i, int j) { return (c == 0 && i == j) ? dg[i] : 0.0; };  // d_c g_ij
    for (int k = 0; k < D; ++k)
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
          G[(std::size_t(k) * D + i) * D + j] = 0.5 / g[k] * (d(i, k, j) + d(j, k, i) - d(k, i, j));
    return G;
  };
  auto G = gamma(r);
  auto dG = central_d1(gamma, r, h);  // d_r Gamma
  auto at = [&](const std::vector<double>& v, int k, int i, int j) { return v[(std::size_t(k) * D + i) * D + j]; };
  auto g = full(r);
  double scal = 0.0;
  for (int i = 0; i < D; ++i) {
    double Rii = 0.0;
    // R_ii = d_k Gamma^k_ii - d_i Gamma^k_ik + Gamma^k_kl Gamma^l_ii - Gamma^k_il Gamma^l_ik
    Rii += at(dG, 0, i, i);
    if (i == 0)
      for (int k = 0; k < D; ++k) Rii -= at(dG, k, 0, k);
    for (int k = 0; k < D; ++k)
      for (int l = 0; l < D; ++l) Rii += at(G, k, k, l) * at(G, l, i, i) - at(G, k, i, l) * at(G, l, i, k);
    scal += Rii / g[i];
  }
  return scal;
}

std::function<std::vector<double>(double)> flat_patch_metric(const WarpedMetricFamily& fam) {
  auto ls = lambdas_of(fam);
  return [ls](double r) {
    std::vector<double> g;
    for (const auto& l : ls) g.push_back(r * r * l.value(r));
    return g;
  };
}

ConeOperatorSpec mode_reduce_suspension(const LinkSpectrum& link, double Lambda, double omega_bound,
                                        double theta) {
  if (!check_spectral_gap(link).has_gap) throw Error("link spectrum has no spectral gap");
  if (!link.link_dimension()) throw Error("link dimension unknown; supply it with the spectrum");
  if (!(Lambda >= 0.0) || !(omega_bound >= 0.0)) throw Error("Lambda and omega_bound must be >= 0");
  if (!(theta > 0.0 && theta < std::numbers::pi)) throw Error("theta must lie in (0, pi)");
  ConeOperatorSpec spec;
  spec.spectrum = link;
  spec.theta = theta;
  spec.cone_theta = theta;
  spec.perturbation.diag.kind = DiagonalKind::Suspension;
  spec.perturbation.diag.amplitude = 1.0;
  if (omega_bound > 0.0 && link.total_modes() > 1) {
    spec.perturbation.coupling.kind = CouplingKind::Tridiagonal;
    spec.perturbation.coupling.shape = CouplingShape::Linear;
    spec.perturbation.coupling.amplitude = double(*link.link_dimension()) * std::max(1.0, Lambda) * omega_bound;
  }
  auto rep = validate_spec(spec);
  if (!rep.theta_prime) throw Error("no admissible theta found above grid resolution: " + rep.message);
  if (rep.valid) return spec;
  return absorb_cone(spec, *rep.theta_prime);
}

DensityCheck density_rescale_check(int n, double s, const RadialGrid& g, ProbeKind probe) {
  if (n < 1) throw Error("n must be >= 1");
  const int N = g.size();
  if (N < 16) throw Error("density check needs >= 16 nodes");
  const double a = g.nodes.front(), b = g.nodes.back();
  if (!(a > 0.0 && b < std::numbers::pi)) throw Error("density check grid must lie inside (0, pi)");
  const double h = (b - a) / double(N - 1);
  std::vector<double> u(N), v(N);
  const double c = 0.5 * (a + b), w = 0.45 * (b - a);
  for (int i = 0; i < N; ++i) {
    double r = g.nodes[i];
    u[i] = probe == ProbeKind::Constant ? 1.0 : poly_bump(r, c, w) * (1.0 + 0.3 * std::cos(3 * r));
    v[i] = u[i] * std::pow(std::sin(r), -0.5 * n);
  }
  auto du = uniform_d1(u, h);
  auto dv = uniform_d1(v, h);
  double num = 0.0, den_rhs = 0.0, den_u = 0.0;
  for (int i = 0; i < N; ++i) {
    double r = g.nodes[i], sn = std::sin(r);
    double lhs = std::pow(sn, 0.5 * n) * (dv[i] + 0.5 * n * std::cos(r) / sn * v[i] + s / sn * v[i]);
    double rhs = du[i] + s / sn * u[i];
    num = std::max(num, std::abs(lhs - rhs));
    den_rhs = std::max(den_rhs, std::abs(rhs));
    den_u = std::max(den_u, std::abs(u[i]));
  }
  DensityCheck dc;
  dc.n = n;
  dc.s = s;
  dc.residual = num / std::max(den_rhs, den_u);
  return dc;
}

}  // namespace conelab
