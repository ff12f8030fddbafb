#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conelab/cone_op.hpp"
#include "conelab/grid.hpp"
#include "conelab/link.hpp"

namespace conelab {

enum class WarpKind { Sin, Linear, Constant, Custom };

std::string to_string(WarpKind k);
WarpKind warp_kind_from_string(const std::string& name);

// warp rho on (0, L): builtins with exact derivatives, or uniform samples (custom)
struct WarpFunction {
  WarpKind kind = WarpKind::Sin;
  std::vector<double> r;       // Custom: uniform abscissae
  std::vector<double> values;  // Custom: rho(r)

  static WarpFunction sin() { return {WarpKind::Sin, {}, {}}; }
  static WarpFunction linear() { return {WarpKind::Linear, {}, {}}; }
  static WarpFunction constant() { return {WarpKind::Constant, {}, {}}; }
  static WarpFunction custom(std::vector<double> r, std::vector<double> values);
};

struct WarpSamples {
  std::vector<double> r, rho, d1, d2;
};

// builtins are evaluated at r; custom warps at their own samples (r ignored),
// derivatives by 4th-order differences
WarpSamples sample_warp(const WarpFunction& w, const std::vector<double>& r);

struct CurvatureProfile {
  std::vector<double> r;
  std::vector<double> scal;
  std::vector<double> r2_scal;
  std::optional<double> limit_estimate;
  // Richardson inputs r^2 scal at r0, r0/2, r0/4
  std::vector<double> richardson_samples;
};

CurvatureProfile suspension_scal(int n, double scal_g, const WarpFunction& rho,
                                 const std::vector<double>& r);

enum class LambdaKind { One, Quadratic, Power, SinLog, RLog };

std::string to_string(LambdaKind k);
LambdaKind lambda_kind_from_string(const std::string& name);

// lambda(r) with lambda(0) = 1:
// One 1; Quadratic 1 + a r^2; Power 1 + a r^p; SinLog 1 + a sin(ln r); RLog 1 + a r ln(1/r)
struct LambdaFunction {
  LambdaKind kind = LambdaKind::One;
  double a = 0.0;
  double p = 2.0;
  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;
};

// g = dr^2 + r^2 g_r with g_r = sum lambda_i(r) e_i^2 in a fixed g_0-orthonormal frame
struct WarpedMetricFamily {
  int n = 2;
  double scal_link = 0.0;
  std::vector<LambdaFunction> lambdas;  // size n; empty means all One
  std::string label;
};

struct AdmissibilityReport {
  double max_r_d1 = 0.0;   // max |r lambda'| over the probe radii
  double max_r2_d2 = 0.0;  // max |r^2 lambda''|
  double tol = 0.0;
  bool ok = false;
};

AdmissibilityReport cone_admissibility(const WarpedMetricFamily& fam, double tol = 1e-3);

// scalar curvature of the generalized cone at radius r
double generalized_cone_scal_at(const WarpedMetricFamily& fam, double r);

CurvatureProfile generalized_cone_scal(const WarpedMetricFamily& fam, const std::vector<double>& r,
                                       double r0 = 0.01);

// scalar curvature of dr^2 + sum_i g_i(r) dx_i^2 from coordinate Christoffel symbols, all
// metric derivatives by nested 4th-order central differences with step h
double christoffel_scal(const std::function<std::vector<double>(double)>& metric_diag, double r,
                        double h);
// the family as a metric on a flat-torus coordinate patch: g_i = r^2 lambda_i(r)
std::function<std::vector<double>(double)> flat_patch_metric(const WarpedMetricFamily& fam);

// suspension Dirac operator reduced to modes: S_1 diagonal (r/sin r - 1) S_0, coupling
// n max(1, Lambda) omega_bound r; cone part shrunk to the largest admissible radius
ConeOperatorSpec mode_reduce_suspension(const LinkSpectrum& link, double Lambda, double omega_bound,
                                        double theta = 1.0);

enum class ProbeKind { Bump, Constant };

struct DensityCheck {
  int n = 0;
  double s = 0.0;
  double residual = 0.0;
};

// sin^{n/2} (d/dr + (n/2) cot r + s/sin r) sin^{-n/2} u  vs  (d/dr + s/sin r) u on a uniform grid
DensityCheck density_rescale_check(int n, double s, const RadialGrid& grid,
                                   ProbeKind probe = ProbeKind::Bump);

// 4th-order first and second differences on uniform samples
std::vector<double> uniform_d1(const std::vector<double>& f, double h);
std::vector<double> uniform_d2(const std::vector<double>& f, double h);

}  // namespace conelab
