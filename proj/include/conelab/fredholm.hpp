#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conelab/cone_op.hpp"
#include "conelab/grid.hpp"

namespace conelab {

// one mode of the two-ended model: effective link eigenvalue near r = 0 and near r = pi
struct ModeFlow {
  double s0 = 0.0;
  double s_pi = 0.0;
  int mult = 1;
};

// Mode operators d/dr + (1 + kappa) s(r) / sigma(r) on (0, pi), with
// s(r) a smooth monotone ramp from s0 to s_pi supported in (pi/3, 2pi/3) and
// sigma = t phi + (1 - t) sin (phi = r near 0, pi - r near pi).
struct SuspensionModeModel {
  std::vector<ModeFlow> modes;
  double warp_blend = 0.0;
  double kappa = 0.0;
  std::string label;
};

double ramp_profile(const ModeFlow& mode, double r);
double straight_warp(double r);
double warp_sigma(double blend, double r);
// throws "endpoint in gap" when an effective endpoint eigenvalue lies in [-1/2, 1/2]
void validate_model(const SuspensionModeModel& model);

int analytic_mode_index(const SuspensionModeModel& model);

struct ModeIndexDetail {
  ModeFlow mode;
  int ker = 0;
  int coker = 0;
  double ker_decay = 0.0;    // endpoint-decay metric of the kernel candidate
  double coker_decay = 0.0;  // same for the adjoint
  double smallest_singular = 0.0;          // smallest non-structural singular value, operator
  double smallest_singular_adjoint = 0.0;  // same, adjoint
  double sigma_max = 0.0;
};

struct IndexReport {
  int analytic_index = 0;
  int svd_index = 0;
  std::vector<double> near_zero_singulars;
  double threshold = 0.0;
  bool agree = false;
  int N = 0;
  double threshold_rel = 0.0;
  double decay_tol = 0.0;
  std::vector<ModeIndexDetail> details;
};

struct SvdOptions {
  int N = 512;
  double threshold_rel = 1e-8;
  double r_min = 1e-3;
  double decay_tol = 0.05;
};

IndexReport svd_index(const SuspensionModeModel& model, const SvdOptions& opt = {});

// singular values (ascending) of the weighted box discretization of one mode operator
// (adjoint = true: -d/dr + c)
std::vector<double> mode_singular_values(const ModeFlow& mode, const SuspensionModeModel& model,
                                         const RadialGrid& grid, bool adjoint);

enum class ScanEndpoint { S0, SPi };

// endpoint(t) = slope * t + offset for the selected mode
struct ScanFamily {
  SuspensionModeModel base;
  int mode = 0;
  ScanEndpoint endpoint = ScanEndpoint::SPi;
  double slope = 1.0;
  double offset = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;
  double resolution = 1e-3;
  int svd_stride = 25;  // run svd_index on every k-th gapped sample
  SvdOptions svd;
};

struct JumpScanReport {
  std::vector<double> params;
  std::vector<std::optional<int>> analytic;  // nullopt where the gap closes
  std::vector<double> jumps;
  std::vector<double> crossings;  // parameter values where the endpoint equals +-1/2
  std::vector<double> svd_checked;
  std::vector<double> svd_disagree;
  std::vector<double> svd_unstable;
  bool coincide = false;
};

JumpScanReport index_jump_scan(const ScanFamily& family);

enum class DeformKind { Warp, Perturbation, SpectrumDrift };

struct DeformFamily {
  DeformKind kind = DeformKind::Warp;
  SuspensionModeModel base;
  double kappa_max = 0.0;            // Perturbation: kappa(t) = t * kappa_max
  std::vector<ModeFlow> target;      // SpectrumDrift: linear drift base -> target
  SvdOptions svd;
};

SuspensionModeModel model_at(const DeformFamily& family, double t);

struct DeformTrace {
  std::vector<double> t;
  std::vector<int> svd_index;
  std::vector<int> analytic_index;
  std::vector<double> step_modulus;  // ||A_t - A_{t_prev}|| on the base grid, max over modes
  double max_modulus = 0.0;
  bool constant = false;
};

DeformTrace deform_index_trace(const DeformFamily& family, int steps);

// suite of mode models with mixed signs and multiplicities
std::vector<SuspensionModeModel> shipped_models();

// net mode flow 2d: up-flow count minus down-flow count equals 2d
SuspensionModeModel flow_model(int d);

// bulk plus cone vector for the global check
struct GlobalVector {
  Eigen::VectorXcd bulk;
  ModeSection cone;
};

struct GlobalCutoffs {
  LogRamp phi, psi, chi;
};

// nested cutoffs phi < psi < chi with sup |r chi'| <= eps
GlobalCutoffs default_global_cutoffs(const ConeOperatorSpec& spec, double eps);

struct GlobalParametrixReport {
  double eps = 0.0;
  double X_norm = 0.0;
  double X_design_bound = 0.0;  // C_1 + sup|r chi'| * sup |s+1/2|^{-1}
  double Y_norm = 0.0;
  double right_residual = 0.0;
  double left_residual = 0.0;
  double local_right_residual = 0.0;
  double local_left_residual = 0.0;
  double remainder_norm = 0.0;  // max ||R f|| / ||f|| over the probes
  double cutoff_commutator_gap = 0.0;  // ||R f - (-phi' P (1-psi) f)|| when S_1 = 0
  Eigen::MatrixXcd remainder;  // columns R f_k, bulk entries first, then cone coefficients row-major
  int probes = 0;
};

GlobalParametrixReport global_parametrix_check(const ConeOperatorSpec& spec, GridPtr grid,
                                               const GlobalCutoffs& cutoffs, int probes,
                                               std::uint64_t seed);

}  // namespace conelab
