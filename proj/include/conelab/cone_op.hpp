#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "conelab/grid.hpp"
#include "conelab/link.hpp"
#include "conelab/mode_kernels.hpp"

namespace conelab {

// diagonal part of S_1(r) is a(s, r) * s on the s-eigenspace
enum class DiagonalKind { Zero, Constant, Linear, Suspension };

struct DiagonalProfile {
  DiagonalKind kind = DiagonalKind::Zero;
  double amplitude = 0.0;
  // Constant: a = amplitude; Linear: a = amplitude * r; Suspension: a = amplitude * r (1/sin r - 1/r)
  double value(double s, double r) const;
  bool is_zero() const { return kind == DiagonalKind::Zero || amplitude == 0.0; }
};

enum class CouplingKind { None, Tridiagonal };
enum class CouplingShape { Constant, Linear };

// B(r) = beta(r) * C, C the mode-chain matrix with 1/2 on both off-diagonals (||C|| < 1).
struct CouplingProfile {
  CouplingKind kind = CouplingKind::None;
  CouplingShape shape = CouplingShape::Linear;
  double amplitude = 0.0;
  double beta(double r) const;
  bool is_zero() const { return kind == CouplingKind::None || amplitude == 0.0; }
  // ||C|| for M modes
  double matrix_norm(int modes) const;
  Eigen::SparseMatrix<double> matrix(int modes) const;
};

struct PerturbationProfile {
  DiagonalProfile diag;
  CouplingProfile coupling;
  bool is_zero() const { return diag.is_zero() && coupling.is_zero(); }
};

// Finite bulk block; glue couples the cone trace at r = theta (all modes) into the bulk equations.
struct BulkBlock {
  Eigen::MatrixXd block;
  Eigen::MatrixXd glue;
};

enum class Chirality { Plus, Minus };

struct ConeOperatorSpec {
  LinkSpectrum spectrum;
  double theta = 1.0;       // length of the radial interval carried by the grid
  double cone_theta = 1.0;  // cone part (0, cone_theta]; [cone_theta, theta] belongs to the bulk
  PerturbationProfile perturbation;
  std::optional<BulkBlock> bulk;
  Chirality chirality = Chirality::Plus;
};

struct ValidationReport {
  bool gap_ok = false;
  bool ac6_ok = false;
  bool valid = false;
  Ac6Caps caps;
  double sup_right = 0.0;  // sup_r ||S_1 S_0^{-1}|| bound over (0, cone_theta]
  double sup_left = 0.0;   // sup_r ||S_0^{-1} S_1|| bound
  std::optional<double> theta_prime;
  std::string message;
};

// bounds of ||S_1(r) S_0^{-1}|| and ||S_0^{-1} S_1(r)|| at one radius
std::pair<double, double> ac6_norms_at(const ConeOperatorSpec& spec, double r);

ValidationReport validate_spec(const ConeOperatorSpec& spec, int samples = 4096);
ConeOperatorSpec absorb_cone(const ConeOperatorSpec& spec, double theta_prime);

struct NeumannInfo {
  double q = 0.0;  // rigorous bound on ||{(1/r) S_1 P}||
  int j_max = 0;
};

struct CompositeNorms {
  double inv_r_S0_P = 0.0, cap_inv_r_S0_P = 0.0;
  double P_inv_r_S0 = 0.0, cap_P_inv_r_S0 = 0.0;
  double inv_r_S1_P = 0.0, cap_inv_r_S1_P = 0.0;  // cap = C_1
  double P_inv_r_S1 = 0.0, cap_P_inv_r_S1 = 0.0;  // cap = C_2
  double inv_r_P = 0.0, cap_inv_r_P = 0.0;
  double P = 0.0;
  double P_bound_exp1 = 0.0;  // theta * sup |s+1/2|^{-1}
  double P_bound_exp2 = 0.0;  // sup |s+1/2|^{-2}
};

struct NormReport {
  double u_norm = 0.0;
  double K_norm = 0.0;
  double dr_norm = 0.0;
  double S0_over_r_norm = 0.0;
  double graph_norm = 0.0;
  double h1_cone_norm = 0.0;
  std::optional<double> ratio;
};

// A cone operator bound to a grid. All ModeSections passed in must live on this grid.
class ConeOperator {
 public:
  ConeOperator(ConeOperatorSpec spec, GridPtr grid);

  const ConeOperatorSpec& spec() const { return spec_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const SpectrumPtr& spectrum_ptr() const { return spectrum_; }
  const RadialGrid& grid() const { return *grid_; }
  int cone_nodes() const { return cone_last_ + 1; }

  ModeSection zero() const { return ModeSection(grid_, spectrum_); }

  ModeSection apply_K(const ModeSection& u) const;
  ModeSection apply_parametrix(const ModeSection& u) const;
  // adjoint of the parametrix in the weighted L^2 of the grid
  ModeSection apply_parametrix_adjoint(const ModeSection& u) const;
  // pointwise (1/r) S_1(r), and its adjoint
  ModeSection apply_S1_over_r(const ModeSection& u) const;
  ModeSection apply_S1_over_r_adjoint(const ModeSection& u) const;
  ModeSection apply_S0_over_r(const ModeSection& u) const;
  ModeSection apply_dr(const ModeSection& u) const;

  ModeSection apply_inv_r_S0_P(const ModeSection& u) const;
  ModeSection apply_P_inv_r_S0(const ModeSection& u) const;
  ModeSection apply_inv_r_S1_P(const ModeSection& u) const;  // B
  ModeSection apply_P_inv_r_S1(const ModeSection& u) const;  // A
  ModeSection apply_inv_r_P(const ModeSection& u) const;

  NeumannInfo neumann_info() const;
  // V = sum_{j <= j_max} (-B)^j
  ModeSection apply_V(const ModeSection& u) const;

  // coefficients restricted to the cone part (nodes r <= cone_theta)
  ModeSection restrict_to_cone(const ModeSection& u) const;
  double cone_norm(const ModeSection& u) const;

  // banded matrix of the discretized operator on the collar nodes of one mode
  // (couplings between modes not included)
  Eigen::SparseMatrix<double> collar_block(int mode) const;

 private:
  void check(const ModeSection& u) const;

  ConeOperatorSpec spec_;
  GridPtr grid_;
  SpectrumPtr spectrum_;
  int cone_last_ = 0;
  std::vector<double> mode_s_;
  std::vector<int> mode_entry_;
  std::vector<KernelOperator> kernels_;  // one per spectral entry
  std::vector<std::vector<double>> diag_coef_;  // per entry: s * a(s, r_i) / r_i
  std::vector<double> beta_over_r_;
};

// free-function façade, one ConeOperator per call
ModeSection apply_K(const ConeOperatorSpec& spec, const ModeSection& u);
ModeSection apply_parametrix(const ConeOperatorSpec& spec, const ModeSection& u);

double parametrix_right_identity(const ConeOperator& op, const Cutoff& psi, const ModeSection& u);
double parametrix_left_identity(const ConeOperator& op, const ModeSection& u);
double exact_inverse_residual(const ConeOperator& op, const ModeSection& u);
double commutation_check(const ConeOperator& op, int j, const ModeSection& u);
NormReport norm_report(const ConeOperator& op, const ModeSection& u);
double leibniz_residual(const ConeOperator& op, const std::vector<double>& phi,
                        const std::vector<double>& dphi, const ModeSection& u);

// measured composite norms: S_0 composites and {(1/r)P} by Galerkin per spectral entry,
// S_1 composites by power iteration with the nodal adjoints
CompositeNorms composite_norms(const ConeOperator& op, std::uint64_t seed = 0);
// caps C_1 and C_2 from validate_spec bounds
std::pair<double, double> s1_caps(const ConeOperatorSpec& spec);

// ||T|| by Lanczos bidiagonalization with an explicit adjoint; keeps max_iter vectors of each side
double power_norm(const std::function<ModeSection(const ModeSection&)>& T,
                  const std::function<ModeSection(const ModeSection&)>& Tadj, ModeSection start,
                  int max_iter = 120, double tol = 1e-9);

}  // namespace conelab
