#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conelab/grid.hpp"

namespace conelab {

enum class KernelKind { P0, P1 };

// P0: int_0^r (y/r)^s w(y) dy        (s > -1/2)
// P1: int_U^r (y/r)^s w(y) dy, U = upper endpoint (default theta)   (s < 1/2)
// Evaluated by the multiplicative recurrence with exact integrals of (y/r)^s against
// the piecewise-linear interpolant of w (constant on (0, r_1]).
class KernelOperator {
 public:
  KernelOperator(KernelKind kind, double s, const RadialGrid& grid, double upper = 0.0);

  KernelKind kind() const { return kind_; }
  double s() const { return s_; }
  double upper() const { return upper_; }
  const RadialGrid& grid() const { return *grid_; }
  // last node index inside (0, upper]
  int last_node() const { return last_; }

  template <class T> void apply(const T* in, T* out) const;
  // matrix transpose of apply (plain, unweighted)
  template <class T> void apply_transpose(const T* in, T* out) const;

  std::vector<double> apply(const std::vector<double>& w) const;
  std::vector<double> apply_transpose(const std::vector<double>& w) const;

 private:
  KernelKind kind_;
  double s_;
  const RadialGrid* grid_;
  double upper_;
  int last_ = 0;
  // P0: out_i = c_i out_{i-1} + a_i w_{i-1} + b_i w_i
  // P1: out_i = c_i out_{i+1} + a_i w_i + b_i w_{i+1}
  std::vector<double> c_, a_, b_;
};

std::vector<double> apply_P(const KernelOperator& op, const std::vector<double>& omega);

// Nodal matrix of apply_P, built entrywise from per-interval integrals (no recurrence).
Eigen::MatrixXd dense_matrix(const KernelOperator& op);

double ode_residual(const KernelOperator& op, const std::vector<double>& omega);
double inverse_residual(const KernelOperator& op, const std::vector<double>& nu);

enum class SchurTarget { InvRP0, P0InvR, InvRP1, P1InvR };

std::string to_string(SchurTarget t);
SchurTarget schur_target_from_string(const std::string& name);

bool schur_admissible(double s, SchurTarget t);
double schur_bound(double s, SchurTarget t);

struct SchurCertificate {
  double s = 0.0;
  SchurTarget target = SchurTarget::InvRP0;
  double bound = 0.0;
  double row_check_max = 0.0;
  double col_check_max = 0.0;
  bool passed = false;
};

SchurCertificate schur_certificate(double s, SchurTarget target);

// Kernel r^alpha y^beta on {y < r} (lower) or {y > r} (upper), on (0, theta].
struct PowerKernel {
  double alpha = 0.0;
  double beta = 0.0;
  bool lower = true;
};

PowerKernel kernel_of(double s, SchurTarget t);
// plain P_{0,s} (lower) or P_{1,s} (upper), kernel (y/r)^s
PowerKernel plain_kernel(KernelKind kind, double s);

// Galerkin (cell-average) matrix of the kernel on the cells [0,r_1], [r_1,r_2], ...
Eigen::MatrixXd galerkin_matrix(const PowerKernel& k, const RadialGrid& grid);
// top singular value of the Galerkin discretization; O(N) matvecs, Lanczos bidiagonalization
double galerkin_norm(const PowerKernel& k, const RadialGrid& grid, int max_iter = 1200,
                     double tol = 1e-10);

double operator_norm(double s, SchurTarget target, const RadialGrid& grid);

}  // namespace conelab
