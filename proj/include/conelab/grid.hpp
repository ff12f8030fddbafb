#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conelab/link.hpp"

namespace conelab {

enum class GridScheme { LogRefined, Uniform, TwoEnded };

std::string to_string(GridScheme scheme);
GridScheme grid_scheme_from_string(const std::string& name);

inline constexpr int kStencilWidth = 5;

// Nodes r_1 < ... < r_N with quadrature weights for the integral over (0, theta].
// The first weight also covers (0, r_1] by constant extension.
struct RadialGrid {
  double theta = 0.0;
  double r_min = 0.0;
  GridScheme scheme = GridScheme::LogRefined;
  std::vector<double> nodes;
  std::vector<double> weights;
  // five-point first-derivative stencil: d/dr f(r_i) ~ sum_k coef[i][k] * f(stencil_start[i] + k)
  std::vector<std::array<double, kStencilWidth>> stencil;
  std::vector<int> stencil_start;

  int size() const { return int(nodes.size()); }
  double integrate(const std::vector<double>& f) const;
  double l2_norm(const std::vector<double>& f) const;
};

using GridPtr = std::shared_ptr<const RadialGrid>;
using SpectrumPtr = std::shared_ptr<const LinkSpectrum>;

// r_min <= 0 selects the default 1e-6 * theta.
RadialGrid make_grid(double theta, int N, GridScheme scheme, double r_min = 0.0);
// nodes on (0, length) refined geometrically toward both ends
RadialGrid make_two_ended_grid(double length, int N, double r_min);
// uniform nodes on [a, b], trapezoid weights over [a, b]
RadialGrid make_interval_grid(double a, double b, int N);

GridPtr share(RadialGrid grid);

template <class T>
void differentiate(const RadialGrid& g, const T* in, T* out) {
  const int n = g.size();
  for (int i = 0; i < n; ++i) {
    const int j = g.stencil_start[i];
    const auto& c = g.stencil[i];
    T acc = c[0] * in[j];
    for (int k = 1; k < kStencilWidth; ++k) acc += c[k] * in[j + k];
    out[i] = acc;
  }
}

std::vector<double> derivative(const RadialGrid& g, const std::vector<double>& f);

// C-infinity step: 0 for x <= 0, 1 for x >= 1, max slope 2 at x = 1/2.
double smooth_step(double x);
double smooth_step_derivative(double x);

// Constant C_1 in delta = min(exp(-C_1/eps), 1/8); any C_1 >= max slope of smooth_step works.
inline constexpr double kCutoffC1 = 2.5;

// tau = 1 on [0, inner], 0 on [outer, inf), smooth in log r between.
struct LogRamp {
  double inner = 0.0;
  double outer = 0.0;
  double value(double r) const;
  double derivative(double r) const;
  // sup |r tau'(r)|
  double log_slope() const;
};

struct Cutoff {
  double eps = 0.0;
  double delta = 0.0;
  LogRamp ramp;
  std::vector<double> tau;
  std::vector<double> dtau;
};

Cutoff make_cutoff(double eps, const RadialGrid& grid);
Cutoff make_ramp_cutoff(const LogRamp& ramp, const RadialGrid& grid);

using CMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// u in L^2((0,theta), L): one row of complex coefficients per mode (entries expanded by multiplicity).
class ModeSection {
 public:
  ModeSection(GridPtr grid, SpectrumPtr spectrum);

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const LinkSpectrum& spectrum() const { return *spectrum_; }
  const SpectrumPtr& spectrum_ptr() const { return spectrum_; }

  CMatrix& coeffs() { return coeffs_; }
  const CMatrix& coeffs() const { return coeffs_; }
  int modes() const { return int(coeffs_.rows()); }
  int nodes() const { return int(coeffs_.cols()); }

  double l2_norm() const;
  std::complex<double> inner(const ModeSection& other) const;
  bool compatible(const ModeSection& other) const;

  ModeSection zeros_like() const { return ModeSection(grid_, spectrum_); }
  // pointwise product with a radial function sampled on the nodes
  ModeSection times_radial(const std::vector<double>& f) const;

  ModeSection& operator+=(const ModeSection& o);
  ModeSection& operator-=(const ModeSection& o);
  ModeSection& operator*=(std::complex<double> a);

 private:
  GridPtr grid_;
  SpectrumPtr spectrum_;
  CMatrix coeffs_;
};

ModeSection operator+(ModeSection a, const ModeSection& b);
ModeSection operator-(ModeSection a, const ModeSection& b);
ModeSection operator*(std::complex<double> c, ModeSection a);

using ModeProfile = std::function<std::complex<double>(double s, double r)>;
using IndexedModeProfile = std::function<std::complex<double>(int mode, double s, double r)>;

ModeSection mode_section_from(const ModeProfile& fn, GridPtr grid, SpectrumPtr spectrum);
ModeSection mode_section_from(const IndexedModeProfile& fn, GridPtr grid, SpectrumPtr spectrum);

// polynomial bump (1 - x^2)^4, x = (r - center)/half_width; C^3
double poly_bump(double r, double center, double half_width);
double poly_bump_derivative(double r, double center, double half_width);

// Random smooth section: every mode row a sum of two polynomial bumps with random complex
// amplitudes, centers and widths, supported in [lo, hi].
ModeSection random_smooth_section(GridPtr grid, SpectrumPtr spectrum, double lo, double hi,
                                  std::uint64_t seed);
// same with the bumps placed in log r
ModeSection random_log_section(GridPtr grid, SpectrumPtr spectrum, double lo, double hi,
                               std::uint64_t seed);

}  // namespace conelab
