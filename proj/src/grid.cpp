#include "conelab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "conelab/error.hpp"

namespace conelab {

std::string to_string(GridScheme scheme) {
  switch (scheme) {
    case GridScheme::LogRefined: return "log-refined";
    case GridScheme::Uniform: return "uniform";
    case GridScheme::TwoEnded: return "two-ended";
  }
  return "unknown";
}

GridScheme grid_scheme_from_string(const std::string& name) {
  if (name == "log-refined" || name == "log") return GridScheme::LogRefined;
  if (name == "uniform") return GridScheme::Uniform;
  if (name == "two-ended") return GridScheme::TwoEnded;
  throw Error("unknown grid scheme: " + name);
}

double RadialGrid::integrate(const std::vector<double>& f) const {
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) acc += weights[i] * f[i];
  return acc;
}

double RadialGrid::l2_norm(const std::vector<double>& f) const {
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) acc += weights[i] * f[i] * f[i];
  return std::sqrt(acc);
}

// trapezoid weights on [r_1, r_N]; the caller adds end extensions
static std::vector<double> trapezoid(const std::vector<double>& r) {
  const int n = int(r.size());
  std::vector<double> w(n, 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    double h = r[i + 1] - r[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

// derivative weights at x0 of the Lagrange interpolant through x[0..K-1]
static void lagrange_d1(const double* x, double x0, double* w) {
  constexpr int K = kStencilWidth;
  for (int j = 0; j < K; ++j) {
    double den = 1.0, num = 0.0;
    for (int k = 0; k < K; ++k)
      if (k != j) den *= x[j] - x[k];
    for (int k = 0; k < K; ++k) {
      if (k == j) continue;
      double p = 1.0;
      for (int l = 0; l < K; ++l)
        if (l != j && l != k) p *= x0 - x[l];
      num += p;
    }
    w[j] = num / den;
  }
}

static void build_stencil(RadialGrid& g) {
  const int n = g.size();
  if (n < kStencilWidth) throw Error("grid too small for the derivative stencil");
  g.stencil.assign(n, {});
  g.stencil_start.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    int st = std::clamp(i - kStencilWidth / 2, 0, n - kStencilWidth);
    g.stencil_start[i] = st;
    lagrange_d1(&g.nodes[st], g.nodes[i], g.stencil[i].data());
  }
}

RadialGrid make_grid(double theta, int N, GridScheme scheme, double r_min) {
  if (r_min <= 0.0) r_min = 1e-6 * theta;
  if (!(theta > 0.0 && theta <= 1.0)) throw Error("make_grid: theta must lie in (0, 1]");
  if (!(r_min > 0.0 && r_min < theta)) throw Error("make_grid: need 0 < r_min < theta");
  if (N < 16) throw Error("make_grid: N must be >= 16");
  RadialGrid g;
  g.theta = theta;
  g.r_min = r_min;
  g.scheme = scheme;
  g.nodes.resize(N);
  if (scheme == GridScheme::Uniform) {
    for (int i = 0; i < N; ++i) g.nodes[i] = r_min + (theta - r_min) * double(i) / double(N - 1);
  } else if (scheme == GridScheme::LogRefined) {
    if (!(r_min < 0.5 * theta)) throw Error("make_grid: log-refined needs r_min < theta/2");
    const int k = N / 2;
    const double lq = std::log(0.5 * theta / r_min) / k;
    for (int i = 0; i < k; ++i) g.nodes[i] = r_min * std::exp(lq * i);
    const int nu = N - k;
    for (int i = 0; i < nu; ++i) g.nodes[k + i] = 0.5 * theta + 0.5 * theta * double(i) / double(nu - 1);
  } else {
    throw Error("make_grid: two-ended scheme needs make_two_ended_grid");
  }
  g.nodes.back() = theta;
  g.weights = trapezoid(g.nodes);
  g.weights[0] += g.nodes[0];
  build_stencil(g);
  return g;
}

RadialGrid make_two_ended_grid(double length, int N, double r_min) {
  if (!(length > 0.0)) throw Error("make_two_ended_grid: length must be positive");
  if (!(r_min > 0.0 && r_min < 0.25 * length)) throw Error("make_two_ended_grid: bad r_min");
  if (N < 16) throw Error("make_two_ended_grid: N must be >= 16");
  RadialGrid g;
  g.theta = length;
  g.r_min = r_min;
  g.scheme = GridScheme::TwoEnded;
  const int k = N / 4;
  const int nu = N - 2 * k;
  const double a = 0.25 * length, b = 0.75 * length;
  const double lq = std::log(a / r_min) / k;
  std::vector<double> left(k);
  for (int i = 0; i < k; ++i) left[i] = r_min * std::exp(lq * i);
  g.nodes = left;
  for (int i = 0; i < nu; ++i) g.nodes.push_back(a + (b - a) * double(i) / double(nu - 1));
  for (int i = k - 1; i >= 0; --i) g.nodes.push_back(length - left[i]);
  g.weights = trapezoid(g.nodes);
  g.weights.front() += g.nodes.front();
  g.weights.back() += length - g.nodes.back();
  build_stencil(g);
  return g;
}

RadialGrid make_interval_grid(double a, double b, int N) {
  if (!(a > 0.0 && b > a)) throw Error("make_interval_grid: need 0 < a < b");
  if (N < 16) throw Error("make_interval_grid: N must be >= 16");
  RadialGrid g;
  g.theta = b;
  g.r_min = a;
  g.scheme = GridScheme::Uniform;
  g.nodes.resize(N);
  for (int i = 0; i < N; ++i) g.nodes[i] = a + (b - a) * double(i) / double(N - 1);
  g.nodes.back() = b;
  g.weights = trapezoid(g.nodes);
  build_stencil(g);
  return g;
}

GridPtr share(RadialGrid grid) { return std::make_shared<const RadialGrid>(std::move(grid)); }

std::vector<double> derivative(const RadialGrid& g, const std::vector<double>& f) {
  if (int(f.size()) != g.size()) throw Error("derivative: size mismatch");
  std::vector<double> out(f.size());
  differentiate(g, f.data(), out.data());
  return out;
}

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double g = 1.0 / x - 1.0 / (1.0 - x);
  if (g > 700.0) return 0.0;
  if (g < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(g));
}

double smooth_step_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double f = smooth_step(x);
  return f * (1.0 - f) * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x)));
}

double LogRamp::value(double r) const {
  if (r <= inner) return 1.0;
  if (r >= outer) return 0.0;
  return smooth_step(std::log(outer / r) / std::log(outer / inner));
}

double LogRamp::derivative(double r) const {
  if (r <= inner || r >= outer) return 0.0;
  double L = std::log(outer / inner);
  return -smooth_step_derivative(std::log(outer / r) / L) / (r * L);
}

double LogRamp::log_slope() const { return 2.0 / std::log(outer / inner); }

Cutoff make_ramp_cutoff(const LogRamp& ramp, const RadialGrid& grid) {
  if (!(ramp.inner > 0.0 && ramp.outer > ramp.inner)) throw Error("cutoff ramp: need 0 < inner < outer");
  Cutoff c;
  c.ramp = ramp;
  c.eps = ramp.outer;
  c.delta = ramp.inner / ramp.outer;
  c.tau.resize(grid.size());
  c.dtau.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    c.tau[i] = ramp.value(grid.nodes[i]);
    c.dtau[i] = ramp.derivative(grid.nodes[i]);
  }
  return c;
}

Cutoff make_cutoff(double eps, const RadialGrid& grid) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("make_cutoff: eps must lie in (0, 1)");
  double delta = std::min(std::exp(-kCutoffC1 / eps), 0.125);
  Cutoff c = make_ramp_cutoff(LogRamp{delta * eps, eps}, grid);
  c.eps = eps;
  c.delta = delta;
  return c;
}

ModeSection::ModeSection(GridPtr grid, SpectrumPtr spectrum)
    : grid_(std::move(grid)), spectrum_(std::move(spectrum)) {
  if (!grid_ || !spectrum_) throw Error("ModeSection: null grid or spectrum");
  coeffs_ = CMatrix::Zero(spectrum_->total_modes(), grid_->size());
}

double ModeSection::l2_norm() const {
  const auto& w = grid_->weights;
  double acc = 0.0;
  for (int m = 0; m < modes(); ++m) {
    double row = 0.0;
    for (int i = 0; i < nodes(); ++i) row += w[i] * std::norm(coeffs_(m, i));
    acc += row;
  }
  return std::sqrt(acc);
}

std::complex<double> ModeSection::inner(const ModeSection& o) const {
  if (!compatible(o)) throw Error("ModeSection: incompatible sections");
  const auto& w = grid_->weights;
  std::complex<double> acc = 0.0;
  for (int m = 0; m < modes(); ++m)
    for (int i = 0; i < nodes(); ++i) acc += w[i] * std::conj(coeffs_(m, i)) * o.coeffs_(m, i);
  return acc;
}

bool ModeSection::compatible(const ModeSection& o) const {
  if (coeffs_.rows() != o.coeffs_.rows() || coeffs_.cols() != o.coeffs_.cols()) return false;
  if (grid_ != o.grid_ && grid_->nodes != o.grid_->nodes) return false;
  return spectrum_ == o.spectrum_ || *spectrum_ == *o.spectrum_;
}

ModeSection ModeSection::times_radial(const std::vector<double>& f) const {
  if (int(f.size()) != nodes()) throw Error("times_radial: size mismatch");
  ModeSection out = *this;
  for (int m = 0; m < modes(); ++m)
    for (int i = 0; i < nodes(); ++i) out.coeffs_(m, i) *= f[i];
  return out;
}

ModeSection& ModeSection::operator+=(const ModeSection& o) {
  if (!compatible(o)) throw Error("ModeSection: incompatible sections");
  coeffs_ += o.coeffs_;
  return *this;
}

ModeSection& ModeSection::operator-=(const ModeSection& o) {
  if (!compatible(o)) throw Error("ModeSection: incompatible sections");
  coeffs_ -= o.coeffs_;
  return *this;
}

ModeSection& ModeSection::operator*=(std::complex<double> a) {
  coeffs_ *= a;
  return *this;
}

ModeSection operator+(ModeSection a, const ModeSection& b) { return a += b; }
ModeSection operator-(ModeSection a, const ModeSection& b) { return a -= b; }
ModeSection operator*(std::complex<double> c, ModeSection a) { return a *= c; }

ModeSection mode_section_from(const ModeProfile& fn, GridPtr grid, SpectrumPtr spectrum) {
  return mode_section_from(IndexedModeProfile([&](int, double s, double r) { return fn(s, r); }),
                           std::move(grid), std::move(spectrum));
}

ModeSection mode_section_from(const IndexedModeProfile& fn, GridPtr grid, SpectrumPtr spectrum) {
  ModeSection u(grid, spectrum);
  auto s = spectrum->mode_eigenvalues();
  for (int m = 0; m < u.modes(); ++m)
    for (int i = 0; i < u.nodes(); ++i) u.coeffs()(m, i) = fn(m, s[m], grid->nodes[i]);
  return u;
}

double poly_bump(double r, double center, double half_width) {
  double x = (r - center) / half_width;
  if (std::abs(x) >= 1.0) return 0.0;
  double t = 1.0 - x * x;
  return t * t * t * t;
}

double poly_bump_derivative(double r, double center, double half_width) {
  double x = (r - center) / half_width;
  if (std::abs(x) >= 1.0) return 0.0;
  double t = 1.0 - x * x;
  return -8.0 * x * t * t * t / half_width;
}

ModeSection random_smooth_section(GridPtr grid, SpectrumPtr spectrum, double lo, double hi,
                                  std::uint64_t seed) {
  if (!(hi > lo && lo > 0.0)) throw Error("random_smooth_section: need 0 < lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModeSection u(grid, spectrum);
  const double span = hi - lo;
  for (int m = 0; m < u.modes(); ++m) {
    for (int b = 0; b < 2; ++b) {
      double hw = span * (0.15 + 0.3 * unit(rng));
      double c = lo + hw + (span - 2 * hw) * unit(rng);
      std::complex<double> amp(2 * unit(rng) - 1, 2 * unit(rng) - 1);
      for (int i = 0; i < u.nodes(); ++i) u.coeffs()(m, i) += amp * poly_bump(grid->nodes[i], c, hw);
    }
  }
  return u;
}

ModeSection random_log_section(GridPtr grid, SpectrumPtr spectrum, double lo, double hi,
                               std::uint64_t seed) {
  if (!(hi > lo && lo > 0.0)) throw Error("random_log_section: need 0 < lo < hi");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ModeSection u(grid, spectrum);
  const double a = std::log(lo), span = std::log(hi) - a;
  for (int m = 0; m < u.modes(); ++m) {
    for (int b = 0; b < 2; ++b) {
      double hw = span * (0.15 + 0.3 * unit(rng));
      double c = a + hw + (span - 2 * hw) * unit(rng);
      std::complex<double> amp(2 * unit(rng) - 1, 2 * unit(rng) - 1);
      for (int i = 0; i < u.nodes(); ++i) u.coeffs()(m, i) += amp * poly_bump(std::log(grid->nodes[i]), c, hw);
    }
  }
  return u;
}

}  // namespace conelab
