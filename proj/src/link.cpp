#include "conelab/link.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "conelab/error.hpp"

namespace conelab {

LinkSpectrum::LinkSpectrum(std::vector<SpectralEntry> entries, std::string label,
                           std::optional<int> link_dimension)
    : entries_(std::move(entries)), label_(std::move(label)), link_dimension_(link_dimension) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!std::isfinite(entries_[i].s)) throw Error("link spectrum: non-finite eigenvalue");
    if (entries_[i].m < 1) throw Error("link spectrum: multiplicity must be >= 1");
    if (i > 0 && !(entries_[i - 1].s < entries_[i].s))
      throw Error("link spectrum: entries must be strictly increasing in s");
  }
}

int LinkSpectrum::total_modes() const {
  int total = 0;
  for (const auto& e : entries_) total += e.m;
  return total;
}

std::vector<double> LinkSpectrum::mode_eigenvalues() const {
  std::vector<double> out;
  out.reserve(total_modes());
  for (const auto& e : entries_) out.insert(out.end(), e.m, e.s);
  return out;
}

std::vector<int> LinkSpectrum::mode_entry_index() const {
  std::vector<int> out;
  out.reserve(total_modes());
  for (std::size_t k = 0; k < entries_.size(); ++k) out.insert(out.end(), entries_[k].m, int(k));
  return out;
}

double LinkSpectrum::min_abs_eigenvalue() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) v = std::min(v, std::abs(e.s));
  return v;
}

double LinkSpectrum::max_abs_eigenvalue() const {
  double v = 0.0;
  for (const auto& e : entries_) v = std::max(v, std::abs(e.s));
  return v;
}

GapReport check_spectral_gap(const LinkSpectrum& spec) {
  if (spec.empty()) throw Error("empty link spectrum");
  GapReport rep;
  rep.has_gap = true;
  rep.nearest_to_half = std::numeric_limits<double>::infinity();
  for (const auto& e : spec.entries()) {
    double a = std::abs(e.s);
    if (a <= 0.5) rep.has_gap = false;
    rep.nearest_to_half = std::min(rep.nearest_to_half, std::abs(a - 0.5));
  }
  rep.min_abs_eigenvalue = spec.min_abs_eigenvalue();
  return rep;
}

static std::int64_t binomial(int n, int k) {
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

LinkSpectrum sphere_dirac_spectrum(int n, int kmax) {
  if (n < 1) throw Error("sphere_dirac_spectrum: n must be >= 1");
  if (kmax < 0) throw Error("sphere_dirac_spectrum: kmax must be >= 0");
  const std::int64_t spin = std::int64_t(1) << (n / 2);
  std::vector<SpectralEntry> pos;
  for (int k = 0; k <= kmax; ++k) {
    std::int64_t m = spin * binomial(k + n - 1, k);
    if (m > std::numeric_limits<int>::max()) throw Error("sphere_dirac_spectrum: multiplicity overflow");
    pos.push_back({0.5 * n + k, int(m)});
  }
  std::vector<SpectralEntry> all;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) all.push_back({-it->s, it->m});
  all.insert(all.end(), pos.begin(), pos.end());
  return LinkSpectrum(std::move(all),
                      "sphere_dirac n=" + std::to_string(n) + " kmax=" + std::to_string(kmax), n);
}

Ac6Caps caps_ac6(const LinkSpectrum& spec) {
  if (!check_spectral_gap(spec).has_gap) throw Error("caps: spectral gap violated");
  Ac6Caps caps{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& e : spec.entries()) {
    caps.cap_right = std::min(caps.cap_right, std::abs((2 * e.s + 1) / (4 * e.s)));
    caps.cap_left = std::min(caps.cap_left, std::abs((2 * e.s - 1) / (4 * e.s)));
  }
  return caps;
}

}  // namespace conelab
