#pragma once

#include <optional>
#include <string>
#include <vector>

namespace conelab {

struct SpectralEntry {
  double s = 0.0;
  int m = 1;
  bool operator==(const SpectralEntry&) const = default;
};

// Spectrum of the link operator S_0 as (eigenvalue, multiplicity) pairs.
// Always a finite truncation.
class LinkSpectrum {
 public:
  LinkSpectrum() = default;
  explicit LinkSpectrum(std::vector<SpectralEntry> entries, std::string label = {},
                        std::optional<int> link_dimension = std::nullopt);

  const std::vector<SpectralEntry>& entries() const { return entries_; }
  const std::string& label() const { return label_; }
  // dimension n of the link manifold when known (sphere spectra set it)
  std::optional<int> link_dimension() const { return link_dimension_; }

  bool empty() const { return entries_.empty(); }
  int total_modes() const;
  // eigenvalue of every mode row, entries expanded by multiplicity
  std::vector<double> mode_eigenvalues() const;
  // entry index of every mode row
  std::vector<int> mode_entry_index() const;
  double min_abs_eigenvalue() const;
  double max_abs_eigenvalue() const;

  bool operator==(const LinkSpectrum&) const = default;

 private:
  std::vector<SpectralEntry> entries_;
  std::string label_;
  std::optional<int> link_dimension_;
};

struct GapReport {
  bool has_gap = false;
  double nearest_to_half = 0.0;
  double min_abs_eigenvalue = 0.0;
};

GapReport check_spectral_gap(const LinkSpectrum& spec);

// Round-sphere Dirac spectrum ±(n/2 + k), multiplicity 2^{floor(n/2)} * binom(k+n-1, k).
LinkSpectrum sphere_dirac_spectrum(int n, int kmax);

struct Ac6Caps {
  double cap_right = 0.0;  // inf |(2s+1)/(4s)|, bounds sup ||S_1 S_0^{-1}||
  double cap_left = 0.0;   // inf |(2s-1)/(4s)|, bounds sup ||S_0^{-1} S_1||
};

Ac6Caps caps_ac6(const LinkSpectrum& spec);

}  // namespace conelab
