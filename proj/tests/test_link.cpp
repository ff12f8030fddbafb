#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "conelab/error.hpp"
#include "conelab/link.hpp"

using namespace conelab;

TEST_SUITE("link") {

TEST_CASE("gap examples") {
  auto a = check_spectral_gap(LinkSpectrum({{-3, 1}, {2, 1}}));
  CHECK(a.has_gap);
  CHECK(a.min_abs_eigenvalue == 2.0);
  CHECK(a.nearest_to_half == doctest::Approx(1.5));
  CHECK_FALSE(check_spectral_gap(LinkSpectrum({{0.4, 1}, {2, 1}})).has_gap);
  CHECK_FALSE(check_spectral_gap(LinkSpectrum({{-0.5, 1}, {2, 1}})).has_gap);
  auto s = check_spectral_gap(sphere_dirac_spectrum(3, 0));
  CHECK(s.has_gap);
  CHECK(s.min_abs_eigenvalue == 1.5);
  CHECK_THROWS_WITH_AS(check_spectral_gap(LinkSpectrum()), "empty link spectrum", Error);
}

TEST_CASE("entries must increase") {
  CHECK_THROWS_AS(LinkSpectrum({{2, 1}, {-3, 1}}), Error);
  CHECK_THROWS_AS(LinkSpectrum({{2, 1}, {2, 1}}), Error);
  CHECK_THROWS_AS(LinkSpectrum({{2, 0}}), Error);
}

TEST_CASE("sphere spectrum examples") {
  auto s = sphere_dirac_spectrum(3, 1);
  REQUIRE(s.entries().size() == 4);
  std::vector<std::pair<double, int>> want = {{-2.5, 6}, {-1.5, 2}, {1.5, 2}, {2.5, 6}};
  for (int i = 0; i < 4; ++i) {
    CHECK(s.entries()[i].s == want[i].first);
    CHECK(s.entries()[i].m == want[i].second);
  }
  auto t = sphere_dirac_spectrum(2, 0);
  REQUIRE(t.entries().size() == 2);
  CHECK(t.entries()[0].s == -1.0);
  CHECK(t.entries()[1].m == 2);
  CHECK(s.link_dimension() == 3);
}

// Independent multiplicity counts per sign:
// S^1 (bounding spin structure): eigenvalues k + 1/2, one each.
// S^2: spin-weight 1/2 harmonics of total spin j = k + 1/2 give 2j + 1 = 2k + 2.
// S^3 = SU(2): the eigenspace is the (k/2, (k+1)/2) rep of SU(2) x SU(2), dim (k+1)(k+2).
TEST_CASE("sphere multiplicities against representation dimensions") {
  for (int k = 0; k <= 6; ++k) {
    auto s1 = sphere_dirac_spectrum(1, k), s2 = sphere_dirac_spectrum(2, k), s3 = sphere_dirac_spectrum(3, k);
    CHECK(s1.entries().back().m == 1);
    CHECK(s2.entries().back().m == 2 * k + 2);
    CHECK(s3.entries().back().m == (k + 1) * (k + 2));
    CHECK(s3.entries().back().s == 1.5 + k);
    CHECK(s3.entries().front().m == s3.entries().back().m);
  }
}

TEST_CASE("Friedrich bound attained") {
  for (int n = 2; n <= 9; ++n) {
    auto s = sphere_dirac_spectrum(n, 4);
    double lam2 = s.min_abs_eigenvalue() * s.min_abs_eigenvalue();
    double scal = n * (n - 1.0);
    CHECK(s.min_abs_eigenvalue() == n / 2.0);
    CHECK(lam2 == doctest::Approx(n * scal / (4 * (n - 1.0))));
    CHECK(check_spectral_gap(s).has_gap);
  }
}

TEST_CASE("perturbation caps") {
  auto c = caps_ac6(LinkSpectrum({{-1, 1}, {1, 1}}));
  CHECK(c.cap_right == doctest::Approx(0.25));
  CHECK(c.cap_left == doctest::Approx(0.25));
  auto big = caps_ac6(LinkSpectrum({{1e8, 1}}));
  CHECK(big.cap_right == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(big.cap_left == doctest::Approx(0.5).epsilon(1e-7));
  auto sph = sphere_dirac_spectrum(3, 10);
  auto cs = caps_ac6(sph);
  // brute force over the listed spectrum
  double br = 1e300, bl = 1e300;
  for (const auto& e : sph.entries()) {
    br = std::min(br, std::abs((2 * e.s + 1) / (4 * e.s)));
    bl = std::min(bl, std::abs((2 * e.s - 1) / (4 * e.s)));
  }
  CHECK(cs.cap_right == doctest::Approx(br));
  CHECK(cs.cap_left == doctest::Approx(bl));
  CHECK(cs.cap_left == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(caps_ac6(LinkSpectrum({{0.3, 1}, {2, 1}})), Error);
}

TEST_CASE("gap monotone under removal and caps in (0, 1)") {
  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> U(-8, 8);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s;
    for (int k = 0; k < 6; ++k) s.push_back(U(rng));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    std::vector<SpectralEntry> e;
    for (double x : s) e.push_back({x, 1 + int(rng() % 3)});
    LinkSpectrum full(e);
    bool gap = check_spectral_gap(full).has_gap;
    if (gap) {
      auto c = caps_ac6(full);
      CHECK(c.cap_right > 0.0);
      CHECK(c.cap_right < 1.0);
      CHECK(c.cap_left > 0.0);
      CHECK(c.cap_left < 1.0);
      // a cap exceeds 1/2 only when the spectrum has one sign
      CHECK(std::min(c.cap_right, c.cap_left) <= 0.5);
      bool both = s.front() < 0 && s.back() > 0;
      if (both) CHECK(std::max(c.cap_right, c.cap_left) <= 0.5);
    }
    auto sub = e;
    sub.erase(sub.begin() + rng() % sub.size());
    if (gap && !sub.empty()) CHECK(check_spectral_gap(LinkSpectrum(sub)).has_gap);
  }
}

}
