#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "conelab/error.hpp"
#include "conelab/grid.hpp"

using namespace conelab;

namespace {

double max_abs_err(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("make_grid examples") {
  auto u = make_grid(1.0, 16, GridScheme::Uniform, 1e-12);
  CHECK(std::accumulate(u.weights.begin(), u.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  double du = u.nodes[1] - u.nodes[0];
  for (int i = 1; i < 15; ++i) CHECK(u.nodes[i + 1] - u.nodes[i] == doctest::Approx(du));

  auto g = make_grid(0.5, 64, GridScheme::LogRefined, 1e-6);
  CHECK(g.nodes.front() == 1e-6);
  CHECK(g.nodes.back() == 0.5);
  double q = g.nodes[1] / g.nodes[0];
  for (int i = 1; i < 31; ++i) CHECK(g.nodes[i + 1] / g.nodes[i] == doctest::Approx(q).epsilon(1e-12));

  auto h = make_grid(1.0, 1024, GridScheme::LogRefined);
  std::vector<double> r = h.nodes;
  CHECK(std::abs(h.integrate(r) - 0.5) <= 1e-6);
}

TEST_CASE("weights sum to theta and nodes increase") {
  for (double theta : {1.0, 0.7, 0.164}) {
    for (auto sc : {GridScheme::Uniform, GridScheme::LogRefined}) {
      auto g = make_grid(theta, 512, sc);
      double s = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
      CHECK(std::abs(s - theta) <= 1e-10 * theta);
      for (int i = 1; i < g.size(); ++i) CHECK(g.nodes[i] > g.nodes[i - 1]);
      for (double w : g.weights) CHECK(w > 0.0);
      CHECK(g.r_min == doctest::Approx(1e-6 * theta));
    }
  }
}

TEST_CASE("degree one exactness on uniform grids") {
  for (int N : {1024, 4096}) {
    auto g = make_grid(1.0, N, GridScheme::Uniform, 1e-9);
    std::vector<double> f(N);
    for (int i = 0; i < N; ++i) f[i] = 3.0 - 2.0 * g.nodes[i];
    // exact: int_0^1 (3 - 2r) dr = 2, first cell extended by the constant f(r_1)
    double exact = 2.0 + g.nodes[0] * (3.0 - 2.0 * g.nodes[0]) - (3.0 * g.nodes[0] - g.nodes[0] * g.nodes[0]);
    CHECK(std::abs(g.integrate(f) - exact) <= 1e-8 * exact);
  }
}

TEST_CASE("invalid grids") {
  CHECK_THROWS_AS(make_grid(1.5, 64, GridScheme::Uniform), Error);
  CHECK_THROWS_AS(make_grid(1.0, 8, GridScheme::Uniform), Error);
  CHECK_THROWS_AS(make_grid(1.0, 64, GridScheme::Uniform, 2.0), Error);
  CHECK_THROWS_AS(make_grid(1.0, 64, GridScheme::TwoEnded), Error);
  CHECK_THROWS_AS(make_two_ended_grid(3.0, 64, 1.0), Error);
}

TEST_CASE("derivative stencil") {
  auto g = make_grid(1.0, 2048, GridScheme::LogRefined);
  std::vector<double> f(g.size()), df(g.size());
  for (int i = 0; i < g.size(); ++i) {
    f[i] = std::sin(3 * g.nodes[i]);
    df[i] = 3 * std::cos(3 * g.nodes[i]);
  }
  CHECK(max_abs_err(derivative(g, f), df) <= 1e-7);
  // quartics are differentiated exactly
  auto u = make_grid(1.0, 256, GridScheme::Uniform, 1e-3);
  std::vector<double> p(u.size()), dp(u.size());
  for (int i = 0; i < u.size(); ++i) {
    double r = u.nodes[i];
    p[i] = 1 - r + 2 * r * r - r * r * r + 0.5 * r * r * r * r;
    dp[i] = -1 + 4 * r - 3 * r * r + 2 * r * r * r;
  }
  CHECK(max_abs_err(derivative(u, p), dp) <= 1e-9);
  auto two = make_two_ended_grid(3.14159, 512, 1e-3);
  std::vector<double> c(two.size(), 2.5);
  CHECK(max_abs_err(derivative(two, c), std::vector<double>(two.size(), 0.0)) <= 1e-7);
}

TEST_CASE("cutoff invariants") {
  auto g = make_grid(1.0, 4096, GridScheme::LogRefined, 1e-14);
  for (double eps : {0.5, 0.25, 0.1}) {
    auto c = make_cutoff(eps, g);
    CHECK(c.delta == doctest::Approx(std::min(std::exp(-kCutoffC1 / eps), 0.125)));
    double sup = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      double r = g.nodes[i];
      CHECK(c.tau[i] >= 0.0);
      CHECK(c.tau[i] <= 1.0);
      if (r <= c.delta * eps) CHECK(c.tau[i] == 1.0);
      if (r >= eps) CHECK(c.tau[i] == 0.0);
      sup = std::max(sup, std::abs(r * c.dtau[i]));
    }
    CHECK(sup <= eps);
    CHECK(c.ramp.value(eps) == 0.0);
    CHECK(c.ramp.log_slope() <= eps);
  }
  CHECK_THROWS_AS(make_cutoff(1.0, g), Error);
  CHECK_THROWS_AS(make_cutoff(0.0, g), Error);
}

TEST_CASE("smooth step") {
  CHECK(smooth_step(0.0) == 0.0);
  CHECK(smooth_step(1.0) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5));
  double mx = 0.0;
  for (int i = 1; i < 100000; ++i) mx = std::max(mx, smooth_step_derivative(i / 100000.0));
  CHECK(mx == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(mx <= kCutoffC1);
  // derivative against a centered difference
  for (double x : {0.1, 0.3, 0.77}) {
    double h = 1e-5;
    CHECK(smooth_step_derivative(x) == doctest::Approx((smooth_step(x + h) - smooth_step(x - h)) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("mode sections") {
  auto g = share(make_grid(1.0, 1024, GridScheme::LogRefined));
  auto sp = std::make_shared<const LinkSpectrum>(sphere_dirac_spectrum(3, 1));
  auto z = mode_section_from([](double, double) { return std::complex<double>(0.0); }, g, sp);
  CHECK(z.l2_norm() == 0.0);
  CHECK(z.modes() == 16);
  auto one = mode_section_from(
      IndexedModeProfile([](int m, double, double r) { return m == 3 ? poly_bump(r, 0.4, 0.2) : 0.0; }), g, sp);
  std::vector<double> b2(g->size());
  for (int i = 0; i < g->size(); ++i) b2[i] = std::pow(poly_bump(g->nodes[i], 0.4, 0.2), 2);
  CHECK(one.l2_norm() == doctest::Approx(std::sqrt(g->integrate(b2))).epsilon(1e-12));
  auto cut = make_cutoff(0.5, *g);
  auto t = mode_section_from(
      IndexedModeProfile([&](int m, double s, double r) { return s == 2.5 && m >= 0 ? cut.ramp.value(r) : 0.0; }),
      g, sp);
  for (int i = 0; i < g->size(); ++i)
    if (g->nodes[i] > 0.5)
      for (int m = 0; m < t.modes(); ++m) CHECK(t.coeffs()(m, i) == 0.0);
}

TEST_CASE("norm invariant under mode permutation") {
  auto g = share(make_grid(1.0, 512, GridScheme::LogRefined));
  auto sp = std::make_shared<const LinkSpectrum>(sphere_dirac_spectrum(3, 2));
  auto u = random_smooth_section(g, sp, 1e-3, 0.9, 7);
  auto v = u.zeros_like();
  std::vector<int> perm(u.modes());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int m = 0; m < u.modes(); ++m) v.coeffs().row(m) = u.coeffs().row(perm[m]);
  CHECK(v.l2_norm() == doctest::Approx(u.l2_norm()).epsilon(1e-14));
  CHECK(u.l2_norm() > 0.0);
}

TEST_CASE("random sections respect their support") {
  auto g = share(make_grid(1.0, 1024, GridScheme::LogRefined));
  auto sp = std::make_shared<const LinkSpectrum>(sphere_dirac_spectrum(2, 1));
  auto u = random_smooth_section(g, sp, 0.1, 0.6, 11);
  auto w = random_log_section(g, sp, 1e-4, 1e-2, 11);
  for (int i = 0; i < g->size(); ++i) {
    double r = g->nodes[i];
    for (int m = 0; m < u.modes(); ++m) {
      if (r < 0.1 || r > 0.6) CHECK(u.coeffs()(m, i) == 0.0);
      if (r < 1e-4 || r > 1e-2) CHECK(w.coeffs()(m, i) == 0.0);
    }
  }
  CHECK(w.l2_norm() > 0.0);
  auto again = random_smooth_section(g, sp, 0.1, 0.6, 11);
  CHECK(again.coeffs() == u.coeffs());
}

}
