#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "conelab/error.hpp"
#include "conelab/geometry.hpp"

using namespace conelab;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) r[i] = a + (b - a) * i / double(n - 1);
  return r;
}

double max_abs_dev(const std::vector<double>& v, double target) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - target));
  return m;
}

LambdaFunction lam(LambdaKind k, double a, double p = 2.0) {
  LambdaFunction l;
  l.kind = k;
  l.a = a;
  l.p = p;
  return l;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("round suspension has constant curvature n(n+1)") {
  auto r = linspace(0.05, kPi - 0.05, 200);
  for (int n : {2, 3, 5}) {
    auto p = suspension_scal(n, n * (n - 1.0), WarpFunction::sin(), r);
    CHECK(max_abs_dev(p.scal, n * (n + 1.0)) <= 1e-9);
  }
}

TEST_CASE("product and flat cone warps") {
  auto r = linspace(0.1, 3.0, 50);
  auto prod = suspension_scal(3, 4.5, WarpFunction::constant(), r);
  CHECK(max_abs_dev(prod.scal, 4.5) <= 1e-12);
  auto flat = suspension_scal(4, 12.0, WarpFunction::linear(), r);
  CHECK(max_abs_dev(flat.scal, 0.0) <= 1e-9);
  CHECK(flat.limit_estimate);
  CHECK(std::abs(*flat.limit_estimate) <= 1e-9);
  // r^2 scal of the cone over a non-round link tends to scal_g - n(n-1)
  auto cone = suspension_scal(3, 2.0, WarpFunction::linear(), r);
  CHECK(std::abs(*cone.limit_estimate - (2.0 - 6.0)) <= 1e-9);
}

TEST_CASE("vanishing warp is an error") {
  CHECK_THROWS_WITH_AS(suspension_scal(3, 6.0, WarpFunction::linear(), {0.5, 0.0}),
                       doctest::Contains("warp function vanishes at r = 0"), Error);
  CHECK_THROWS_AS(suspension_scal(0, 0.0, WarpFunction::sin(), {0.5}), Error);
}

TEST_CASE("custom warp samples") {
  auto r = linspace(0.5, 2.5, 201);
  std::vector<double> rho;
  for (double x : r) rho.push_back(std::sin(x));
  auto p = suspension_scal(3, 6.0, WarpFunction::custom(r, rho), {});
  CHECK(p.r.size() == r.size());
  CHECK(!p.limit_estimate);
  CHECK(max_abs_dev(p.scal, 12.0) <= 1e-4);
  CHECK_THROWS_AS(WarpFunction::custom({0, 1, 2}, {1, 1, 1}), Error);
  CHECK_THROWS_AS(WarpFunction::custom(linspace(0, 1, 8), std::vector<double>(7, 1.0)), Error);
  auto bad = linspace(0, 1, 8);
  bad[3] += 0.01;
  CHECK_THROWS_AS(WarpFunction::custom(bad, std::vector<double>(8, 1.0)), Error);
}

TEST_CASE("density rescaling identity") {
  RadialGrid g = make_interval_grid(0.2, 2.9, 2001);
  for (int n : {2, 3, 5})
    for (double s : {-1.5, 0.5, 2.0}) {
      auto dc = density_rescale_check(n, s, g);
      CAPTURE(n);
      CAPTURE(s);
      CHECK(dc.residual <= 1e-6);
    }
  auto dc = density_rescale_check(3, 1.5, g, ProbeKind::Constant);
  CHECK(dc.residual <= 1e-6);
  CHECK_THROWS_AS(density_rescale_check(3, 1.0, make_interval_grid(0.1, 3.2, 100)), Error);
  CHECK_THROWS_AS(density_rescale_check(3, 1.0, make_interval_grid(0.1, 3.0, 10)), Error);
}

TEST_CASE("uniform differences are fourth order") {
  auto run = [](int n) {
    auto r = linspace(0.0, 1.0, n);
    std::vector<double> f;
    for (double x : r) f.push_back(std::exp(2 * x));
    double h = r[1] - r[0];
    auto d1 = uniform_d1(f, h), d2 = uniform_d2(f, h);
    double e1 = 0, e2 = 0;
    for (int i = 0; i < n; ++i) {
      e1 = std::max(e1, std::abs(d1[i] - 2 * f[i]));
      e2 = std::max(e2, std::abs(d2[i] - 4 * f[i]));
    }
    return std::pair{e1, e2};
  };
  auto [a1, a2] = run(41);
  auto [b1, b2] = run(81);
  CHECK(a1 / b1 > 10.0);
  CHECK(a2 / b2 > 6.0);
  CHECK(b1 <= 1e-5);
  CHECK_THROWS_AS(uniform_d1({1, 2, 3, 4}, 0.1), Error);
  CHECK_THROWS_AS(uniform_d2({1, 2, 3, 4, 5}, 0.1), Error);
}

TEST_CASE("exact cone curvature") {
  for (int n : {2, 3, 4}) {
    WarpedMetricFamily fam;
    fam.n = n;
    fam.scal_link = 2.5;
    auto r = linspace(0.01, 1.0, 40);
    auto p = generalized_cone_scal(fam, r);
    CHECK(max_abs_dev(p.r2_scal, 2.5 - n * (n - 1.0)) <= 1e-9);
    CHECK(std::abs(*p.limit_estimate - (2.5 - n * (n - 1.0))) <= 1e-9);
  }
}

TEST_CASE("quadratic family limit") {
  WarpedMetricFamily fam;
  fam.n = 3;
  fam.scal_link = 6.0;
  fam.lambdas.assign(3, lam(LambdaKind::Quadratic, 0.7));
  auto p = generalized_cone_scal(fam, {0.1, 0.2});
  CHECK(std::abs(*p.limit_estimate - 0.0) <= 1e-4);
  fam.scal_link = 4.0;
  p = generalized_cone_scal(fam, {0.1});
  CHECK(std::abs(*p.limit_estimate - (-2.0)) <= 1e-4);
}

TEST_CASE("coordinate Christoffel cross-check") {
  WarpedMetricFamily fam;
  fam.n = 2;
  fam.lambdas = {lam(LambdaKind::Quadratic, 0.3), lam(LambdaKind::Power, 0.2, 3.0)};
  for (double r : {0.3, 0.7, 1.2}) {
    double a = generalized_cone_scal_at(fam, r);
    double b = christoffel_scal(flat_patch_metric(fam), r, 1e-3);
    CAPTURE(r);
    CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
  }
  // exact cone over the flat 3-torus: scal = -n(n-1)/r^2
  WarpedMetricFamily flat;
  flat.n = 3;
  CHECK(std::abs(christoffel_scal(flat_patch_metric(flat), 0.5, 1e-3) + 24.0) <= 1e-6);
}

TEST_CASE("isotropic family against the warped-product formula") {
  // g = dr^2 + (r sqrt(lambda))^2 g_link
  WarpedMetricFamily fam;
  fam.n = 3;
  fam.scal_link = 6.0;
  fam.lambdas.assign(3, lam(LambdaKind::Power, 0.4, 2.5));
  for (double r : {0.2, 0.5}) {
    double l = fam.lambdas[0].value(r), l1 = fam.lambdas[0].d1(r), l2 = fam.lambdas[0].d2(r);
    double rho = r * std::sqrt(l);
    double d1 = std::sqrt(l) + r * l1 / (2 * std::sqrt(l));
    double d2 = l1 / std::sqrt(l) - r * l1 * l1 / (4 * l * std::sqrt(l)) + r * l2 / (2 * std::sqrt(l));
    double expect = 6.0 / (rho * rho) - 3.0 * (2.0 * d1 * d1 + 2.0 * rho * d2) / (rho * rho);
    CHECK(std::abs(generalized_cone_scal_at(fam, r) - expect) <= 1e-9 * std::abs(expect));
  }
}

TEST_CASE("admissibility failures") {
  WarpedMetricFamily fam;
  fam.n = 2;
  fam.lambdas.assign(2, lam(LambdaKind::SinLog, 0.1));
  auto rep = cone_admissibility(fam);
  CHECK(!rep.ok);
  CHECK_THROWS_WITH_AS(generalized_cone_scal(fam, {0.1}), doctest::Contains("admissibility"), Error);
  fam.lambdas.assign(2, lam(LambdaKind::RLog, 0.1));
  CHECK(cone_admissibility(fam).ok);

  WarpedMetricFamily aniso;
  aniso.n = 2;
  aniso.scal_link = 1.0;
  aniso.lambdas = {lam(LambdaKind::Quadratic, 0.3), lam(LambdaKind::Quadratic, 0.1)};
  CHECK_THROWS_WITH_AS(generalized_cone_scal_at(aniso, 0.2), doctest::Contains("anisotropic"), Error);
  aniso.lambdas.pop_back();
  CHECK_THROWS_AS(generalized_cone_scal_at(aniso, 0.2), Error);
}

TEST_CASE("nonnegative curvature near the tip needs scal_link >= n(n-1)") {
  for (int n : {2, 3, 5}) {
    WarpedMetricFamily fam;
    fam.n = n;
    fam.lambdas.assign(n, lam(LambdaKind::Quadratic, 0.5));
    fam.scal_link = n * (n - 1.0) + 0.25;
    CHECK(*generalized_cone_scal(fam, {0.1}).limit_estimate >= 0.0);
    fam.scal_link = n * (n - 1.0) - 0.25;
    CHECK(*generalized_cone_scal(fam, {0.1}).limit_estimate < 0.0);
  }
}

TEST_CASE("suspension mode reduction") {
  auto sph = sphere_dirac_spectrum(3, 20);
  auto spec = mode_reduce_suspension(sph, 0.0, 0.0, 0.1);
  auto rep = validate_spec(spec);
  CHECK(rep.valid);
  CHECK(spec.cone_theta == 0.1);
  CHECK(spec.perturbation.coupling.kind == CouplingKind::None);
  // sup of r (1/sin r - 1/r) over (0, theta] is attained at theta
  CHECK(std::abs(rep.sup_right - 0.00166861316347766487) <= 1e-12);
  CHECK(std::abs(spec.perturbation.diag.value(1.5, 0.1) / 0.1 - 0.0166861316347766487) <= 1e-12);
  CHECK(std::abs(spec.perturbation.diag.value(-7.5, 1e-4) / 1e-4 - 1.66666666861e-5) <= 1e-15);

  auto coupled = mode_reduce_suspension(sph, 1.0, 0.2, 1.0);
  CHECK(validate_spec(coupled).valid);
  CHECK(coupled.cone_theta <= 1.0);
  CHECK(coupled.perturbation.coupling.amplitude == doctest::Approx(3 * 0.2));
  auto big = mode_reduce_suspension(sph, 2.0, 0.5, 2.0);
  CHECK(big.perturbation.coupling.amplitude == doctest::Approx(3 * 2.0 * 0.5));
  CHECK(validate_spec(big).valid);
  CHECK(big.cone_theta < 2.0);
}

TEST_CASE("mode reduction meets the caps on random gapped links") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(0.6, 5.0), L(0.0, 3.0), W(0.0, 1.0), T(0.2, 3.0);
  std::uniform_int_distribution<int> cnt(1, 6), mult(1, 4), dim(2, 5);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> vals;
    int k = cnt(rng);
    for (int i = 0; i < k; ++i) vals.push_back((rng() & 1 ? 1 : -1) * mag(rng));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<SpectralEntry> es;
    for (double v : vals) es.push_back({v, mult(rng)});
    LinkSpectrum link(es, "random", dim(rng));
    double theta = T(rng);
    auto spec = mode_reduce_suspension(link, L(rng), W(rng), theta);
    auto rep = validate_spec(spec);
    CAPTURE(trial);
    CHECK(rep.valid);
    CHECK(rep.sup_right <= rep.caps.cap_right);
    CHECK(rep.sup_left <= rep.caps.cap_left);
    CHECK(spec.cone_theta <= theta);
  }
}

TEST_CASE("mode reduction errors") {
  LinkSpectrum nogap({{-0.3, 1}, {1.0, 1}}, "nogap", 3);
  CHECK_THROWS_WITH_AS(mode_reduce_suspension(nogap, 1, 1), doctest::Contains("no spectral gap"), Error);
  LinkSpectrum nodim({{-1.5, 2}, {1.5, 2}}, "nodim");
  CHECK_THROWS_WITH_AS(mode_reduce_suspension(nodim, 1, 1), doctest::Contains("link dimension unknown"), Error);
  auto sph = sphere_dirac_spectrum(2, 3);
  CHECK_THROWS_AS(mode_reduce_suspension(sph, -1, 1), Error);
  CHECK_THROWS_AS(mode_reduce_suspension(sph, 1, -1), Error);
  CHECK_THROWS_AS(mode_reduce_suspension(sph, 1, 1, kPi), Error);
  CHECK_THROWS_AS(mode_reduce_suspension(sph, 1, 1, 0.0), Error);
}

TEST_CASE("kind names round trip") {
  for (auto k : {WarpKind::Sin, WarpKind::Linear, WarpKind::Constant, WarpKind::Custom})
    CHECK(warp_kind_from_string(to_string(k)) == k);
  for (auto k : {LambdaKind::One, LambdaKind::Quadratic, LambdaKind::Power, LambdaKind::SinLog, LambdaKind::RLog})
    CHECK(lambda_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(warp_kind_from_string("cosh"), Error);
  CHECK_THROWS_AS(lambda_kind_from_string("cubic"), Error);
}

}  // TEST_SUITE
