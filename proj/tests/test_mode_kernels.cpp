#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "conelab/error.hpp"
#include "conelab/mode_kernels.hpp"
#include "oracles.hpp"

using namespace conelab;

namespace {

std::vector<double> sample(const RadialGrid& g, const std::function<double(double)>& f) {
  std::vector<double> v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = f(g.nodes[i]);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0, m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    e = std::max(e, std::abs(a[i] - b[i]));
    m = std::max(m, std::abs(b[i]));
  }
  return e / m;
}

}  // namespace

TEST_SUITE("mode_kernels") {

TEST_CASE("closed forms for constant input") {
  auto g = make_grid(1.0, 2048, GridScheme::LogRefined);
  auto one = std::vector<double>(g.size(), 1.0);
  auto a = apply_P(KernelOperator(KernelKind::P0, 1.0, g), one);
  auto b = apply_P(KernelOperator(KernelKind::P1, 0.0, g), one);
  auto c = apply_P(KernelOperator(KernelKind::P1, -1.0, g), one);
  // P0 integrates the constant extension on (0, r_1] exactly, so P0 1 = r/2 holds to rounding
  CHECK(max_rel(a, sample(g, [](double r) { return r / 2; })) <= 1e-6);
  for (int i = 0; i < g.size(); ++i) {
    double r = g.nodes[i];
    CHECK(std::abs(b[i] - (r - 1)) <= 1e-6 * std::max(1.0, std::abs(r - 1)));
    CHECK(std::abs(c[i] - r * std::log(r)) <= 1e-6 * std::max(1e-3, std::abs(r * std::log(r))));
  }
}

TEST_CASE("recurrence against dense matrix and quadrature oracle") {
  auto g = make_grid(1.0, 512, GridScheme::LogRefined);
  auto w = sample(g, [](double r) { return oracle::bump(r, 0.4, 0.3) + 0.2 * r; });
  auto fine = make_grid(1.0, 4096, GridScheme::LogRefined);
  auto wf = sample(fine, [](double r) { return oracle::bump(r, 0.4, 0.3) + 0.2 * r; });
  for (double s : {-3.0, -0.7, 0.0, 0.3}) {
    KernelOperator p1(KernelKind::P1, s, g);
    Eigen::VectorXd d = dense_matrix(p1) * Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
    CHECK(max_rel(apply_P(p1, w), std::vector<double>(d.data(), d.data() + d.size())) <= 1e-9);
  }
  for (double s : {-0.3, 0.0, 1.0, 4.0}) {
    KernelOperator p0(KernelKind::P0, s, g);
    Eigen::VectorXd d = dense_matrix(p0) * Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
    auto rec = apply_P(p0, w);
    CHECK(max_rel(rec, std::vector<double>(d.data(), d.data() + d.size())) <= 1e-9);
    // continuum value by adaptive quadrature; y = r u^{1/(1+s)} removes the endpoint singularity
    auto continuum_err = [&](const RadialGrid& gr, const std::vector<double>& vals) {
      double err = 0.0, mx = 0.0;
      for (int i = 0; i < gr.size(); i += 37) {
        double r = gr.nodes[i];
        double ex = r / (1 + s) *
                    oracle::simpson([&](double u) {
                      double y = r * std::pow(u, 1 / (1 + s));
                      return oracle::bump(y, 0.4, 0.3) + 0.2 * y;
                    }, 0.0, 1.0, 1e-14);
        err = std::max(err, std::abs(vals[i] - ex));
        mx = std::max(mx, std::abs(ex));
      }
      return err / mx;
    };
    double coarse_err = continuum_err(g, rec);
    double fine_err = continuum_err(fine, apply_P(KernelOperator(KernelKind::P0, s, fine), wf));
    CAPTURE(s);
    CHECK(fine_err <= 1e-4);
    CHECK(fine_err < 0.1 * coarse_err);
  }
}

TEST_CASE("range guard") {
  auto g = make_grid(1.0, 64, GridScheme::LogRefined);
  for (double s : {-0.5, -0.8, -5.0}) CHECK_THROWS_AS(KernelOperator(KernelKind::P0, s, g), Error);
  for (double s : {0.5, 0.51, 3.0}) CHECK_THROWS_AS(KernelOperator(KernelKind::P1, s, g), Error);
  CHECK_NOTHROW(KernelOperator(KernelKind::P0, -0.49, g));
  CHECK_NOTHROW(KernelOperator(KernelKind::P1, 0.49, g));
}

TEST_CASE("ODE identity") {
  auto w = [](double r) { return oracle::bump(r, 0.45, 0.2); };
  std::vector<double> res;
  for (int N : {1024, 2048, 4096}) {
    auto g = make_grid(1.0, N, GridScheme::LogRefined);
    auto om = sample(g, w);
    double r0 = ode_residual(KernelOperator(KernelKind::P0, 1.0, g), om);
    double r1 = ode_residual(KernelOperator(KernelKind::P1, -2.0, g), om);
    if (N == 2048) {
      CHECK(r0 <= 1e-3);
      CHECK(r1 <= 1e-3);
    }
    res.push_back(r0);
  }
  CHECK(res[2] < res[0]);
  CHECK(res[1] < res[0]);
  auto g = make_grid(1.0, 2048, GridScheme::LogRefined);
  CHECK_THROWS_WITH_AS(ode_residual(KernelOperator(KernelKind::P0, 1.0, g), std::vector<double>(g.size(), 0.0)),
                       "empty input", Error);
  std::vector<double> tri(g.size(), 0.0);
  tri[1500] = 1.0;
  double r = ode_residual(KernelOperator(KernelKind::P0, 2.0, g), tri);
  CHECK(std::isfinite(r));
}

TEST_CASE("left inverse") {
  auto g = make_grid(1.0, 2048, GridScheme::LogRefined);
  auto nu = sample(g, [](double r) { return oracle::bump(r, 0.5, 0.25); });
  CHECK(inverse_residual(KernelOperator(KernelKind::P0, 2.0, g), nu) <= 1e-3);
  CHECK(inverse_residual(KernelOperator(KernelKind::P1, -2.0, g), nu) <= 1e-3);
  CHECK(inverse_residual(KernelOperator(KernelKind::P0, 2.0, g), std::vector<double>(g.size(), 0.0)) == 0.0);
  CHECK_THROWS_WITH_AS(inverse_residual(KernelOperator(KernelKind::P0, 0.3, g), nu), "left-inverse range violated",
                       Error);
  CHECK_THROWS_WITH_AS(inverse_residual(KernelOperator(KernelKind::P1, -0.2, g), nu), "left-inverse range violated",
                       Error);
}

TEST_CASE("Schur certificates") {
  auto a = schur_certificate(1.0, SchurTarget::InvRP0);
  auto b = schur_certificate(-2.0, SchurTarget::InvRP1);
  auto c = schur_certificate(2.0, SchurTarget::P0InvR);
  for (const auto& x : {a, b, c}) {
    CHECK(x.bound == doctest::Approx(2.0 / 3));
    CHECK(x.passed);
    CHECK(x.row_check_max <= x.bound * (1 + 1e-9));
    CHECK(x.col_check_max <= x.bound * (1 + 1e-9));
  }
  CHECK_THROWS_AS(schur_certificate(-1.0, SchurTarget::InvRP0), Error);
  CHECK_THROWS_AS(schur_certificate(0.2, SchurTarget::P0InvR), Error);
  CHECK(schur_target_from_string(to_string(SchurTarget::P1InvR)) == SchurTarget::P1InvR);
  CHECK_THROWS_AS(schur_target_from_string("inv_r"), Error);
}

TEST_CASE("operator norms against the Mellin values") {
  auto fine = make_grid(1.0, 4096, GridScheme::LogRefined, 1e-8);
  double n1 = operator_norm(1.0, SchurTarget::InvRP0, fine);
  CHECK(n1 >= 0.63);
  CHECK(n1 <= 2.0 / 3);
  auto coarse = make_grid(1.0, 1024, GridScheme::LogRefined, 1e-4);
  double h0 = operator_norm(0.0, SchurTarget::InvRP0, coarse);
  double h1 = operator_norm(0.0, SchurTarget::InvRP0, fine);
  CHECK(h0 < h1);
  CHECK(h1 < 2.0);
  CHECK(h1 >= 1.9);
  double big = operator_norm(200.0, SchurTarget::InvRP0, coarse);
  CHECK(big <= 1.0 / 200.5 * (1 + 1e-6));
}

TEST_CASE("iterative norm matches dense SVD") {
  auto g = make_grid(1.0, 300, GridScheme::LogRefined, 1e-5);
  for (auto [s, t] : std::vector<std::pair<double, SchurTarget>>{{1.0, SchurTarget::InvRP0},
                                                                  {200.0, SchurTarget::InvRP0},
                                                                  {-3.0, SchurTarget::P1InvR},
                                                                  {0.0, SchurTarget::InvRP0}}) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(galerkin_matrix(kernel_of(s, t), g));
    CAPTURE(s);
    CHECK(operator_norm(s, t, g) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-9));
  }
}

TEST_CASE("bound safety over random s") {
  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> U(-10, 10);
  auto g = make_grid(1.0, 256, GridScheme::LogRefined, 1e-6);
  int done = 0;
  while (done < 200) {
    double s = U(rng);
    if (std::abs(s) <= 0.6) continue;
    for (auto t : {SchurTarget::InvRP0, SchurTarget::P0InvR, SchurTarget::InvRP1, SchurTarget::P1InvR}) {
      if (!schur_admissible(s, t)) continue;
      double nrm = operator_norm(s, t, g);
      CHECK(nrm <= schur_bound(s, t) * (1 + 1e-6));
    }
    ++done;
  }
}

TEST_CASE("P0_s (1/r) = (1/r) P0_{s-1}") {
  auto g = make_grid(1.0, 512, GridScheme::LogRefined);
  for (double s : {0.8, 1.0, 2.5, 6.0}) {
    // kernels: (y/r)^s / y and (1/r) (y/r)^{s-1}
    auto k1 = kernel_of(s, SchurTarget::P0InvR);
    auto k2 = kernel_of(s - 1.0, SchurTarget::InvRP0);
    Eigen::MatrixXd G1 = galerkin_matrix(k1, g), G2 = galerkin_matrix(k2, g);
    CHECK((G1 - G2).cwiseAbs().maxCoeff() <= 1e-9 * G1.cwiseAbs().maxCoeff());
    // nodal operators agree up to the second-order interpolation error
    auto nodal = [&](const RadialGrid& gr) {
      auto w = sample(gr, [](double r) { return oracle::bump(r, 0.5, 0.3); });
      auto wr = w;
      for (int i = 0; i < gr.size(); ++i) wr[i] /= gr.nodes[i];
      auto lhs = apply_P(KernelOperator(KernelKind::P0, s, gr), wr);
      auto rhs = apply_P(KernelOperator(KernelKind::P0, s - 1.0, gr), w);
      for (int i = 0; i < gr.size(); ++i) rhs[i] /= gr.nodes[i];
      return max_rel(lhs, rhs);
    };
    double e512 = nodal(g), e4096 = nodal(make_grid(1.0, 4096, GridScheme::LogRefined));
    CAPTURE(s);
    CHECK(e4096 <= 1e-4);
    CHECK(e4096 < 0.05 * e512);
  }
}

TEST_CASE("Galerkin matrix entries against direct quadrature") {
  auto g = make_grid(1.0, 64, GridScheme::LogRefined, 1e-3);
  auto k = kernel_of(1.0, SchurTarget::InvRP0);  // r^-2 y on y < r
  Eigen::MatrixXd G = galerkin_matrix(k, g);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{10, 3}, {40, 39}, {50, 50}, {20, 0}}) {
    double a = i == 0 ? 0.0 : g.nodes[i - 1], b = g.nodes[i];
    double c = j == 0 ? 0.0 : g.nodes[j - 1], d = g.nodes[j];
    double v = oracle::simpson(
        [&](double r) {
          double hi = std::min(r, d);
          if (hi <= c) return 0.0;
          return std::pow(r, k.alpha) * (std::pow(hi, k.beta + 1) - std::pow(c, k.beta + 1)) / (k.beta + 1);
        },
        a, b, 1e-15);
    CHECK(G(i, j) == doctest::Approx(v / std::sqrt((b - a) * (d - c))).epsilon(1e-8));
  }
}

}
