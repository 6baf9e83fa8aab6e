#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wmlab/core/derivative.hpp"
#include "wmlab/core/eig.hpp"
#include "wmlab/core/field_ops.hpp"
#include "wmlab/core/fit.hpp"
#include "wmlab/core/ode.hpp"
#include "wmlab/core/quadrature.hpp"

using namespace wmlab;

TEST_CASE("grid construction invariants") {
  auto g = RadialGrid::uniform(0.0, 1.0, 10001, 7);
  REQUIRE(g->size() == 10001);
  REQUIRE(g->ymin() == 0.0);

  // measure check: integral of y^{d-1} over [0, ymax] = ymax^d / d
  auto one = RadialField::sample(g, [](double) { return 1.0; }, 0);
  double got = integrate_weighted(one, 0.0, 1.0);
  REQUIRE(std::abs(got - 1.0 / 7.0) <= 1e-10 / 7.0);

  REQUIRE_THROWS_AS(RadialGrid({1.0, 0.5, 2.0, 3.0, 4.0}, 7), contract_error);
  REQUIRE_THROWS_AS(RadialGrid::uniform(0.0, 1.0, 100, 5), contract_error);
}

TEST_CASE("weighted quadrature examples") {
  auto g = RadialGrid::uniform(0.0, 2.0, 20001, 7);
  auto zero = RadialField::sample(g, [](double) { return 0.0; }, 0);
  REQUIRE(integrate_weighted(zero, 0.0, 2.0) == 0.0);

  auto one = RadialField::sample(g, [](double) { return 1.0; }, 0);
  REQUIRE_THAT(integrate_weighted(one, 0.0, 1.0),
               Catch::Matchers::WithinRel(1.0 / 7.0, 1e-10));

  // f = y^2, d = 7 over [0,2]: 2^9 / 9
  auto f = RadialField::sample(g, [](double y) { return y * y; }, 2);
  REQUIRE_THAT(integrate_weighted(f, 0.0, 2.0),
               Catch::Matchers::WithinRel(512.0 / 9.0, 1e-10));

  REQUIRE_THROWS_AS(integrate_weighted(f, 0.0, 3.0), contract_error);
}

TEST_CASE("quadrature exactness for low-degree polynomials") {
  auto g = RadialGrid::standard(7, 100.0, 1e-2, 5.0);
  // cubic against the measure: exact up to roundoff accumulation
  auto f = RadialField::sample(g, [](double y) { return 1.0 + y * (2.0 + y * (3.0 - 0.5 * y)); }, 0);
  double a = g->ymin(), b = 100.0;
  auto mono = [&](int k) { return (std::pow(b, k + 7) - std::pow(a, k + 7)) / (k + 7); };
  double exact = mono(0) + 2.0 * mono(1) + 3.0 * mono(2) - 0.5 * mono(3);
  REQUIRE_THAT(integrate_weighted(f, a, b), Catch::Matchers::WithinRel(exact, 1e-12));
}

TEST_CASE("partial-interval integration") {
  auto g = RadialGrid::uniform(0.0, 1.0, 5001, 8);
  auto f = RadialField::sample(g, [](double y) { return std::exp(-y); }, 0);
  // compare [a,b] against cumulative difference with endpoints off the nodes
  double i1 = integrate_weighted(f, 0.1234, 0.8031);
  double i2 = integrate_weighted(f, 0.0, 0.8031) - integrate_weighted(f, 0.0, 0.1234);
  REQUIRE_THAT(i1, Catch::Matchers::WithinRel(i2, 1e-9));
}

TEST_CASE("derivative accuracy") {
  auto g = RadialGrid::uniform(0.0, 1.0, 10001, 7);
  auto f = RadialField::sample(g, [](double y) { return y * y * y; }, 3);
  auto fp = derivative(f, 1);
  double max_rel = 0.0;
  for (int i = 0; i < g->size(); ++i) {
    double y = g->y(i);
    if (y < 0.05) continue;  // relative error near zero of the derivative
    max_rel = std::max(max_rel, std::abs(fp.v[i] - 3.0 * y * y) / (3.0 * y * y));
  }
  REQUIRE(max_rel < 1e-8);

  auto c = RadialField::sample(g, [](double) { return 4.2; }, 0);
  auto cp = derivative(c, 1);
  REQUIRE(sup_abs(cp, 0.0, 1.0) < 1e-10);

  // order-2 derivative of sin converges at O(h^4) (measured where truncation
  // error dominates roundoff)
  auto sup_err2 = [](int n) {
    auto gn = RadialGrid::uniform(0.0, 1.0, n, 7);
    auto s = RadialField::sample(gn, [](double y) { return std::sin(y); }, 1);
    auto s2 = derivative(s, 2);
    double sup = 0.0;
    for (int i = 2; i < gn->size() - 2; ++i)
      sup = std::max(sup, std::abs(s2.v[i] + std::sin(gn->y(i))));
    return sup;
  };
  double e_coarse = sup_err2(26), e_fine = sup_err2(51);
  REQUIRE(e_coarse / e_fine > 12.0);  // ~16 for order 4
  REQUIRE(sup_err2(10001) < 1e-7);    // roundoff floor ~ eps/h^2

  REQUIRE_THROWS_AS(derivative(f, 3), contract_error);
}

TEST_CASE("derivative of cumulative integral recovers integrand") {
  auto g = RadialGrid::uniform(0.1, 2.0, 4001, 7);
  std::vector<double> gv(g->size());
  for (int i = 0; i < g->size(); ++i) gv[i] = std::cos(1.7 * g->y(i));
  auto C = cumulative_integral(*g, gv, 0);
  RadialField Cf(g, C, kLeadUnset);
  auto Cp = derivative(Cf, 1);
  double sup = 0.0;
  for (int i = 0; i < g->size(); ++i) sup = std::max(sup, std::abs(Cp.v[i] - gv[i]));
  REQUIRE(sup < 1e-10);
}

TEST_CASE("solve_ivp exponential and trivial cases") {
  OdeRhs rhs = [](double, const Vec& y, Vec& dy) { dy = y; };
  IvpOptions opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-13;
  auto r = solve_ivp(rhs, {1.0}, 0.0, 1.0, opt);
  REQUIRE(r.ok());
  REQUIRE_THAT(r.y_last[0], Catch::Matchers::WithinAbs(std::exp(1.0), 1e-9));

  OdeRhs zero = [](double, const Vec&, Vec& dy) { dy.assign(1, 0.0); };
  auto rz = solve_ivp(zero, {3.5}, 0.0, 10.0, opt);
  REQUIRE(rz.y_last[0] == 3.5);
}

TEST_CASE("solve_ivp harmonic oscillator energy drift") {
  OdeRhs rhs = [](double, const Vec& y, Vec& dy) {
    dy.resize(2);
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  IvpOptions opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12;
  opt.record = false;
  auto r = solve_ivp(rhs, {1.0, 0.0}, 0.0, 20.0 * kPi, opt);
  REQUIRE(r.ok());
  double E = r.y_last[0] * r.y_last[0] + r.y_last[1] * r.y_last[1];
  REQUIRE(std::abs(E - 1.0) < 1e-6);
}

TEST_CASE("solve_ivp convergence under tolerance halving") {
  OdeRhs rhs = [](double, const Vec& y, Vec& dy) { dy = y; };
  auto err_at = [&](double tol) {
    IvpOptions opt;
    opt.rel_tol = tol;
    opt.abs_tol = tol * 1e-3;
    opt.record = false;
    auto r = solve_ivp(rhs, {1.0}, 0.0, 1.0, opt);
    return std::abs(r.y_last[0] - std::exp(1.0));
  };
  // order >= 4/5: tolerance halving should reduce the global error >= 8x on
  // a geometric ladder (measure across a factor 16 in tol to be safe)
  double e1 = err_at(1e-6);
  double e2 = err_at(1e-6 / 16.0);
  REQUIRE(e2 * 8.0 <= e1 + 1e-15);
}

TEST_CASE("solve_ivp event detection") {
  OdeRhs rhs = [](double, const Vec& y, Vec& dy) { dy = y; };
  IvpOptions opt;
  opt.stop = [](double, const Vec& y) { return y[0] >= 2.0; };
  auto r = solve_ivp(rhs, {1.0}, 0.0, 5.0, opt);
  REQUIRE(r.status == IvpStatus::event);
  REQUIRE_THAT(r.t_last, Catch::Matchers::WithinAbs(std::log(2.0), 1e-7));
}

TEST_CASE("eig_small trivial and diagonal spectra") {
  Mat I3 = mat_identity(3);
  auto e = eig_small(I3);
  for (double v : e.values) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(1.0, 1e-12));

  Mat D(3);
  D(0, 0) = -1.0;
  D(1, 1) = 4.0;
  D(2, 2) = 6.0;
  auto ed = eig_small(D);
  REQUIRE_THAT(ed.values[0], Catch::Matchers::WithinAbs(-1.0, 1e-12));
  REQUIRE_THAT(ed.values[1], Catch::Matchers::WithinAbs(4.0, 1e-12));
  REQUIRE_THAT(ed.values[2], Catch::Matchers::WithinAbs(6.0, 1e-12));
}

TEST_CASE("eig_small companion matrix of (x-1)(x-2)(x-3)") {
  // x^3 - 6x^2 + 11x - 6
  Mat C(3);
  C(0, 0) = 6.0;
  C(0, 1) = -11.0;
  C(0, 2) = 6.0;
  C(1, 0) = 1.0;
  C(2, 1) = 1.0;
  auto e = eig_small(C);
  REQUIRE_THAT(e.values[0], Catch::Matchers::WithinAbs(1.0, 1e-9));
  REQUIRE_THAT(e.values[1], Catch::Matchers::WithinAbs(2.0, 1e-9));
  REQUIRE_THAT(e.values[2], Catch::Matchers::WithinAbs(3.0, 1e-9));
  // residual bound |Av - lambda v| <= 1e-10 |A| |v|
  for (int j = 0; j < 3; ++j) {
    Vec Av = mat_vec(C, e.vectors[j]);
    for (int i = 0; i < 3; ++i)
      REQUIRE(std::abs(Av[i] - e.values[j] * e.vectors[j][i]) <= 1e-10 * mat_norm(C));
  }
}

TEST_CASE("eig_small random real-spectrum matrices via similarity") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 4 + trial;
    Mat D(n), S(n);
    std::vector<double> expect(n);
    for (int i = 0; i < n; ++i) {
      expect[i] = -3.0 + 1.5 * i + 0.1 * u(rng);
      D(i, i) = expect[i];
      for (int j = 0; j < n; ++j) S(i, j) = u(rng) + (i == j ? 3.0 : 0.0);
    }
    Mat A = mat_mul(mat_mul(S, D), mat_inverse(S));
    auto e = eig_small(A);
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < n; ++i)
      REQUIRE_THAT(e.values[i], Catch::Matchers::WithinAbs(expect[i], 1e-8));
  }
}

TEST_CASE("eig_small rejects oversized input") {
  REQUIRE_THROWS_AS(eig_small(Mat(11)), contract_error);
}

TEST_CASE("fit helpers") {
  std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  auto f = fit_line(x, y);
  REQUIRE_THAT(f.slope, Catch::Matchers::WithinAbs(2.0, 1e-12));
  REQUIRE_THAT(f.intercept, Catch::Matchers::WithinAbs(1.0, 1e-12));

  // Aitken on t_k = T - A r^k
  double T = 4.2, A = 1.0, r = 0.25;
  double t0 = T - A, t1 = T - A * r, t2 = T - A * r * r;
  REQUIRE_THAT(aitken_limit(t0, t1, t2), Catch::Matchers::WithinAbs(T, 1e-12));
}
