#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wmlab/core/derivative.hpp"
#include "wmlab/core/field_ops.hpp"
#include "wmlab/ground_state.hpp"

using namespace wmlab;

TEST_CASE("structural constants exact evaluation") {
  auto s7 = structural_constants(7);
  REQUIRE_THAT(s7.gamma, Catch::Matchers::WithinAbs(2.0, 1e-14));
  REQUIRE_THAT(s7.gamma_tilde, Catch::Matchers::WithinAbs(1.0, 1e-14));
  REQUIRE(s7.hbar == 1);
  REQUIRE_THAT(s7.delta, Catch::Matchers::WithinAbs(0.5, 1e-14));

  auto s8 = structural_constants(8);
  REQUIRE_THAT(s8.gamma_tilde, Catch::Matchers::WithinAbs(std::sqrt(8.0), 1e-14));
  REQUIRE_THAT(s8.gamma, Catch::Matchers::WithinAbs((6.0 - std::sqrt(8.0)) / 2.0, 1e-14));
  REQUIRE(s8.hbar == 2);
  REQUIRE_THAT(s8.delta, Catch::Matchers::WithinAbs(4.0 - (6.0 - std::sqrt(8.0)) / 2.0 - 2.0, 1e-12));

  auto s9 = structural_constants(9);
  REQUIRE_THAT(s9.gamma, Catch::Matchers::WithinAbs(1.438447, 1e-6));
  REQUIRE(s9.hbar == 3);
  REQUIRE_THAT(s9.delta, Catch::Matchers::WithinAbs(0.061553, 1e-6));

  REQUIRE_THROWS_AS(structural_constants(6), contract_error);
}

TEST_CASE("structural identity 2*gamma + 2*hbar + 2*delta = d") {
  for (int d = 7; d <= 12; ++d) {
    auto s = structural_constants(d);
    REQUIRE(s.gamma > 1.0);
    REQUIRE(s.gamma <= 2.0);
    REQUIRE(s.delta > 0.0);
    REQUIRE(s.delta < 1.0);
    REQUIRE_THAT(2.0 * s.gamma + 2.0 * s.hbar + 2.0 * s.delta,
                 Catch::Matchers::WithinAbs(static_cast<double>(d), 1e-12));
  }
}

namespace {
const GroundState& gs7() {
  static GroundState gs = solve_ground_state(7);
  return gs;
}
}  // namespace

TEST_CASE("ground state d=7 tail exponent and small-y behavior") {
  const auto& gs = gs7();
  // log-log slope of pi/2 - Q on [50, 500] equals -gamma within 1%
  int n = gs.grid->size();
  RadialField tail(gs.grid, std::vector<double>(n), 0);
  for (int i = 0; i < n; ++i) tail.v[i] = kPi / 2.0 - gs.Q.v[i];
  auto fit = loglog_slope(tail, 50.0, 500.0);
  REQUIRE(std::abs(fit.slope + gs.gamma) < 0.01 * gs.gamma);

  // Q(y)/y -> 1 as y -> 0
  REQUIRE(std::abs(gs.Q.v[0] / gs.grid->y(0) - 1.0) < 1e-6);

  REQUIRE(gs.a0 > 0.0);
}

TEST_CASE("ground state d=8 fitted tail exponent") {
  auto gs = solve_ground_state(8);
  REQUIRE(std::abs(gs.tail_slope_Q + gs.gamma) < 0.01 * gs.gamma);
}

TEST_CASE("LamQ positivity and tail") {
  const auto& gs = gs7();
  for (int i = 0; i < gs.grid->size(); ++i) REQUIRE(gs.LamQ.v[i] > 0.0);
  auto fit = loglog_slope(gs.LamQ, 50.0, 500.0);
  REQUIRE(std::abs(fit.slope + gs.gamma) < 0.01 * gs.gamma);
  // a0 from Q-tail and LamQ-tail agree within 2%
  REQUIRE(std::abs(gs.a0 - gs.a0_from_LamQ) < 0.02 * gs.a0);
}

TEST_CASE("derived fields V and Z") {
  const auto& gs = gs7();
  const auto& g = *gs.grid;
  // V(0+) = 1, V(infty) -> -gamma (check V(100) in [-2.05, -1.95] for d=7)
  REQUIRE(std::abs(gs.V.v[0] - 1.0) < 1e-4);
  double v100 = eval_field(gs.V, 100.0);
  REQUIRE(v100 > -2.05);
  REQUIRE(v100 < -1.95);

  // Z(0) = d-1, Z(infty) -> -(d-1)
  REQUIRE(std::abs(gs.Z.v[0] - 6.0) < 1e-4);
  REQUIRE(std::abs(gs.Z.v[g.size() - 1] + 6.0) < 1e-2);

  // Z == V^2 + Lambda V + (d-2) V on [0.1, ymax/2] to 1e-6
  auto lamV = lam_field(gs.V);
  double sup = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    double y = g.y(i);
    if (y < 0.1 || y > g.ymax() / 2.0) continue;
    double z = gs.V.v[i] * gs.V.v[i] + lamV.v[i] + (gs.d - 2.0) * gs.V.v[i];
    sup = std::max(sup, std::abs(z - gs.Z.v[i]));
  }
  REQUIRE(sup <= 1e-6);
}

TEST_CASE("grid refinement moves a0 by less than 0.1%") {
  const auto& gs = gs7();
  auto fine = solve_ground_state(7, 1e3, 1e-10, 5e-4);
  REQUIRE(std::abs(fine.a0 - gs.a0) < 1e-3 * gs.a0);
}

TEST_CASE("self-similar profile solves the self-similar ODE") {
  // uniform grid over the self-similar range; nodes at k*h never hit y = 1
  auto g = RadialGrid::uniform(1e-3, 5.0, 5000, 7);
  auto res = self_similar_residual(7, g);
  double sup = sup_abs(res, g->ymin(), g->ymax());
  REQUIRE(sup <= 1e-7);

  // phi0(sqrt(d-2)) = pi/2
  REQUIRE_THAT(phi0_selfsim(7, std::sqrt(5.0)), Catch::Matchers::WithinAbs(kPi / 2.0, 1e-14));

  // symbolic oracle at y = 0.5: phi0' = 2a/(a^2+y^2), phi0'' = -4ay/(a^2+y^2)^2
  double a = std::sqrt(5.0), y = 0.5;
  double p = phi0_selfsim(7, y);
  double p1 = 2.0 * a / (a * a + y * y);
  double p2 = -4.0 * a * y / ((a * a + y * y) * (a * a + y * y));
  double r = (1.0 - y * y) * p2 + (6.0 / y - 2.0 * y) * p1 - 3.0 / (y * y) * std::sin(2.0 * p);
  REQUIRE(std::abs(r) < 1e-12);
  // and the sampled-residual value at the nearest node agrees
  int i = g->nearest(0.5);
  REQUIRE(std::abs(res.v[i]) < 1e-7);
}

TEST_CASE("solver precondition checks") {
  REQUIRE_THROWS_AS(solve_ground_state(7, 50.0), contract_error);
  REQUIRE_THROWS_AS(solve_ground_state(7, 1e3, 1e-6), contract_error);
}
