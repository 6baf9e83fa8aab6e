#pragma once

#include <cmath>
#include <vector>

#include "wmlab/core/grid.hpp"

namespace wmlab {

namespace detail {

// Integral over [a,b] of y^p * (cubic through (x_j, z_j), j=0..3).
// Used near the origin where the integrand is g = y^p * z with z smooth:
// interpolating z instead of g keeps full order when the stencil spans
// intervals with h ~ y.  p may be negative (p+k != 0 for k=1..4 required,
// which holds for the integer powers this library produces when d >= 7).
inline double moment_cubic(const double* x, const double* z, int p, double a, double b) {
  // Newton form of the cubic in z.
  double c0 = z[0];
  double d01 = (z[1] - z[0]) / (x[1] - x[0]);
  double d12 = (z[2] - z[1]) / (x[2] - x[1]);
  double d23 = (z[3] - z[2]) / (x[3] - x[2]);
  double d012 = (d12 - d01) / (x[2] - x[0]);
  double d123 = (d23 - d12) / (x[3] - x[1]);
  double d0123 = (d123 - d012) / (x[3] - x[0]);
  // Expand to monomial coefficients z(y) = a0 + a1 y + a2 y^2 + a3 y^3.
  double a3 = d0123;
  double a2 = d012 - d0123 * (x[0] + x[1] + x[2]);
  double a1 = d01 - d012 * (x[0] + x[1]) +
              d0123 * (x[0] * x[1] + x[0] * x[2] + x[1] * x[2]);
  double a0 = c0 - d01 * x[0] + d012 * x[0] * x[1] - d0123 * x[0] * x[1] * x[2];
  auto F = [&](double y) {
    if (y == 0.0) return 0.0;  // only reached when p+1 > 0
    double yp1 = std::pow(y, p + 1);
    return yp1 * (a0 / (p + 1) + y * (a1 / (p + 2) + y * (a2 / (p + 3) + y * a3 / (p + 4))));
  };
  return F(b) - F(a);
}

}  // namespace detail

/// Per-interval integrals of nodal data g against plain dy (no measure).
/// `lead` is the leading power of g at the origin; intervals with h/y not
/// small use the y^p-moment rule above, the rest use the grid's cached cubic
/// weights.  Order 4 throughout.
inline std::vector<double> interval_integrals(const RadialGrid& g, const std::vector<double>& gv,
                                              int lead) {
  int n = g.size();
  std::vector<double> I(n - 1);
  bool have_lead = (lead != kLeadUnset);
  for (int i = 0; i + 1 < n; ++i) {
    double ya = g.y(i), yb = g.y(i + 1);
    bool near_origin = have_lead && ya < 50.0 * (yb - ya);
    if (near_origin) {
      // z = g / y^p on a 4-node stencil avoiding a node at y = 0.
      int s = g.qstart(i);
      if (g.y(s) == 0.0) s = std::min(s + 1, n - 4);
      double xs[4], zs[4];
      for (int j = 0; j < 4; ++j) {
        xs[j] = g.y(s + j);
        zs[j] = gv[s + j] / std::pow(xs[j], lead);
      }
      I[i] = detail::moment_cubic(xs, zs, lead, ya, yb);
    } else {
      const double* w = g.qw(i);
      int s = g.qstart(i);
      I[i] = w[0] * gv[s] + w[1] * gv[s + 1] + w[2] * gv[s + 2] + w[3] * gv[s + 3];
    }
  }
  return I;
}

/// C[i] = integral of g from 0 (or from y_min when the stub diverges) to y_i.
/// The [0, y_min] stub uses the leading-power series; it requires lead > -1
/// and is skipped (treated as the basepoint) otherwise.
inline std::vector<double> cumulative_integral(const RadialGrid& g, const std::vector<double>& gv,
                                               int lead) {
  auto I = interval_integrals(g, gv, lead);
  int n = g.size();
  std::vector<double> C(n, 0.0);
  double stub = 0.0;
  if (g.y(0) > 0.0 && lead != kLeadUnset && lead > -1) {
    // z = g/y^p ~ z1 + z1'(y - y1): integrate y^p z over [0, y1].
    double y1 = g.y(0);
    double z1 = gv[0] / std::pow(y1, lead);
    int s = 0;
    double xs[4], zs[4];
    for (int j = 0; j < 4; ++j) {
      xs[j] = g.y(s + j);
      zs[j] = gv[s + j] / std::pow(xs[j], lead);
    }
    auto w = detail::fd_weights(y1, xs, 4, 1);
    double z1p = w[0] * zs[0] + w[1] * zs[1] + w[2] * zs[2] + w[3] * zs[3];
    stub = z1 * std::pow(y1, lead + 1) / (lead + 1) -
           z1p * std::pow(y1, lead + 2) / ((lead + 1.0) * (lead + 2.0));
  }
  C[0] = stub;
  for (int i = 1; i < n; ++i) C[i] = C[i - 1] + I[i - 1];
  return C;
}

/// Integral of nodal data g (plain dy) over [a, b] inside the grid span.
inline double integrate_nodal(const RadialGrid& g, const std::vector<double>& gv, int lead,
                              double a, double b) {
  if (a > b) return -integrate_nodal(g, gv, lead, b, a);
  const double eps = 1e-12 * (g.ymax() - g.ymin());
  if (a < g.ymin() - eps || b > g.ymax() + eps)
    throw contract_error("integrate: interval outside grid span");
  a = std::max(a, g.ymin());
  b = std::min(b, g.ymax());
  auto partial = [&](int i, double lo, double hi) {
    int s = g.qstart(i);
    if (g.y(s) == 0.0 && lead != kLeadUnset) s = std::min(s + 1, g.size() - 4);
    double xs[4], zs[4];
    bool moment = (lead != kLeadUnset) && g.y(i) < 50.0 * (g.y(i + 1) - g.y(i));
    for (int j = 0; j < 4; ++j) xs[j] = g.y(s + j);
    if (moment) {
      for (int j = 0; j < 4; ++j) zs[j] = gv[s + j] / std::pow(xs[j], lead);
      return detail::moment_cubic(xs, zs, lead, lo, hi);
    }
    for (int j = 0; j < 4; ++j) zs[j] = gv[s + j];
    return detail::moment_cubic(xs, zs, 0, lo, hi);
  };
  int ia = g.locate(a), ib = g.locate(b);
  if (ia == ib) return partial(ia, a, b);
  double total = partial(ia, a, g.y(ia + 1)) + partial(ib, g.y(ib), b);
  auto I = interval_integrals(g, gv, lead);
  for (int i = ia + 1; i < ib; ++i) total += I[i];
  return total;
}

/// Integral of f(y) y^{d-1} dy over [a, b].  The measure is handled exactly
/// (per-interval weights of y^{d-1} against the cubic interpolant of f), so
/// polynomial f up to cubic integrates exactly.  Fields singular at the
/// origin (lead < 0) fall back to the nodal moment rule on f * y^{d-1}.
inline double integrate_weighted(const RadialField& f, double a, double b) {
  const RadialGrid& g = *f.grid;
  int n = g.size();
  if (f.lead != kLeadUnset && f.lead < 0) {
    std::vector<double> gv(n);
    for (int i = 0; i < n; ++i) gv[i] = f.v[i] * std::pow(g.y(i), g.dim() - 1);
    return integrate_nodal(g, gv, f.lead + g.dim() - 1, a, b);
  }
  if (a > b) return -integrate_weighted(f, b, a);
  const double eps = 1e-12 * (g.ymax() - g.ymin());
  if (a < g.ymin() - eps || b > g.ymax() + eps)
    throw contract_error("integrate_weighted: interval outside grid span");
  a = std::max(a, g.ymin());
  b = std::min(b, g.ymax());
  // Partial interval: Gauss-Legendre on [lo,hi] against the local f-cubic.
  auto partial = [&](int i, double lo, double hi) {
    static const double gx[9] = {0.0,
                                 -0.3242534234038089, 0.3242534234038089,
                                 -0.6133714327005904, 0.6133714327005904,
                                 -0.8360311073266358, 0.8360311073266358,
                                 -0.9681602395076261, 0.9681602395076261};
    static const double gw[9] = {0.3302393550012598,
                                 0.3123470770400029, 0.3123470770400029,
                                 0.2606106964029354, 0.2606106964029354,
                                 0.1806481606948574, 0.1806481606948574,
                                 0.0812743883615744, 0.0812743883615744};
    int s = g.qstart(i);
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo), acc = 0.0;
    for (int q = 0; q < 9; ++q) {
      double x = mid + half * gx[q];
      double fi = 0.0;
      for (int j = 0; j < 4; ++j) {
        double lj = 1.0;
        for (int k = 0; k < 4; ++k)
          if (k != j) lj *= (x - g.y(s + k)) / (g.y(s + j) - g.y(s + k));
        fi += lj * f.v[s + j];
      }
      acc += half * gw[q] * std::pow(x, g.dim() - 1) * fi;
    }
    return acc;
  };
  int ia = g.locate(a), ib = g.locate(b);
  if (ia == ib) return partial(ia, a, b);
  double total = 0.0;
  total += (a == g.y(ia)) ? 0.0 : partial(ia, a, g.y(ia + 1));
  int start = (a == g.y(ia)) ? ia : ia + 1;
  for (int i = start; i < ib; ++i) {
    const double* w = g.mw(i);
    int s = g.qstart(i);
    total += w[0] * f.v[s] + w[1] * f.v[s + 1] + w[2] * f.v[s + 2] + w[3] * f.v[s + 3];
  }
  total += partial(ib, g.y(ib), b);
  return total;
}

inline double integrate_weighted(const RadialField& f) {
  return integrate_weighted(f, f.grid->ymin(), f.grid->ymax());
}

}  // namespace wmlab
