#pragma once

#include "wmlab/core/grid.hpp"

namespace wmlab {

/// Finite-difference derivative of order 1 or 2.  Five-point stencils,
/// centered in the interior and one-sided at the ends; order-4 interior
/// accuracy on smooth meshes.
inline RadialField derivative(const RadialField& f, int order) {
  if (order != 1 && order != 2) throw contract_error("derivative: order must be 1 or 2");
  const RadialGrid& g = *f.grid;
  if (g.size() < 5) throw contract_error("derivative: grid has fewer than 5 nodes");
  std::vector<double> out(g.size());
  for (int i = 0; i < g.size(); ++i) {
    int s = g.stencil_start(i);
    const double* w = (order == 1) ? g.dw1(i) : g.dw2(i);
    double acc = 0.0;
    for (int j = 0; j < 5; ++j) acc += w[j] * f.v[s + j];
    out[i] = acc;
  }
  int lead = kLeadUnset;
  if (f.lead != kLeadUnset) lead = std::max(f.lead - order, 0);
  return RadialField(f.grid, std::move(out), lead);
}

/// Tabulated first derivative when available, finite differences otherwise.
inline std::vector<double> deriv1_values(const RadialField& f) {
  if (f.has_d1()) return f.d1;
  return derivative(f, 1).v;
}

inline std::vector<double> deriv2_values(const RadialField& f) {
  if (f.has_d2()) return f.d2;
  return derivative(f, 2).v;
}

/// Cubic Lagrange interpolation of nodal values at y (inside the span).
inline double eval_field(const RadialField& f, double yv) {
  const RadialGrid& g = *f.grid;
  int i = g.locate(yv);
  int s = g.qstart(i);
  double r = 0.0;
  for (int j = 0; j < 4; ++j) {
    double lj = 1.0;
    for (int k = 0; k < 4; ++k)
      if (k != j) lj *= (yv - g.y(s + k)) / (g.y(s + j) - g.y(s + k));
    r += lj * f.v[s + j];
  }
  return r;
}

}  // namespace wmlab
