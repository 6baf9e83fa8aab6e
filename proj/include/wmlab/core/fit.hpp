#pragma once

#include <cmath>
#include <vector>

#include "wmlab/core/grid.hpp"

namespace wmlab {

struct LineFit {
  double slope = 0.0, intercept = 0.0;
  double max_dev = 0.0;  // max |y - fit| over the samples
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>* w = nullptr) {
  if (x.size() != y.size() || x.size() < 2) throw contract_error("fit_line: bad sample set");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double wi = w ? (*w)[i] : 1.0;
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
    sxx += wi * x[i] * x[i];
    sxy += wi * x[i] * y[i];
  }
  double det = sw * sxx - sx * sx;
  LineFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sy * sxx - sx * sxy) / det;
  for (size_t i = 0; i < x.size(); ++i)
    f.max_dev = std::max(f.max_dev, std::abs(y[i] - (f.slope * x[i] + f.intercept)));
  return f;
}

/// log-log slope of |f| over the node window [ya, yb]; samples with
/// |f| < floor are skipped.
inline LineFit loglog_slope(const RadialField& f, double ya, double yb, double floor = 1e-300) {
  std::vector<double> lx, ly;
  const RadialGrid& g = *f.grid;
  for (int i = 0; i < g.size(); ++i) {
    double yv = g.y(i);
    if (yv < ya || yv > yb) continue;
    double av = std::abs(f.v[i]);
    if (av < floor) continue;
    lx.push_back(std::log(yv));
    ly.push_back(std::log(av));
  }
  if (lx.size() < 8) throw numerical_error("loglog_slope: too few usable samples in window");
  return fit_line(lx, ly);
}

/// Aitken delta-squared extrapolation of a sequence limit from its last
/// three entries (exact for a pure geometric residual).
inline double aitken_limit(double f0, double f1, double f2) {
  double d1 = f1 - f0, d2 = f2 - f1;
  double den = d2 - d1;
  if (std::abs(den) < 1e-300) return f2;
  return f2 - d2 * d2 / den;
}

}  // namespace wmlab
