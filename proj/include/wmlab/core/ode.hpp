#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "wmlab/core/grid.hpp"

namespace wmlab {

using OdeRhs = std::function<void(double, const Vec&, Vec&)>;

struct IvpOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double h0 = 0.0;              // 0: pick from span
  double hmin_factor = 1e-14;   // floor relative to |span|
  long max_steps = 20'000'000;
  bool record = true;           // store every accepted step
  std::function<bool(double, const Vec&)> stop;  // event: integration halts when true
};

enum class IvpStatus { ok, event, step_underflow, max_steps };

struct IvpResult {
  IvpStatus status = IvpStatus::ok;
  std::vector<double> ts;
  std::vector<Vec> ys;
  double t_last = 0.0;
  Vec y_last;
  bool ok() const { return status == IvpStatus::ok; }
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// One dopri5 step from (t, y) with step h.  k1 must hold f(t, y) on entry;
// on exit k1 holds f(t+h, ynew) (FSAL).  Returns the error norm.
inline double dopri5_step(const OdeRhs& f, double t, const Vec& y, double h, Vec& ynew, Vec& k1,
                          Vec k[7], double atol, double rtol) {
  using D = Dopri5;
  size_t n = y.size();
  k[0] = k1;
  Vec& tmp = ynew;  // reuse storage
  tmp.resize(n);
  for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * D::a21 * k[0][i];
  f(t + D::c2 * h, tmp, k[1]);
  for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (D::a31 * k[0][i] + D::a32 * k[1][i]);
  f(t + D::c3 * h, tmp, k[2]);
  for (size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (D::a41 * k[0][i] + D::a42 * k[1][i] + D::a43 * k[2][i]);
  f(t + D::c4 * h, tmp, k[3]);
  for (size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (D::a51 * k[0][i] + D::a52 * k[1][i] + D::a53 * k[2][i] + D::a54 * k[3][i]);
  f(t + D::c5 * h, tmp, k[4]);
  for (size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (D::a61 * k[0][i] + D::a62 * k[1][i] + D::a63 * k[2][i] +
                         D::a64 * k[3][i] + D::a65 * k[4][i]);
  f(t + h, tmp, k[5]);
  for (size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (D::b1 * k[0][i] + D::b3 * k[2][i] + D::b4 * k[3][i] + D::b5 * k[4][i] +
                         D::b6 * k[5][i]);
  f(t + h, tmp, k[6]);

  double err = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double e = h * (D::e1 * k[0][i] + D::e3 * k[2][i] + D::e4 * k[3][i] + D::e5 * k[4][i] +
                    D::e6 * k[5][i] + D::e7 * k[6][i]);
    double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(tmp[i]));
    err += (e / sc) * (e / sc);
  }
  k1 = k[6];
  return std::sqrt(err / n);
}

}  // namespace detail

/// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)).  Local error per step
/// is controlled against abs_tol + rel_tol*|y|.  When `stop` fires, the
/// crossing is refined by shrinking the final step.
inline IvpResult solve_ivp(const OdeRhs& f, Vec y0, double t0, double t1,
                           const IvpOptions& opt = {}) {
  IvpResult res;
  double span = t1 - t0;
  if (span == 0.0) {
    res.t_last = t0;
    res.y_last = y0;
    if (opt.record) { res.ts.push_back(t0); res.ys.push_back(y0); }
    return res;
  }
  double dir = span > 0 ? 1.0 : -1.0;
  double h = opt.h0 != 0.0 ? std::abs(opt.h0) : std::abs(span) / 100.0;
  double hmin = std::abs(span) * opt.hmin_factor;

  Vec y = std::move(y0), ynew, k1(y.size());
  Vec karr[7];
  for (auto& k : karr) k.resize(y.size());
  f(t0, y, k1);
  double t = t0;
  if (opt.record) { res.ts.push_back(t); res.ys.push_back(y); }

  for (long step = 0; step < opt.max_steps; ++step) {
    if ((t - t1) * dir >= 0.0) {
      res.status = IvpStatus::ok;
      res.t_last = t;
      res.y_last = y;
      return res;
    }
    h = std::min(h, std::abs(t1 - t));
    Vec k1_trial = k1;
    double err = detail::dopri5_step(f, t, y, dir * h, ynew, k1_trial, karr, opt.abs_tol, opt.rel_tol);
    if (err <= 1.0) {
      double t_new = t + dir * h;
      if (opt.stop && opt.stop(t_new, ynew)) {
        // Bisect the final step to locate the crossing.
        double lo = 0.0, hi = h;
        Vec y_hi = ynew;
        for (int it = 0; it < 60 && (hi - lo) > 1e-12 * std::max(1.0, std::abs(t)); ++it) {
          double mid = 0.5 * (lo + hi);
          Vec k1_mid = k1, y_mid;
          detail::dopri5_step(f, t, y, dir * mid, y_mid, k1_mid, karr, opt.abs_tol, opt.rel_tol);
          if (opt.stop(t + dir * mid, y_mid)) { hi = mid; y_hi = y_mid; }
          else lo = mid;
        }
        res.status = IvpStatus::event;
        res.t_last = t + dir * hi;
        res.y_last = y_hi;
        if (opt.record) { res.ts.push_back(res.t_last); res.ys.push_back(res.y_last); }
        return res;
      }
      t = t_new;
      y = ynew;
      k1 = k1_trial;
      if (opt.record) { res.ts.push_back(t); res.ys.push_back(y); }
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      h *= std::clamp(fac, 0.2, 5.0);
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (h < hmin) {
        res.status = IvpStatus::step_underflow;
        res.t_last = t;
        res.y_last = y;
        return res;
      }
    }
  }
  res.status = IvpStatus::max_steps;
  res.t_last = t;
  res.y_last = y;
  return res;
}

}  // namespace wmlab
