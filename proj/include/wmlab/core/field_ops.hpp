#pragma once

#include "wmlab/core/derivative.hpp"
#include "wmlab/core/grid.hpp"

namespace wmlab {

// Linear combinations and products of fields.  Derivative tables are carried
// along when every operand has them; otherwise the result drops them.
// Leading powers combine as min (sums) and + (products) -- a lower bound,
// which is the safe direction for the quadrature moment rule.

inline int lead_min(int a, int b) {
  if (a == kLeadUnset || b == kLeadUnset) return kLeadUnset;
  return std::min(a, b);
}
inline int lead_add(int a, int b) {
  if (a == kLeadUnset || b == kLeadUnset) return kLeadUnset;
  return a + b;
}

inline RadialField f_scale(const RadialField& f, double c) {
  RadialField r = f;
  for (auto& x : r.v) x *= c;
  for (auto& x : r.d1) x *= c;
  for (auto& x : r.d2) x *= c;
  return r;
}

inline RadialField f_axpy(double ca, const RadialField& a, double cb, const RadialField& b) {
  if (a.size() != b.size()) throw contract_error("f_axpy: field size mismatch");
  RadialField r;
  r.grid = a.grid;
  r.lead = lead_min(a.lead, b.lead);
  size_t n = a.v.size();
  r.v.resize(n);
  for (size_t i = 0; i < n; ++i) r.v[i] = ca * a.v[i] + cb * b.v[i];
  if (a.has_d1() && b.has_d1()) {
    r.d1.resize(n);
    for (size_t i = 0; i < n; ++i) r.d1[i] = ca * a.d1[i] + cb * b.d1[i];
  }
  if (a.has_d2() && b.has_d2()) {
    r.d2.resize(n);
    for (size_t i = 0; i < n; ++i) r.d2[i] = ca * a.d2[i] + cb * b.d2[i];
  }
  return r;
}

inline RadialField f_add(const RadialField& a, const RadialField& b) { return f_axpy(1, a, 1, b); }
inline RadialField f_sub(const RadialField& a, const RadialField& b) { return f_axpy(1, a, -1, b); }

inline RadialField f_mul(const RadialField& a, const RadialField& b) {
  if (a.size() != b.size()) throw contract_error("f_mul: field size mismatch");
  RadialField r;
  r.grid = a.grid;
  r.lead = lead_add(a.lead, b.lead);
  size_t n = a.v.size();
  r.v.resize(n);
  for (size_t i = 0; i < n; ++i) r.v[i] = a.v[i] * b.v[i];
  if (a.has_d1() && b.has_d1()) {
    r.d1.resize(n);
    for (size_t i = 0; i < n; ++i) r.d1[i] = a.d1[i] * b.v[i] + a.v[i] * b.d1[i];
    if (a.has_d2() && b.has_d2()) {
      r.d2.resize(n);
      for (size_t i = 0; i < n; ++i)
        r.d2[i] = a.d2[i] * b.v[i] + 2.0 * a.d1[i] * b.d1[i] + a.v[i] * b.d2[i];
    }
  }
  return r;
}

/// Euler operator y d/dy (used on first components).
inline RadialField lam_field(const RadialField& f) {
  RadialField r;
  r.grid = f.grid;
  r.lead = f.lead;  // Lambda preserves the leading power
  const auto& yv = f.grid->nodes();
  auto fp = deriv1_values(f);
  size_t n = f.v.size();
  r.v.resize(n);
  for (size_t i = 0; i < n; ++i) r.v[i] = yv[i] * fp[i];
  if (f.has_d1() && f.has_d2()) {
    r.d1.resize(n);
    for (size_t i = 0; i < n; ++i) r.d1[i] = f.d1[i] + yv[i] * f.d2[i];
  }
  return r;
}

/// 1 + y d/dy (used on second components).
inline RadialField dee_field(const RadialField& f) {
  RadialField r;
  r.grid = f.grid;
  r.lead = f.lead;
  const auto& yv = f.grid->nodes();
  auto fp = deriv1_values(f);
  size_t n = f.v.size();
  r.v.resize(n);
  for (size_t i = 0; i < n; ++i) r.v[i] = f.v[i] + yv[i] * fp[i];
  if (f.has_d1() && f.has_d2()) {
    r.d1.resize(n);
    for (size_t i = 0; i < n; ++i) r.d1[i] = 2.0 * f.d1[i] + yv[i] * f.d2[i];
  }
  return r;
}

inline RadialPair p_axpy(double ca, const RadialPair& a, double cb, const RadialPair& b) {
  return RadialPair(f_axpy(ca, a.f1, cb, b.f1), f_axpy(ca, a.f2, cb, b.f2));
}

inline RadialPair p_scale(const RadialPair& p, double c) {
  return RadialPair(f_scale(p.f1, c), f_scale(p.f2, c));
}

/// Vector scaling generator (Lambda f1, D f2).
inline RadialPair lambda_vec(const RadialPair& p) {
  return RadialPair(lam_field(p.f1), dee_field(p.f2));
}

inline double sup_abs(const RadialField& f, double ya, double yb) {
  double m = 0.0;
  for (int i = 0; i < f.size(); ++i) {
    double yv = f.grid->y(i);
    if (yv >= ya && yv <= yb) m = std::max(m, std::abs(f.v[i]));
  }
  return m;
}

}  // namespace wmlab
