#pragma once

#include <memory>
#include <vector>

#include "wmlab/core/field_ops.hpp"
#include "wmlab/core/quadrature.hpp"
#include "wmlab/ground_state.hpp"

namespace wmlab {

/// Quintic smoothstep cutoff: 1 on [0,1], 0 on [2,inf), C^2 at the seams.
struct Cutoff {
  static double chi(double x) {
    if (x <= 1.0) return 1.0;
    if (x >= 2.0) return 0.0;
    double s = x - 1.0;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  }
  static double chi1(double x) {
    if (x <= 1.0 || x >= 2.0) return 0.0;
    double s = x - 1.0, t = 1.0 - s;
    return -30.0 * s * s * t * t;
  }
  static double chi2(double x) {
    if (x <= 1.0 || x >= 2.0) return 0.0;
    double s = x - 1.0;
    return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
  }
};

/// chi(y/M) sampled with derivative tables.
inline RadialField cutoff_field(GridPtr g, double M) {
  int n = g->size();
  RadialField f(g, std::vector<double>(n), 0);
  f.d1.resize(n);
  f.d2.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = g->y(i) / M;
    f.v[i] = Cutoff::chi(x);
    f.d1[i] = Cutoff::chi1(x) / M;
    f.d2[i] = Cutoff::chi2(x) / (M * M);
  }
  return f;
}

enum class DerivMode { tables, stencil };

/// Ground state plus the potentials entering the factorized operators.
struct LinOpContext {
  std::shared_ptr<const GroundState> gs;
  GridPtr grid;
  int d = 0;
  double gamma = 0;

  explicit LinOpContext(std::shared_ptr<const GroundState> g)
      : gs(std::move(g)), grid(gs->grid), d(gs->d), gamma(gs->gamma) {}
};

inline std::shared_ptr<const LinOpContext> make_linop_context(
    std::shared_ptr<const GroundState> gs) {
  return std::make_shared<const LinOpContext>(std::move(gs));
}

namespace detail {
inline void require_lead(const RadialField& f, const char* who) {
  if (f.lead == kLeadUnset)
    throw contract_error(std::string(who) + ": field is missing origin parity data (lead)");
}
inline int lead_after_L(int lf) { return lf == 1 ? 1 : lf - 2; }
}  // namespace detail

/// First-order factor: A f = -f' + (V/y) f  (annihilates LamQ).
inline RadialField apply_A(const LinOpContext& c, const RadialField& f,
                           DerivMode mode = DerivMode::tables) {
  detail::require_lead(f, "apply_A");
  auto fp = (mode == DerivMode::tables && f.has_d1()) ? f.d1 : derivative(f, 1).v;
  int n = f.size();
  RadialField r(f.grid, std::vector<double>(n), f.lead == 1 ? 2 : f.lead - 1);
  for (int i = 0; i < n; ++i) {
    double y = c.grid->y(i);
    r.v[i] = -fp[i] + c.gs->V.v[i] / y * f.v[i];
  }
  return r;
}

/// Adjoint w.r.t. the y^{d-1} measure: A* f = f' + ((d-1+V)/y) f.
inline RadialField apply_Astar(const LinOpContext& c, const RadialField& f,
                               DerivMode mode = DerivMode::tables) {
  detail::require_lead(f, "apply_Astar");
  auto fp = (mode == DerivMode::tables && f.has_d1()) ? f.d1 : derivative(f, 1).v;
  int n = f.size();
  RadialField r(f.grid, std::vector<double>(n), f.lead - 1);
  for (int i = 0; i < n; ++i) {
    double y = c.grid->y(i);
    r.v[i] = fp[i] + (c.d - 1.0 + c.gs->V.v[i]) / y * f.v[i];
  }
  return r;
}

/// L f = -f'' - ((d-1)/y) f' + (Z/y^2) f = A* A f.
inline RadialField apply_L(const LinOpContext& c, const RadialField& f,
                           DerivMode mode = DerivMode::tables) {
  detail::require_lead(f, "apply_L");
  bool tab = mode == DerivMode::tables && f.has_d1() && f.has_d2();
  auto fp = tab ? f.d1 : derivative(f, 1).v;
  auto fpp = tab ? f.d2 : derivative(f, 2).v;
  int n = f.size();
  RadialField r(f.grid, std::vector<double>(n), detail::lead_after_L(f.lead));
  for (int i = 0; i < n; ++i) {
    double y = c.grid->y(i);
    r.v[i] = -fpp[i] - (c.d - 1.0) / y * fp[i] + c.gs->Z.v[i] / (y * y) * f.v[i];
  }
  return r;
}

/// Conjugate Hamiltonian A A* with potential
/// Ztilde = (V+1)^2 + (d-2)(V+1) - Lambda V.
inline RadialField apply_Ltilde(const LinOpContext& c, const RadialField& f,
                                DerivMode mode = DerivMode::tables) {
  detail::require_lead(f, "apply_Ltilde");
  bool tab = mode == DerivMode::tables && f.has_d1() && f.has_d2();
  auto fp = tab ? f.d1 : derivative(f, 1).v;
  auto fpp = tab ? f.d2 : derivative(f, 2).v;
  int n = f.size();
  RadialField r(f.grid, std::vector<double>(n), f.lead - 2);
  const auto& V = c.gs->V;
  for (int i = 0; i < n; ++i) {
    double y = c.grid->y(i);
    double vp1 = V.v[i] + 1.0;
    double zt = vp1 * vp1 + (c.d - 2.0) * vp1 - y * V.d1[i];
    r.v[i] = -fpp[i] - (c.d - 1.0) / y * fp[i] + zt / (y * y) * f.v[i];
  }
  return r;
}

struct InvertInfo {
  bool growing_tail = false;
};

/// Two-step inversion of L: first A w from the weighted cumulative of f,
/// then w from the cumulative of A w / LamQ.  Both basepoints at the origin
/// select the regular branch (w/LamQ -> 0 at 0).  Derivative tables of the
/// result are exact: w' = (V/y) w - A w, w'' from L w = f.
inline RadialField invert_L(const LinOpContext& c, const RadialField& f,
                            InvertInfo* info = nullptr) {
  detail::require_lead(f, "invert_L");
  const RadialGrid& g = *c.grid;
  int n = g.size();
  const auto& lamq = c.gs->LamQ.v;

  std::vector<double> g1(n);
  for (int i = 0; i < n; ++i) g1[i] = f.v[i] * lamq[i] * std::pow(g.y(i), c.d - 1);
  auto I1 = cumulative_integral(g, g1, f.lead + c.d);
  std::vector<double> Aw(n);
  for (int i = 0; i < n; ++i) Aw[i] = I1[i] / (std::pow(g.y(i), c.d - 1) * lamq[i]);

  std::vector<double> g2(n);
  for (int i = 0; i < n; ++i) g2[i] = Aw[i] / lamq[i];
  auto I2 = cumulative_integral(g, g2, f.lead);

  RadialField w(c.grid, std::vector<double>(n), f.lead + 2);
  w.d1.resize(n);
  w.d2.resize(n);
  for (int i = 0; i < n; ++i) {
    double y = g.y(i);
    w.v[i] = -lamq[i] * I2[i];
    w.d1[i] = c.gs->V.v[i] / y * w.v[i] - Aw[i];
    w.d2[i] = -f.v[i] - (c.d - 1.0) / y * w.d1[i] + c.gs->Z.v[i] / (y * y) * w.v[i];
  }
  if (info) {
    int m = n - 1;
    info->growing_tail = std::abs(g1[m]) > std::abs(g1[m - std::min(200, n / 4)]);
  }
  return w;
}

/// Singular kernel element: Gamma = -LamQ * int_1^y dx / (x^{d-1} LamQ^2).
inline RadialField kernel_Gamma(const LinOpContext& c) {
  const RadialGrid& g = *c.grid;
  int n = g.size();
  const auto& lamq = c.gs->LamQ.v;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = 1.0 / (std::pow(g.y(i), c.d - 1) * lamq[i] * lamq[i]);
  auto C = cumulative_integral(g, u, -(c.d + 1));
  int base = g.nearest(1.0);
  RadialField gam(c.grid, std::vector<double>(n), 1 - c.d);
  gam.d1.resize(n);
  gam.d2.resize(n);
  for (int i = 0; i < n; ++i) {
    double y = g.y(i);
    double S = C[i] - C[base];
    gam.v[i] = -lamq[i] * S;
    gam.d1[i] = -c.gs->LamQ.d1[i] * S - lamq[i] * u[i];
    gam.d2[i] = -(c.d - 1.0) / y * gam.d1[i] + c.gs->Z.v[i] / (y * y) * gam.v[i];
  }
  return gam;
}

/// H (f1,f2) = (-f2, L f1).
inline RadialPair apply_H(const LinOpContext& c, const RadialPair& p,
                          DerivMode mode = DerivMode::tables) {
  return RadialPair(f_scale(p.f2, -1.0), apply_L(c, p.f1, mode));
}

/// H^{-1} (f1,f2) = (L^{-1} f2, -f1).
inline RadialPair apply_Hinv(const LinOpContext& c, const RadialPair& p) {
  return RadialPair(invert_L(c, p.f2), f_scale(p.f1, -1.0));
}

inline RadialPair apply_Hk(const LinOpContext& c, RadialPair p, int k,
                           DerivMode mode = DerivMode::tables) {
  for (int i = 0; i < k; ++i) {
    p = apply_H(c, p, mode);
    mode = DerivMode::stencil;  // tables are consumed by the first application
  }
  return p;
}

/// <u, v> = int (u1 v1 + u2 v2) y^{d-1} dy over the grid span.
inline double inner(const RadialPair& u, const RadialPair& v) {
  return integrate_weighted(f_mul(u.f1, v.f1)) + integrate_weighted(f_mul(u.f2, v.f2));
}

inline double inner(const RadialPair& u, const RadialPair& v, double a, double b) {
  return integrate_weighted(f_mul(u.f1, v.f1), a, b) + integrate_weighted(f_mul(u.f2, v.f2), a, b);
}

/// Fixed direction Phi_M generating approximate kernel elements of powers of
/// H through the orthogonality conditions.
struct PhiM {
  double M = 0;
  int L = 0;
  std::vector<double> c;                // c_{k,M}, k = 0..L (odd entries 0)
  RadialPair field;                     // (Phi_M, 0)
  std::vector<RadialField> Lm_chi;      // L^m (chi_M LamQ), m = 0..(L-1)/2
  std::vector<RadialPair> Hstar_phi;    // H*^k Phi_M, k = 0..L
  double chi_pair = 0;                  // <chi_M LamQ, LamQ>
};

/// Assemble Phi_M = sum c_{k,M} H*^k (chi_M LamQ) with the cancellation
/// recursion for the coefficients.  Requires the T-profiles for the pairing
/// integrals.
inline PhiM build_phi_M(const LinOpContext& c, double M, int L,
                        const std::vector<RadialPair>& T) {
  if (M < 10.0) throw contract_error("build_phi_M: need M >= 10");
  if (L < 1 || L % 2 == 0 || L > 7) throw contract_error("build_phi_M: L must be odd, 1..7");
  if (static_cast<int>(T.size()) < L + 1)
    throw contract_error("build_phi_M: T profiles up to T_L required");
  PhiM out;
  out.M = M;
  out.L = L;

  RadialField chiLamQ = f_mul(cutoff_field(c.grid, M), c.gs->LamQ);
  chiLamQ.lead = 1;
  int mmax = (L - 1) / 2;
  out.Lm_chi.push_back(chiLamQ);
  for (int m = 1; m <= mmax; ++m) {
    auto next = apply_L(c, out.Lm_chi.back(),
                        m == 1 ? DerivMode::tables : DerivMode::stencil);
    next.lead = 1;
    out.Lm_chi.push_back(std::move(next));
  }
  out.chi_pair = integrate_weighted(f_mul(chiLamQ, c.gs->LamQ));

  // pairing <H*^j (chi LamQ vec), T_k>: nonzero only for matching parity.
  auto pairing = [&](int j, int k) -> double {
    if ((j % 2) != (k % 2)) return 0.0;
    int m = j / 2, i = k / 2;
    const RadialField& tk = (k % 2 == 0) ? T[k].f1 : T[k].f2;
    double base = integrate_weighted(f_mul(out.Lm_chi[m], tk));
    int sign = (m % 2 == 0) ? 1 : -1;
    if (j % 2 == 1) sign = -sign;
    (void)i;
    return sign * base;
  };

  out.c.assign(L + 1, 0.0);
  out.c[0] = 1.0;
  for (int k = 1; k <= L; ++k) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j)
      if (out.c[j] != 0.0) acc += out.c[j] * pairing(j, k);
    double sign = (k % 2 == 0) ? -1.0 : 1.0;  // (-1)^{k+1}
    out.c[k] = sign * acc / out.chi_pair;
  }

  // Phi_M = sum_m (-1)^m c_{2m} L^m(chi LamQ), second component zero.
  RadialField phi = f_scale(out.Lm_chi[0], out.c[0]);
  for (int m = 1; m <= mmax; ++m) {
    double s = (m % 2 == 0) ? 1.0 : -1.0;
    phi = f_axpy(1.0, phi, s * out.c[2 * m], out.Lm_chi[m]);
  }
  phi.lead = 1;
  out.field = RadialPair(phi, zero_field(c.grid, 1));

  // H*^k Phi_M, k = 0..L, from L^m Phi_M.
  std::vector<RadialField> LmPhi{phi};
  for (int m = 1; m <= (L - 1) / 2; ++m) {
    auto next = apply_L(c, LmPhi.back(), m == 1 ? DerivMode::tables : DerivMode::stencil);
    next.lead = 1;
    LmPhi.push_back(std::move(next));
  }
  for (int k = 0; k <= L; ++k) {
    int m = k / 2;
    double s = (m % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0)
      out.Hstar_phi.push_back(RadialPair(f_scale(LmPhi[m], s), zero_field(c.grid, 1)));
    else
      out.Hstar_phi.push_back(RadialPair(zero_field(c.grid, 1), f_scale(LmPhi[m], -s)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Appendix-style inequality harnesses.  The reference constants C below are
// pinned from the integration-by-parts derivation (Young splitting), so each
// report's slack must be nonnegative for admissible test functions.

enum class HardyVariant { origin_i, noncritical_alpha, critical, weighted };

struct HardyReport {
  double lhs = 0, rhs = 0, slack = 0;  // slack >= 0 <=> inequality holds
};

/// Harness constant for the weighted (interpolation-type) variant, where the
/// statement carries an unquantified constant.
inline constexpr double kWeightedHardyC = 10.0;

inline HardyReport hardy_check(const RadialField& f, HardyVariant variant, double param = 0.0,
                               int k = 2, int j = 1, double mu = 2.0) {
  const RadialGrid& g = *f.grid;
  int d = g.dim();
  auto fp = derivative(f, 1);
  double f1 = eval_field(f, 1.0);
  HardyReport rep;
  auto weighted_int = [&](const std::vector<double>& vals, auto&& wfun, double a, double b,
                          int lead) {
    std::vector<double> gm(g.size());
    for (int i = 0; i < g.size(); ++i) {
      double y = g.y(i);
      gm[i] = vals[i] * vals[i] * wfun(y) * std::pow(y, d - 1);
    }
    return integrate_nodal(g, gm, lead, a, b);
  };
  switch (variant) {
    case HardyVariant::origin_i: {
      int i = static_cast<int>(param);
      if (i < 0 || i > 2) throw contract_error("hardy_check: origin variant needs i in {0,1,2}");
      double cst = (d - 2.0 - 2.0 * i);
      rep.lhs = weighted_int(fp.v, [&](double y) { return std::pow(y, -2.0 * i); }, g.ymin(), 1.0,
                             d - 1 - 2 * i);
      double I2 = weighted_int(f.v, [&](double y) { return std::pow(y, -2.0 - 2.0 * i); },
                               g.ymin(), 1.0, d - 3 - 2 * i);
      rep.rhs = cst * cst / 4.0 * I2 - cst / 2.0 * f1 * f1;
      break;
    }
    case HardyVariant::noncritical_alpha: {
      double alpha = param;
      if (std::abs(alpha - (d - 2.0) / 2.0) < 1e-12)
        throw contract_error("hardy_check: alpha hits the critical exponent");
      double cst = std::abs(d - 2.0 - 2.0 * alpha);
      rep.lhs = weighted_int(fp.v, [&](double y) { return std::pow(y, -2.0 * alpha); }, 1.0,
                             g.ymax(), kLeadUnset);
      double I2 = weighted_int(f.v, [&](double y) { return std::pow(y, -2.0 - 2.0 * alpha); }, 1.0,
                               g.ymax(), kLeadUnset);
      rep.rhs = cst * cst / 4.0 * I2 - cst / 2.0 * f1 * f1;
      break;
    }
    case HardyVariant::critical: {
      double alpha = (d - 2.0) / 2.0;
      rep.lhs = weighted_int(fp.v, [&](double y) { return std::pow(y, -2.0 * alpha); }, 1.0,
                             g.ymax(), kLeadUnset);
      double I2 = weighted_int(f.v,
                               [&](double y) {
                                 double l = 1.0 + std::log(y);
                                 return std::pow(y, -2.0 - 2.0 * alpha) / (l * l);
                               },
                               1.0, g.ymax(), kLeadUnset);
      rep.rhs = 0.25 * I2 - 0.5 * f1 * f1;
      break;
    }
    case HardyVariant::weighted: {
      if (k < 2 || j < 1 || j > k - 1 || mu <= 0.0)
        throw contract_error("hardy_check: weighted variant needs k >= 2, 1 <= j <= k-1, mu > 0");
      RadialField dj = f, dk = f;
      for (int q = 0; q < j; ++q) dj = derivative(dj, 1);
      for (int q = 0; q < k; ++q) dk = derivative(dk, 1);
      rep.lhs = weighted_int(dj.v, [&](double y) { return 1.0 / (1.0 + std::pow(y, mu + 2.0 * (k - j))); },
                             g.ymin(), g.ymax(), kLeadUnset);
      double t1 = weighted_int(dk.v, [&](double y) { return 1.0 / (1.0 + std::pow(y, mu)); },
                               g.ymin(), g.ymax(), kLeadUnset);
      double t2 = weighted_int(f.v, [&](double y) { return 1.0 / (1.0 + std::pow(y, mu + 2.0 * k)); },
                               g.ymin(), g.ymax(), kLeadUnset);
      rep.rhs = kWeightedHardyC * (t1 + t2);
      rep.slack = rep.rhs - rep.lhs;
      return rep;
    }
  }
  rep.slack = rep.lhs - rep.rhs;
  return rep;
}

enum class FactorOp { A, Astar };

/// Ratio of the weighted |op f|^2 integral to the weighted
/// (|f'|^2 + |f/y|^2) sum; the coercivity lemmas assert a positive lower
/// bound.  For op = A in the supercritical weight range the test function
/// must be orthogonal to Phi_M.
inline double coercivity_check(const LinOpContext& c, const RadialField& f, FactorOp op, int i,
                               double p_or_alpha, const PhiM* phi = nullptr) {
  if (i < 0 || i > 2) throw contract_error("coercivity_check: i must be in {0,1,2}");
  double p = p_or_alpha;
  const RadialGrid& g = *c.grid;
  int d = g.dim();
  if (op == FactorOp::A) {
    if (std::abs(2.0 * p + 2.0 * i - (d - 2.0 - 2.0 * c.gamma)) < 1e-9)
      throw contract_error("coercivity_check: degenerate weight for op A");
    if (2.0 * i + 2.0 * p > d - 2.0 - 2.0 * c.gamma) {
      if (!phi) throw contract_error("coercivity_check: orthogonality to Phi_M required");
      RadialPair fv(f, zero_field(c.grid, f.lead));
      double ip = inner(fv, phi->field);
      double nf = std::sqrt(inner(fv, fv));
      double np = std::sqrt(inner(phi->field, phi->field));
      if (std::abs(ip) > 1e-6 * nf * np)
        throw contract_error("coercivity_check: <f, Phi_M> = 0 violated");
    }
  }
  auto opf = (op == FactorOp::A) ? apply_A(c, f, DerivMode::stencil)
                                 : apply_Astar(c, f, DerivMode::stencil);
  auto fp = derivative(f, 1);
  auto wint = [&](const std::vector<double>& vals, int extra_pow) {
    std::vector<double> gm(g.size());
    for (int q = 0; q < g.size(); ++q) {
      double y = g.y(q);
      double w = 1.0 / (std::pow(y, 2.0 * i + extra_pow) * (1.0 + std::pow(y, 2.0 * p)));
      gm[q] = vals[q] * vals[q] * w * std::pow(y, d - 1);
    }
    return integrate_nodal(g, gm, kLeadUnset, g.ymin(), g.ymax());
  };
  double num = wint(opf.v, 0);
  double den = wint(fp.v, 0) + wint(f.v, 2);
  if (den <= 0.0) throw numerical_error("coercivity_check: degenerate denominator");
  return num / den;
}

}  // namespace wmlab
