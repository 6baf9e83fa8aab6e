#pragma once

#include <map>
#include <memory>
#include <vector>

#include "wmlab/core/fit.hpp"
#include "wmlab/linop.hpp"

namespace wmlab {

/// Admissibility degree bookkeeping (p1: origin power, p2: decay budget,
/// iota: component position, p3: total b-degree; p3 < 0 when absent).
struct DegreeTag {
  int p1 = 0;
  double p2 = 0;
  int iota = 0;
  int p3 = -1;
};

/// Exponent vector of a b-monomial: idx[i] is the power of b_{i+1}.
using BIndex = std::vector<int>;

inline int bindex_degree(const BIndex& m) {
  int deg = 0;
  for (size_t i = 0; i < m.size(); ++i) deg += static_cast<int>(i + 1) * m[i];
  return deg;
}

inline double bindex_eval(const BIndex& m, const std::vector<double>& b) {
  double prod = 1.0;
  for (size_t i = 0; i < m.size(); ++i)
    for (int q = 0; q < m[i]; ++q) prod *= b[i];
  return prod;
}

/// Finitely supported map from b-monomials to coefficient pairs.
struct HomogeneousProfile {
  int L = 0;
  DegreeTag degree;
  std::map<BIndex, RadialPair> terms;

  bool empty() const { return terms.empty(); }

  void add_term(const BIndex& m, const RadialPair& coef) {
    auto it = terms.find(m);
    if (it == terms.end())
      terms.emplace(m, coef);
    else
      it->second = p_axpy(1.0, it->second, 1.0, coef);
  }

  /// Multiply by c * b^shift.
  HomogeneousProfile shifted(const BIndex& shift, double c) const {
    HomogeneousProfile out;
    out.L = L;
    out.degree = degree;
    for (const auto& [m, coef] : terms) {
      BIndex mm = m;
      for (size_t i = 0; i < mm.size(); ++i) mm[i] += shift[i];
      out.terms.emplace(std::move(mm), p_scale(coef, c));
    }
    return out;
  }

  /// Partial derivative w.r.t. b_k (1-based).
  HomogeneousProfile db(int k) const {
    HomogeneousProfile out;
    out.L = L;
    out.degree = degree;
    for (const auto& [m, coef] : terms) {
      if (m[k - 1] == 0) continue;
      BIndex mm = m;
      mm[k - 1] -= 1;
      out.add_term(mm, p_scale(coef, static_cast<double>(m[k - 1])));
    }
    return out;
  }

  HomogeneousProfile lambda_applied() const {
    HomogeneousProfile out;
    out.L = L;
    out.degree = degree;
    for (const auto& [m, coef] : terms) out.terms.emplace(m, lambda_vec(coef));
    return out;
  }

  void accumulate(const HomogeneousProfile& other) {
    for (const auto& [m, coef] : other.terms) add_term(m, coef);
  }

  RadialPair eval(GridPtr grid, const std::vector<double>& b) const {
    RadialPair acc(zero_field(grid, 1), zero_field(grid, 1));
    for (const auto& [m, coef] : terms) acc = p_axpy(1.0, acc, bindex_eval(m, b), coef);
    return acc;
  }
};

/// T-profiles, the homogeneous corrections S_k, and the localization policy.
struct ProfileSet {
  std::shared_ptr<const LinOpContext> ctx;
  int d = 0, L = 0, ell = 0;
  double eta = 0.05;                   // B1 = B0^{1+eta}
  std::vector<RadialField> phi;        // phi_0 ... phi_{(L+2)/2}
  std::vector<RadialPair> T;           // T_0 ... T_{L+2}
  std::vector<HomogeneousProfile> S;   // S_0..S_{L+2}; [0],[1] empty

  double B0(double b1) const { return 1.0 / b1; }
  double B1(double b1) const { return std::pow(1.0 / b1, 1.0 + eta); }
};

/// phi_0 = LamQ, L phi_{k+1} = -phi_k.
inline std::vector<RadialField> make_phi_chain(const LinOpContext& ctx, int kmax) {
  std::vector<RadialField> phi;
  phi.push_back(ctx.gs->LamQ);
  for (int k = 0; k < kmax; ++k) phi.push_back(invert_L(ctx, f_scale(phi.back(), -1.0)));
  return phi;
}

/// Kernel generators of the powers of H: H T_{k+1} = -T_k, T_0 = (LamQ, 0),
/// realized as T_{2i} = (phi_i, 0), T_{2i+1} = (0, phi_i).
inline ProfileSet make_T_profiles(std::shared_ptr<const LinOpContext> ctx, int L, int ell,
                                  double eta = 0.05) {
  if (L < 1 || L % 2 == 0 || L > 7) throw contract_error("make_T_profiles: L must be odd, 1..7");
  ProfileSet ps;
  ps.ctx = std::move(ctx);
  ps.d = ps.ctx->d;
  ps.L = L;
  ps.ell = ell;
  ps.eta = eta;
  ps.phi = make_phi_chain(*ps.ctx, (L + 2) / 2);
  for (int k = 0; k <= L + 2; ++k) {
    const RadialField& f = ps.phi[k / 2];
    if (k % 2 == 0)
      ps.T.emplace_back(f, zero_field(ps.ctx->grid, 1));
    else
      ps.T.emplace_back(zero_field(ps.ctx->grid, 1), f);
  }
  ps.S.resize(L + 3);
  for (auto& s : ps.S) s.L = L;
  return ps;
}

struct AdmissReport {
  bool pass = false;
  bool zero_field = false;
  double near_exp = 0, near_expected = 0;
  double far_exp = 0, far_expected = 0;
  double far_dev = 0;  // fit quality; large values flag a corrupted tail
};

/// Near-origin leading power and far-field decay-exponent fit against the
/// declared degree.  The origin exponent may exceed the prediction (higher
/// Taylor coefficients can vanish); the tail exponent must not.
inline AdmissReport admissibility_check(const RadialPair& p, const DegreeTag& deg, double gamma) {
  AdmissReport rep;
  const RadialField& f = (deg.iota == 0) ? p.f1 : p.f2;
  const RadialField& other = (deg.iota == 0) ? p.f2 : p.f1;
  const RadialGrid& g = *f.grid;
  double scale = sup_abs(f, g.ymin(), g.ymax());
  if (sup_abs(other, g.ymin(), g.ymax()) > 1e-9 * std::max(scale, 1e-300)) return rep;  // fail
  if (scale == 0.0) {
    rep.pass = rep.zero_field = true;
    return rep;
  }
  rep.near_expected = deg.p1 - deg.iota + 1;
  rep.far_expected = deg.p2 - gamma - deg.iota;
  try {
    auto near = loglog_slope(f, 4.0 * g.ymin(), 40.0 * g.ymin());
    rep.near_exp = near.slope;
    auto far = loglog_slope(f, g.ymax() / 20.0, g.ymax() / 2.0);
    rep.far_exp = far.slope;
    rep.far_dev = far.max_dev;
  } catch (const numerical_error&) {
    return rep;  // not enough signal: fail
  }
  rep.pass = (rep.near_exp >= rep.near_expected - 0.35) &&
             (rep.far_exp <= rep.far_expected + 0.15) && (rep.far_dev <= 0.5);
  return rep;
}

namespace detail {

using ScalarPoly = std::map<BIndex, RadialField>;

inline void sp_add(ScalarPoly& a, const BIndex& m, const RadialField& f) {
  auto it = a.find(m);
  if (it == a.end())
    a.emplace(m, f);
  else
    it->second = f_add(it->second, f);
}

// product with truncation at total degree <= cap
inline ScalarPoly sp_mul(const ScalarPoly& a, const ScalarPoly& b, int cap) {
  ScalarPoly out;
  for (const auto& [ma, fa] : a)
    for (const auto& [mb, fb] : b) {
      BIndex m = ma;
      for (size_t i = 0; i < m.size(); ++i) m[i] += mb[i];
      if (bindex_degree(m) > cap) continue;
      sp_add(out, m, f_mul(fa, fb));
    }
  return out;
}

}  // namespace detail

/// Tail-computation recursion: S_1 = 0, S_k = -H^{-1} F_k with
/// F_k = E_{k-1} - (d-1)/(2y^2) P_k, where P_k collects the degree-k slice of
/// the Taylor expansion of the sin(2x) nonlinearity in the first-component
/// corrections.  The formal substitution (b_j)_s -> -(j-gamma) b_1 b_j +
/// b_{j+1} is applied inside E_k.
inline void build_S_profiles(ProfileSet& ps) {
  const LinOpContext& ctx = *ps.ctx;
  const int L = ps.L;
  const int cap = L + 2;
  const double gamma = ctx.gamma;
  GridPtr grid = ctx.grid;
  int n = grid->size();

  // (d-1)/(2y^2) * f^{(j)}(Q)/j! with f = sin(2x):
  //   f^{(j)} = 2^j sin(2Q + j pi/2).
  auto nonlinear_factor = [&](int j) {
    RadialField r(grid, std::vector<double>(n), (j % 2 == 0 ? 1 : 0) - 2);
    double fact = 1.0;
    for (int q = 2; q <= j; ++q) fact *= q;
    for (int i = 0; i < n; ++i) {
      double y = grid->y(i);
      double fj = std::pow(2.0, j) * std::sin(2.0 * ctx.gs->Q.v[i] + j * kPi / 2.0);
      r.v[i] = (ctx.d - 1.0) / (2.0 * y * y) * fj / fact;
    }
    return r;
  };

  // First-component corrections feeding the nonlinearity
  // (even-indexed T's scaled by b_k, then even-indexed S's as they appear).
  detail::ScalarPoly theta1;
  for (int k = 2; k <= L - 1; k += 2) {
    BIndex m(L, 0);
    m[k - 1] = 1;
    detail::sp_add(theta1, m, ps.T[k].f1);
  }

  auto e1 = [&]() {
    BIndex m(L, 0);
    m[0] = 1;
    return m;
  }();

  for (int k = 2; k <= L + 2; ++k) {
    // E_{k-1}
    HomogeneousProfile E;
    E.L = L;
    int km1 = k - 1;
    if (km1 >= 1 && km1 <= L) {
      RadialPair tk = ps.T[km1];
      RadialPair combo = p_axpy(1.0, lambda_vec(tk), -(km1 - gamma), tk);
      BIndex m(L, 0);
      m[0] += 1;
      m[km1 - 1] += 1;
      E.add_term(m, combo);
    }
    if (!ps.S[km1].empty()) {
      E.accumulate(ps.S[km1].lambda_applied().shifted(e1, 1.0));
      for (int j = 1; j <= L; ++j) {
        HomogeneousProfile dS = ps.S[km1].db(j);
        if (dS.empty()) continue;
        BIndex mj(L, 0);
        mj[0] = 1;
        mj[j - 1] += 1;
        E.accumulate(dS.shifted(mj, -(j - gamma)));  // -(j-gamma) b1 b_j dS/db_j
        if (j + 1 <= L) {
          BIndex mj1(L, 0);
          mj1[j] = 1;
          E.accumulate(dS.shifted(mj1, 1.0));  // + b_{j+1} dS/db_j
        }
      }
    }

    // P_k: degree-k slice of sum_j factor_j * theta1^j (only even k).
    detail::ScalarPoly Pk;
    if (k % 2 == 0) {
      detail::ScalarPoly pw = theta1;  // theta1^1
      for (int j = 2; j <= k; ++j) {
        pw = detail::sp_mul(pw, theta1, cap);
        if (pw.empty()) break;
        RadialField fac = nonlinear_factor(j);
        for (const auto& [m, fld] : pw)
          if (bindex_degree(m) == k) detail::sp_add(Pk, m, f_mul(fac, fld));
      }
    }

    // F_k = E_{k-1} - P_k (P enters the second component)
    HomogeneousProfile F = E;
    for (const auto& [m, fld] : Pk) {
      RadialPair pp(zero_field(grid, 1), f_scale(fld, -1.0));
      F.add_term(m, pp);
    }

    // S_k = -H^{-1} F_k = (-L^{-1} F_{k,2}, F_{k,1}) termwise.
    HomogeneousProfile S;
    S.L = L;
    S.degree = DegreeTag{k, k - 1.0, k % 2, k};
    for (const auto& [m, coef] : F.terms) {
      if (bindex_degree(m) != k)
        throw numerical_error("build_S_profiles: monomial degree ledger violation");
      RadialField first = (k % 2 == 0) ? f_scale(invert_L(ctx, coef.f2), -1.0)
                                       : zero_field(grid, k + 1);
      RadialField second = (k % 2 == 0) ? zero_field(grid, k + 1) : coef.f1;
      S.add_term(m, RadialPair(std::move(first), std::move(second)));
    }
    ps.S[k] = std::move(S);

    if (k % 2 == 0) {
      for (const auto& [m, coef] : ps.S[k].terms) detail::sp_add(theta1, m, coef.f1);
    }
  }
}

inline constexpr double kAprioriC = 10.0;  // |b_k| <= C b1^k admissible region

inline void check_b_region(const std::vector<double>& b, int L) {
  if (static_cast<int>(b.size()) != L) throw contract_error("b vector must have length L");
  if (!(b[0] > 0.0 && b[0] <= 0.1)) throw contract_error("b1 outside (0, 0.1]");
  double p = b[0];
  for (int k = 2; k <= L; ++k) {
    p *= b[0];
    if (std::abs(b[k - 1]) > kAprioriC * p) throw contract_error("b_k outside a-priori region");
  }
}

/// Q_b = Q + [chi_{B1}] (sum b_k T_k + sum S_k(b)).
inline RadialPair assemble_Qb(const ProfileSet& ps, const std::vector<double>& b, bool localize,
                              bool use_S = true) {
  check_b_region(b, ps.L);
  GridPtr grid = ps.ctx->grid;
  RadialPair theta(zero_field(grid, 1), zero_field(grid, 1));
  for (int k = 1; k <= ps.L; ++k) theta = p_axpy(1.0, theta, b[k - 1], ps.T[k]);
  if (use_S)
    for (int k = 2; k <= ps.L + 2; ++k)
      if (!ps.S[k].empty()) theta = p_axpy(1.0, theta, 1.0, ps.S[k].eval(grid, b));
  if (localize) {
    RadialField chi = cutoff_field(grid, ps.B1(b[0]));
    theta = RadialPair(f_mul(chi, theta.f1), f_mul(chi, theta.f2));
  }
  RadialPair qb = theta;
  qb.f1 = f_add(qb.f1, ps.ctx->gs->Q);
  qb.f1.lead = 1;
  return qb;
}

struct PsibReport {
  RadialPair psi;
  double B1 = 0;
  std::vector<double> norm_radii;   // {5, 10, 20}
  std::vector<double> local_norms;  // sqrt(int_{y<=M} |Psi|^2 y^{d-1} dy)
};

/// Residual of the renormalized flow at the localized profile:
/// Psi_b = d_s Q_b + lam_ratio * Lambda Q_b - F(Q_b) - chi_{B1} Mod, with
/// d_s taken through the b-dependence (chain rule with the supplied b_dot)
/// and through the b1-dependence of the localization radius.
inline PsibReport residual_Psib(const ProfileSet& ps, const std::vector<double>& b,
                                const std::vector<double>& bdot, double lam_ratio,
                                bool use_S = true) {
  check_b_region(b, ps.L);
  const LinOpContext& ctx = *ps.ctx;
  GridPtr grid = ctx.grid;
  int n = grid->size();
  int L = ps.L;
  double gamma = ctx.gamma;
  double B1v = ps.B1(b[0]);
  RadialField chi = cutoff_field(grid, B1v);

  // dQb/db_k (unlocalized) = T_k + sum_{j>k} dS_j/db_k
  std::vector<RadialPair> dQdb;
  for (int k = 1; k <= L; ++k) {
    RadialPair acc = ps.T[k];
    if (use_S)
      for (int j = 2; j <= L + 2; ++j) {
        if (ps.S[j].empty()) continue;
        HomogeneousProfile dS = ps.S[j].db(k);
        if (!dS.empty()) acc = p_axpy(1.0, acc, 1.0, dS.eval(grid, b));
      }
    dQdb.push_back(std::move(acc));
  }

  RadialPair theta(zero_field(grid, 1), zero_field(grid, 1));
  for (int k = 1; k <= L; ++k) theta = p_axpy(1.0, theta, b[k - 1], ps.T[k]);
  if (use_S)
    for (int k = 2; k <= L + 2; ++k)
      if (!ps.S[k].empty()) theta = p_axpy(1.0, theta, 1.0, ps.S[k].eval(grid, b));

  RadialPair qb(f_add(ps.ctx->gs->Q, f_mul(chi, theta.f1)), f_mul(chi, theta.f2));
  qb.f1.lead = 1;

  // d_s of the cutoff: chi'(y/B1) * y * d(1/B1)/ds
  double dB1inv_ds = (1.0 + ps.eta) * std::pow(b[0], ps.eta) * bdot[0];
  std::vector<double> dchi_ds(n);
  for (int i = 0; i < n; ++i)
    dchi_ds[i] = Cutoff::chi1(grid->y(i) / B1v) * grid->y(i) * dB1inv_ds;

  // assemble Psi componentwise
  RadialPair lam_qb = lambda_vec(qb);
  std::vector<double> psi1(n), psi2(n);
  for (int i = 0; i < n; ++i) {
    double y = grid->y(i);
    double ds1 = dchi_ds[i] * theta.f1.v[i];
    double ds2 = dchi_ds[i] * theta.f2.v[i];
    double mod1 = 0.0, mod2 = 0.0;
    for (int k = 1; k <= L; ++k) {
      double modk = bdot[k - 1] + (k - gamma) * b[0] * b[k - 1] - (k < L ? b[k] : 0.0);
      ds1 += chi.v[i] * bdot[k - 1] * dQdb[k - 1].f1.v[i];
      ds2 += chi.v[i] * bdot[k - 1] * dQdb[k - 1].f2.v[i];
      mod1 += chi.v[i] * modk * dQdb[k - 1].f1.v[i];
      mod2 += chi.v[i] * modk * dQdb[k - 1].f2.v[i];
    }
    double F1 = qb.f2.v[i];
    double F2 = qb.f1.d2[i] + (ps.d - 1.0) / y * qb.f1.d1[i] -
                (ps.d - 1.0) / (2.0 * y * y) * std::sin(2.0 * qb.f1.v[i]);
    psi1[i] = ds1 + lam_ratio * lam_qb.f1.v[i] - F1 - mod1;
    psi2[i] = ds2 + lam_ratio * lam_qb.f2.v[i] - F2 - mod2;
  }
  PsibReport rep;
  rep.B1 = B1v;
  rep.psi = RadialPair(RadialField(grid, std::move(psi1), 1), RadialField(grid, std::move(psi2), 1));
  rep.norm_radii = {5.0, 10.0, 20.0};
  for (double M : rep.norm_radii)
    rep.local_norms.push_back(std::sqrt(inner(rep.psi, rep.psi, grid->ymin(), M)));
  return rep;
}

}  // namespace wmlab
