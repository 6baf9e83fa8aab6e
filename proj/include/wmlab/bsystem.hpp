#pragma once

#include <cmath>
#include <vector>

#include "wmlab/core/eig.hpp"
#include "wmlab/core/fit.hpp"
#include "wmlab/core/ode.hpp"

namespace wmlab {

/// Parameters of the modulation system: the exponent pair (ell, gamma) and
/// the coefficients of the explicit solution b_k^e(s) = c_k / s^k with
/// c_1 = ell/(ell-gamma), c_{k+1} = -gamma (ell-k) c_k / (ell-gamma), and
/// c_j = 0 past j = ell.
struct BParams {
  int ell = 0;
  int L = 0;
  double gamma = 0;
  std::vector<double> c;  // c[k-1] = c_k, k = 1..L
};

inline BParams make_bparams(double gamma, int ell, int L) {
  if (!(ell > gamma)) throw contract_error("make_bparams: need ell > gamma");
  if (L < ell || L % 2 == 0) throw contract_error("make_bparams: L must be odd and >= ell");
  BParams p;
  p.ell = ell;
  p.L = L;
  p.gamma = gamma;
  p.c.assign(L, 0.0);
  p.c[0] = ell / (ell - gamma);
  for (int k = 1; k <= ell - 1; ++k) p.c[k] = -gamma * (ell - k) / (ell - gamma) * p.c[k - 1];
  return p;
}

inline std::vector<double> explicit_solution(const BParams& p, double s) {
  if (!(s > 0.0)) throw contract_error("explicit_solution: s must be positive");
  std::vector<double> b(p.L, 0.0);
  double sk = s;
  for (int k = 1; k <= p.L; ++k) {
    b[k - 1] = p.c[k - 1] / sk;
    sk *= s;
  }
  return b;
}

/// (b_k)_s = -(k-gamma) b1 b_k + b_{k+1}, b_{L+1} = 0.
inline std::vector<double> bsys_rhs(const BParams& p, const std::vector<double>& b) {
  std::vector<double> db(p.L, 0.0);
  for (int k = 1; k <= p.L; ++k)
    db[k - 1] = -(k - p.gamma) * b[0] * b[k - 1] + (k < p.L ? b[k] : 0.0);
  return db;
}

/// Linearization data at b^e: the ell x ell matrix A with
/// s (U_k)_s = (A U)_k + O(|U|^2), its diagonalization A = P^{-1} D P, and
/// the expected spectrum {-1} union {k gamma/(ell-gamma), k=2..ell}.
struct SpectralData {
  int ell = 0;
  Mat A, P, Pinv;
  std::vector<double> D;           // computed eigenvalues, ascending
  std::vector<double> D_expected;  // closed-form spectrum, ascending
};

inline SpectralData build_A_ell(int ell, double gamma) {
  if (ell < 2) throw contract_error("build_A_ell: need ell >= 2");
  if (!(gamma < ell)) throw contract_error("build_A_ell: need gamma < ell");
  BParams p = make_bparams(gamma, ell, (ell % 2 == 1) ? ell : ell + 1);
  SpectralData sd;
  sd.ell = ell;
  sd.A = Mat(ell);
  for (int k = 1; k <= ell; ++k) {
    sd.A(k - 1, k - 1) = gamma * (ell - k) / (ell - gamma);
    if (k >= 2) sd.A(k - 1, 0) += -(k - gamma) * p.c[k - 1];
    else sd.A(0, 0) += -(1.0 - gamma) * p.c[0];
    if (k <= ell - 1) sd.A(k - 1, k) = 1.0;
  }
  auto eg = eig_small(sd.A);
  sd.D = eg.values;
  sd.D_expected.push_back(-1.0);
  for (int k = 2; k <= ell; ++k) sd.D_expected.push_back(k * gamma / (ell - gamma));
  std::sort(sd.D_expected.begin(), sd.D_expected.end());
  // P maps U to diagonal coordinates V = P U; columns of P^{-1} are the
  // right eigenvectors in spectral order.
  sd.Pinv = Mat(ell);
  for (int j = 0; j < ell; ++j)
    for (int i = 0; i < ell; ++i) sd.Pinv(i, j) = eg.vectors[j][i];
  sd.P = mat_inverse(sd.Pinv);
  return sd;
}

// --- change of variables -----------------------------------------------

/// U_k = s^k b_k - c_k (components k = 1..ell).
inline std::vector<double> b_to_U(const BParams& p, const std::vector<double>& b, double s) {
  std::vector<double> U(p.ell);
  double sk = s;
  for (int k = 1; k <= p.ell; ++k) {
    U[k - 1] = sk * b[k - 1] - p.c[k - 1];
    sk *= s;
  }
  return U;
}

inline std::vector<double> U_to_b(const BParams& p, const std::vector<double>& U, double s) {
  std::vector<double> b(p.L, 0.0);
  double sk = s;
  for (int k = 1; k <= p.L; ++k) {
    double Uk = (k <= p.ell) ? U[k - 1] : 0.0;
    b[k - 1] = (p.c[k - 1] + Uk) / sk;
    sk *= s;
  }
  return b;
}

inline std::vector<double> U_to_V(const SpectralData& sd, const std::vector<double>& U) {
  return mat_vec(sd.P, U);
}
inline std::vector<double> V_to_U(const SpectralData& sd, const std::vector<double>& V) {
  return mat_vec(sd.Pinv, V);
}

// --- trajectories --------------------------------------------------------

struct Trajectory {
  std::vector<double> s, lam, t;
  std::vector<std::vector<double>> b;
  IvpStatus status = IvpStatus::ok;
  double slope_s = 0;   // d log lam / d log s over the last decade
  double T_est = 0;     // extrapolated blow-up time
  double slope_t = 0;   // d log lam / d log(T-t)
};

/// Integrate (b, lambda, t) from s0 to s_end with geometric checkpoints and
/// fit the scaling laws lambda(s) ~ s^{-ell/(ell-gamma)} and
/// lambda(t) ~ (T-t)^{ell/gamma}.
inline Trajectory integrate_trajectory(const BParams& p, std::vector<double> b0, double lam0,
                                       double s0, double s_end, double tol = 1e-10) {
  if (!(lam0 > 0.0) || !(s_end > s0)) throw contract_error("integrate_trajectory: bad span");
  OdeRhs rhs = [&p](double, const Vec& y, Vec& dy) {
    dy.assign(p.L + 2, 0.0);
    for (int k = 1; k <= p.L; ++k)
      dy[k - 1] = -(k - p.gamma) * y[0] * y[k - 1] + (k < p.L ? y[k] : 0.0);
    dy[p.L] = -y[0] * y[p.L];      // lambda' = -b1 lambda
    dy[p.L + 1] = y[p.L];          // t' = lambda
  };
  Vec y(b0);
  y.push_back(lam0);
  y.push_back(0.0);

  Trajectory tr;
  IvpOptions opt;
  opt.rel_tol = tol;
  opt.abs_tol = tol * 1e-2;
  opt.record = false;
  opt.stop = [&p](double, const Vec& yy) {
    if (!(yy[0] > 0.0)) return true;  // left the blowup regime
    for (int k = 0; k < p.L; ++k)
      if (std::abs(yy[k]) > 1e6) return true;
    return false;
  };

  const double ratio = std::pow(2.0, 0.125);
  double s = s0;
  auto push = [&](double sv, const Vec& yy) {
    tr.s.push_back(sv);
    tr.b.emplace_back(yy.begin(), yy.begin() + p.L);
    tr.lam.push_back(yy[p.L]);
    tr.t.push_back(yy[p.L + 1]);
  };
  push(s, y);
  while (s < s_end) {
    double s_next = std::min(s * ratio, s_end);
    auto r = solve_ivp(rhs, y, s, s_next, opt);
    tr.status = r.status;
    if (r.status != IvpStatus::ok) {
      push(r.t_last, r.y_last);
      return tr;
    }
    s = s_next;
    y = r.y_last;
    push(s, y);
  }

  // scaling-law fits
  std::vector<double> ls, ll;
  for (size_t i = 0; i < tr.s.size(); ++i) {
    if (tr.s[i] < s_end / 10.0) continue;
    ls.push_back(std::log(tr.s[i]));
    ll.push_back(std::log(tr.lam[i]));
  }
  tr.slope_s = fit_line(ls, ll).slope;

  auto t_at = [&](double sv) {
    size_t best = 0;
    for (size_t i = 0; i < tr.s.size(); ++i)
      if (std::abs(tr.s[i] - sv) < std::abs(tr.s[best] - sv)) best = i;
    return tr.t[best];
  };
  tr.T_est = aitken_limit(t_at(s_end / 4.0), t_at(s_end / 2.0), t_at(s_end));

  std::vector<double> lt, lv;
  for (size_t i = 0; i < tr.s.size(); ++i) {
    if (tr.s[i] < s_end / 10.0 || tr.s[i] > s_end / 2.0) continue;
    double dt = tr.T_est - tr.t[i];
    if (dt <= 0.0) continue;
    lt.push_back(std::log(dt));
    lv.push_back(std::log(tr.lam[i]));
  }
  tr.slope_t = fit_line(lt, lv).slope;
  return tr;
}

// --- shooting over the unstable modes ------------------------------------

// The trapped trajectory sits at V = 0 up to double-precision-invisible
// corrections of b^e, so the search integrates the exact system in the
// normalized variables U_k = s^k b_k - c_k:
//   s (U_k)_s = k U_k - (k-gamma)(c_1 U_k + c_k U_1 + U_1 U_k) + U_{k+1},
// which resolves perturbations far below the b-representation floor.

struct UTrajPoint {
  double s = 0;
  std::vector<double> V;   // spectral coordinates, size ell
  std::vector<double> Vs;  // d V / d s
};

struct ShootCandidate {
  std::vector<double> v_init;  // V_2..V_ell at s0
  bool trapped = false;
  double s_exit = 0;
  int exit_coord = 0;          // 1-based V index that left the box
  double exit_sign = 0;
  double transverse = 0;       // d/ds sum_{i>=2} (s^beta V_i)^2 at exit
};

struct ShootResult {
  bool trapped = false;
  std::vector<double> v_init;
  int levels = 0;
  std::vector<double> bracket_width;   // per level
  std::vector<ShootCandidate> rejected;
};

namespace detail {

struct UShooter {
  const BParams& p;
  const SpectralData& sd;
  double s0, s_end, beta;

  // state: (U_1..U_L); tau = log(s/s0)
  void rhs(double /*tau*/, const Vec& U, Vec& dU) const {
    int L = p.L;
    dU.assign(L, 0.0);
    for (int k = 1; k <= L; ++k) {
      double ck = p.c[k - 1];
      double up = (k < L) ? U[k] : 0.0;
      dU[k - 1] = k * U[k - 1] -
                  (k - p.gamma) * (p.c[0] * U[k - 1] + ck * U[0] + U[0] * U[k - 1]) + up;
    }
  }

  std::vector<double> Vof(const Vec& U) const {
    std::vector<double> u(U.begin(), U.begin() + p.ell);
    return mat_vec(sd.P, u);
  }

  bool outside_box(double s, const Vec& U) const {
    auto V = Vof(U);
    double box = std::pow(s, -beta);
    for (int i = 0; i < p.ell; ++i)
      if (std::abs(V[i]) > box) return true;
    return false;
  }

  // integrate from V-init (V_1 = 0, V_2..V_ell given); returns candidate info
  ShootCandidate run(const std::vector<double>& v_tail) const {
    std::vector<double> V0(p.ell, 0.0);
    for (int i = 2; i <= p.ell; ++i) V0[i - 1] = v_tail[i - 2];
    auto U0 = mat_vec(sd.Pinv, V0);
    Vec y(p.L, 0.0);
    for (int i = 0; i < p.ell; ++i) y[i] = U0[i];

    OdeRhs f = [this](double tau, const Vec& u, Vec& du) { rhs(tau, u, du); };
    IvpOptions opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-30;  // U components live far below 1
    opt.record = false;
    opt.stop = [this](double tau, const Vec& u) { return outside_box(s0 * std::exp(tau), u); };
    auto r = solve_ivp(f, y, 0.0, std::log(s_end / s0), opt);

    ShootCandidate cand;
    cand.v_init = v_tail;
    if (r.status == IvpStatus::ok) {
      cand.trapped = true;
      cand.s_exit = s_end;
      return cand;
    }
    double s_exit = s0 * std::exp(r.t_last);
    cand.s_exit = s_exit;
    auto V = Vof(r.y_last);
    double box = std::pow(s_exit, -beta);
    cand.exit_coord = 1;
    double worst = 0.0;
    for (int i = 0; i < p.ell; ++i) {
      double ratio = std::abs(V[i]) / box;
      if (ratio > worst) {
        worst = ratio;
        cand.exit_coord = i + 1;
        cand.exit_sign = V[i] > 0 ? 1.0 : -1.0;
      }
    }
    // transverse derivative of sum_{i>=2} (s^beta V_i)^2 at the exit point
    Vec dU;
    rhs(r.t_last, r.y_last, dU);
    std::vector<double> du(dU.begin(), dU.begin() + p.ell);
    auto Vs = mat_vec(sd.P, du);  // dV/dtau
    double D = 0.0;
    for (int i = 2; i <= p.ell; ++i) {
      double vi = V[i - 1];
      double vis = Vs[i - 1] / s_exit;  // dV/ds
      double sb = std::pow(s_exit, beta);
      D += 2.0 * (sb * vi) * (sb * (beta * vi / s_exit + vis));
    }
    cand.transverse = D;
    return cand;
  }
};

}  // namespace detail

/// Nested bisection (ell = 2) or coordinate-wise nested search (ell = 3) for
/// initial unstable-mode data keeping the trajectory inside the shrinking box
/// |V_k(s)| <= s^{-box_exponent} up to s_end.
inline ShootResult shoot_unstable(const BParams& p, const SpectralData& sd, double s0,
                                  double s_end, double box_exponent, int max_levels = 80) {
  if (p.ell < 2 || p.ell > 3) throw contract_error("shoot_unstable: ell must be 2 or 3");
  if (!(box_exponent > 0.0)) throw contract_error("shoot_unstable: box exponent must be positive");
  detail::UShooter sh{p, sd, s0, s_end, box_exponent};
  ShootResult res;
  double w0 = std::pow(s0, -box_exponent);

  if (p.ell == 2) {
    double lo = -w0, hi = w0;
    auto clo = sh.run({lo}), chi_ = sh.run({hi});
    if (clo.trapped) { res.trapped = true; res.v_init = {lo}; return res; }
    if (chi_.trapped) { res.trapped = true; res.v_init = {hi}; return res; }
    res.rejected.push_back(clo);
    res.rejected.push_back(chi_);
    if (clo.exit_sign == chi_.exit_sign)
      throw numerical_error("shoot_unstable: endpoints exit on the same side");
    for (int lvl = 0; lvl < max_levels; ++lvl) {
      double mid = 0.5 * (lo + hi);
      auto c = sh.run({mid});
      res.levels = lvl + 1;
      res.bracket_width.push_back(hi - lo);
      if (c.trapped) {
        res.trapped = true;
        res.v_init = {mid};
        return res;
      }
      res.rejected.push_back(c);
      if (c.exit_sign == clo.exit_sign) lo = mid; else hi = mid;
    }
    throw numerical_error("shoot_unstable: no trapped trajectory at bisection resolution; bracket [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

  // ell = 3: alternate bisection on the coordinate that exits.
  double lo2 = -w0, hi2 = w0, lo3 = -w0, hi3 = w0;
  double v2 = 0.0, v3 = 0.0;
  for (int lvl = 0; lvl < max_levels; ++lvl) {
    v2 = 0.5 * (lo2 + hi2);
    v3 = 0.5 * (lo3 + hi3);
    auto c = sh.run({v2, v3});
    res.levels = lvl + 1;
    res.bracket_width.push_back(std::max(hi2 - lo2, hi3 - lo3));
    if (c.trapped) {
      res.trapped = true;
      res.v_init = {v2, v3};
      return res;
    }
    res.rejected.push_back(c);
    if (c.exit_coord == 3) {
      if (c.exit_sign > 0) hi3 = v3; else lo3 = v3;
    } else {
      if (c.exit_sign > 0) hi2 = v2; else lo2 = v2;
    }
  }
  throw numerical_error("shoot_unstable: no trapped trajectory at search resolution");
}

}  // namespace wmlab
