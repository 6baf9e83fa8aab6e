#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

namespace wmlab {

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct contract_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Marker for "leading power at the origin not known".
inline constexpr int kLeadUnset = std::numeric_limits<int>::min();

using Vec = std::vector<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

namespace detail {

// Fornberg's algorithm: weights of the m-th derivative at x0 for the given
// nodes.  (B. Fornberg, "Generation of finite difference formulas on
// arbitrarily spaced grids", Math. Comp. 51 (1988).)
inline std::vector<double> fd_weights(double x0, const double* x, int n, int m) {
  std::vector<double> c(static_cast<size_t>(n) * (m + 1), 0.0);
  auto C = [&](int i, int j) -> double& { return c[static_cast<size_t>(i) * (m + 1) + j]; };
  double c1 = 1.0;
  double c4 = x[0] - x0;
  C(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
        C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
      C(j, 0) = c4 * C(j, 0) / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = C(i, m);
  return w;
}

}  // namespace detail

/// Strictly increasing radial nodes with the ambient dimension d >= 7.
/// Quadratures elsewhere integrate against the measure y^{d-1} dy.
/// Per-node 5-point stencil weights (orders 1 and 2) and per-interval cubic
/// quadrature weights are precomputed; instances are immutable.
class RadialGrid {
 public:
  RadialGrid(std::vector<double> nodes, int dim) : y_(std::move(nodes)), d_(dim) {
    if (d_ < 7) throw contract_error("RadialGrid: dimension must be >= 7");
    if (y_.size() < 5) throw contract_error("RadialGrid: need at least 5 nodes");
    if (y_.front() < 0.0) throw contract_error("RadialGrid: nodes must satisfy y >= 0");
    for (size_t i = 1; i < y_.size(); ++i)
      if (!(y_[i] > y_[i - 1])) throw contract_error("RadialGrid: nodes must be strictly increasing");
    build_tables();
  }

  static std::shared_ptr<const RadialGrid> uniform(double a, double b, int n, int dim) {
    std::vector<double> ys(n);
    for (int i = 0; i < n; ++i) ys[i] = a + (b - a) * i / (n - 1);
    ys.back() = b;
    return std::make_shared<const RadialGrid>(std::move(ys), dim);
  }

  // Uniform spacing h_core on [h_core, core_end], then a geometric tail with
  // ratio <= ratio_cap out to ymax.  Profiles decay like powers of y, so the
  // tail needs decades of y, not resolution.
  static std::shared_ptr<const RadialGrid> standard(int dim, double ymax = 1e3,
                                                    double h_core = 1e-3,
                                                    double core_end = 10.0,
                                                    double ratio_cap = 1.01) {
    std::vector<double> ys;
    int n_core = static_cast<int>(std::llround(core_end / h_core));
    ys.reserve(n_core + 600);
    for (int i = 1; i <= n_core; ++i) ys.push_back(i * h_core);
    int n_geo = static_cast<int>(std::ceil(std::log(ymax / core_end) / std::log(ratio_cap)));
    double ratio = std::pow(ymax / core_end, 1.0 / n_geo);
    double y = core_end;
    for (int i = 1; i <= n_geo; ++i) {
      y *= ratio;
      ys.push_back(i == n_geo ? ymax : y);
    }
    return std::make_shared<const RadialGrid>(std::move(ys), dim);
  }

  int dim() const { return d_; }
  int size() const { return static_cast<int>(y_.size()); }
  double y(int i) const { return y_[i]; }
  const std::vector<double>& nodes() const { return y_; }
  double ymin() const { return y_.front(); }
  double ymax() const { return y_.back(); }

  /// Index i with y_[i] <= v < y_[i+1], clamped to [0, size-2].
  int locate(double v) const {
    auto it = std::upper_bound(y_.begin(), y_.end(), v);
    int i = static_cast<int>(it - y_.begin()) - 1;
    return std::clamp(i, 0, size() - 2);
  }

  int nearest(double v) const {
    int i = locate(v);
    return (v - y_[i] <= y_[i + 1] - v) ? i : i + 1;
  }

  // Stencil start index and weights for d^m/dy^m at node i (5 points).
  int stencil_start(int i) const { return std::clamp(i - 2, 0, size() - 5); }
  const double* dw1(int i) const { return &dw1_[5 * static_cast<size_t>(i)]; }
  const double* dw2(int i) const { return &dw2_[5 * static_cast<size_t>(i)]; }

  // Quadrature over interval i = [y_i, y_{i+1}]: integral of the cubic through
  // nodes qstart(i)..qstart(i)+3.  Exact for cubics, O(h^5) local error.
  int qstart(int i) const { return std::clamp(i - 1, 0, size() - 4); }
  const double* qw(int i) const { return &qw_[4 * static_cast<size_t>(i)]; }

  // Measure-aware variant: weights against y^{d-1} dy, i.e. integral over the
  // interval of y^{d-1} times the cubic through the same nodes.  Exact for
  // cubic integrands times the measure.
  const double* mw(int i) const { return &mw_[4 * static_cast<size_t>(i)]; }

 private:
  void build_tables() {
    int n = size();
    dw1_.resize(5 * static_cast<size_t>(n));
    dw2_.resize(5 * static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      int s = stencil_start(i);
      auto w1 = detail::fd_weights(y_[i], &y_[s], 5, 1);
      auto w2 = detail::fd_weights(y_[i], &y_[s], 5, 2);
      std::copy(w1.begin(), w1.end(), dw1_.begin() + 5 * static_cast<size_t>(i));
      std::copy(w2.begin(), w2.end(), dw2_.begin() + 5 * static_cast<size_t>(i));
    }
    // Gauss-Legendre applied to each Lagrange basis polynomial.  Two points
    // suffice for the plain rule (exact for the interpolating cubic); nine
    // points make the measure-aware rule exact for y^{d-1} * cubic through
    // degree 17, i.e. any d <= 15.
    qw_.assign(4 * static_cast<size_t>(n - 1), 0.0);
    mw_.assign(4 * static_cast<size_t>(n - 1), 0.0);
    const double gx2[2] = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
    const double gx9[9] = {0.0,
                           -0.3242534234038089, 0.3242534234038089,
                           -0.6133714327005904, 0.6133714327005904,
                           -0.8360311073266358, 0.8360311073266358,
                           -0.9681602395076261, 0.9681602395076261};
    const double gw9[9] = {0.3302393550012598,
                           0.3123470770400029, 0.3123470770400029,
                           0.2606106964029354, 0.2606106964029354,
                           0.1806481606948574, 0.1806481606948574,
                           0.0812743883615744, 0.0812743883615744};
    for (int i = 0; i + 1 < n; ++i) {
      int s = qstart(i);
      double a = y_[i], b = y_[i + 1];
      double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      auto lbasis = [&](int j, double x) {
        double lj = 1.0;
        for (int k = 0; k < 4; ++k)
          if (k != j) lj *= (x - y_[s + k]) / (y_[s + j] - y_[s + k]);
        return lj;
      };
      for (int g = 0; g < 2; ++g) {
        double x = mid + half * gx2[g];
        for (int j = 0; j < 4; ++j) qw_[4 * static_cast<size_t>(i) + j] += half * lbasis(j, x);
      }
      for (int g = 0; g < 9; ++g) {
        double x = mid + half * gx9[g];
        double meas = std::pow(x, d_ - 1);
        for (int j = 0; j < 4; ++j)
          mw_[4 * static_cast<size_t>(i) + j] += half * gw9[g] * meas * lbasis(j, x);
      }
    }
  }

  std::vector<double> y_;
  int d_;
  std::vector<double> dw1_, dw2_, qw_, mw_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Node-sampled radial field.  `d1`/`d2` are optional tabulated derivatives
/// (filled by solvers that know them in closed form; empty otherwise).
/// `lead` is the leading power at the origin, f ~ c y^lead as y -> 0; a lower
/// bound is acceptable, kLeadUnset means unknown.
struct RadialField {
  GridPtr grid;
  std::vector<double> v;
  std::vector<double> d1, d2;
  int lead = kLeadUnset;

  RadialField() = default;
  RadialField(GridPtr g, std::vector<double> vals, int lead_power = kLeadUnset)
      : grid(std::move(g)), v(std::move(vals)), lead(lead_power) {
    if (grid && v.size() != static_cast<size_t>(grid->size()))
      throw contract_error("RadialField: value/node count mismatch");
  }

  bool has_d1() const { return !d1.empty(); }
  bool has_d2() const { return !d2.empty(); }
  int size() const { return grid ? grid->size() : 0; }

  template <class F>
  static RadialField sample(GridPtr g, F&& f, int lead_power = kLeadUnset) {
    std::vector<double> vals(g->size());
    for (int i = 0; i < g->size(); ++i) vals[i] = f(g->y(i));
    return RadialField(std::move(g), std::move(vals), lead_power);
  }

  void check_finite(const char* who) const {
    for (double x : v)
      if (!std::isfinite(x)) throw numerical_error(std::string(who) + ": non-finite field value");
  }
};

/// Two-component radial field on a shared grid.
struct RadialPair {
  RadialField f1, f2;

  RadialPair() = default;
  RadialPair(RadialField a, RadialField b) : f1(std::move(a)), f2(std::move(b)) {
    if (f1.grid && f2.grid && f1.grid->size() != f2.grid->size())
      throw contract_error("RadialPair: components on different grids");
  }
  GridPtr grid() const { return f1.grid ? f1.grid : f2.grid; }
};

inline RadialField zero_field(GridPtr g, int lead = 1) {
  std::vector<double> z(g->size(), 0.0);
  RadialField f(std::move(g), std::move(z), lead);
  f.d1.assign(f.v.size(), 0.0);
  f.d2.assign(f.v.size(), 0.0);
  return f;
}

}  // namespace wmlab
