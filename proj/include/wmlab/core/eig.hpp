#pragma once

#include <cmath>
#include <vector>

#include "wmlab/core/grid.hpp"

namespace wmlab {

/// Dense row-major matrix, small (n <= ~12).
struct Mat {
  int n = 0;
  std::vector<double> a;
  Mat() = default;
  explicit Mat(int size) : n(size), a(static_cast<size_t>(size) * size, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

inline Mat mat_identity(int n) {
  Mat m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

inline Mat mat_mul(const Mat& A, const Mat& B) {
  Mat C(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int k = 0; k < A.n; ++k) {
      double aik = A(i, k);
      for (int j = 0; j < A.n; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

inline Vec mat_vec(const Mat& A, const Vec& x) {
  Vec y(A.n, 0.0);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) y[i] += A(i, j) * x[j];
  return y;
}

inline double mat_norm(const Mat& A) {
  double m = 0.0;
  for (double x : A.a) m = std::max(m, std::abs(x));
  return m;
}

/// LU factorization with partial pivoting; solves A x = b in place.
inline Vec solve_linear(Mat A, Vec b) {
  int n = A.n;
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A(i, k)) > std::abs(A(p, k))) p = i;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(A(k, j), A(p, j));
      std::swap(b[k], b[p]);
    }
    if (A(k, k) == 0.0) throw numerical_error("solve_linear: singular matrix");
    for (int i = k + 1; i < n; ++i) {
      double m = A(i, k) / A(k, k);
      A(i, k) = 0.0;
      for (int j = k + 1; j < n; ++j) A(i, j) -= m * A(k, j);
      b[i] -= m * b[k];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= A(i, j) * b[j];
    b[i] = s / A(i, i);
  }
  return b;
}

inline Mat mat_inverse(const Mat& A) {
  Mat inv(A.n);
  for (int j = 0; j < A.n; ++j) {
    Vec e(A.n, 0.0);
    e[j] = 1.0;
    Vec col = solve_linear(A, e);
    for (int i = 0; i < A.n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

struct EigResult {
  std::vector<double> values;             // ascending
  std::vector<Vec> vectors;               // vectors[j]: right eigenvector, |v|=1
};

namespace detail {

inline void hessenberg(Mat& H) {
  int n = H.n;
  for (int k = 0; k < n - 2; ++k) {
    double nrm = 0.0;
    for (int i = k + 1; i < n; ++i) nrm += H(i, k) * H(i, k);
    nrm = std::sqrt(nrm);
    if (nrm < 1e-300) continue;
    double alpha = H(k + 1, k) >= 0 ? -nrm : nrm;
    Vec v(n, 0.0);
    v[k + 1] = H(k + 1, k) - alpha;
    for (int i = k + 2; i < n; ++i) v[i] = H(i, k);
    double vn2 = 0.0;
    for (int i = k + 1; i < n; ++i) vn2 += v[i] * v[i];
    if (vn2 < 1e-300) continue;
    // H <- P H P with P = I - 2 v v^T / (v^T v)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = k + 1; i < n; ++i) s += v[i] * H(i, j);
      s *= 2.0 / vn2;
      for (int i = k + 1; i < n; ++i) H(i, j) -= s * v[i];
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = k + 1; j < n; ++j) s += H(i, j) * v[j];
      s *= 2.0 / vn2;
      for (int j = k + 1; j < n; ++j) H(i, j) -= s * v[j];
    }
  }
}

}  // namespace detail

/// Eigenpairs of a small real matrix (n <= 10) with real spectrum.
/// Shifted QR iteration on the Hessenberg form, then inverse iteration for
/// the eigenvectors.  Residuals satisfy |Av - lambda v| <= 1e-10 |A| |v|.
inline EigResult eig_small(const Mat& A0) {
  int n = A0.n;
  if (n < 1 || n > 10) throw contract_error("eig_small: need 1 <= n <= 10");
  Mat H = A0;
  detail::hessenberg(H);
  double anorm = std::max(mat_norm(A0), 1e-300);

  std::vector<double> evals;
  int m = n;
  int iter = 0;
  const int max_iter = 500;
  while (m > 0) {
    if (++iter > max_iter) throw numerical_error("eig_small: QR iteration failed to converge");
    // deflation check
    int l = m - 1;
    while (l > 0 && std::abs(H(l, l - 1)) >
                        1e-15 * (std::abs(H(l, l)) + std::abs(H(l - 1, l - 1)) + 1e-300))
      --l;
    if (l == m - 1) {
      evals.push_back(H(m - 1, m - 1));
      --m;
      continue;
    }
    if (l == m - 2) {
      // 2x2 block: split analytically.
      double a = H(m - 2, m - 2), b = H(m - 2, m - 1), c = H(m - 1, m - 2), d = H(m - 1, m - 1);
      double tr = a + d, det = a * d - b * c;
      double disc = tr * tr / 4.0 - det;
      if (disc < -1e-12 * anorm * anorm)
        throw numerical_error("eig_small: complex eigenvalue pair encountered");
      double sq = std::sqrt(std::max(disc, 0.0));
      evals.push_back(tr / 2.0 - sq);
      evals.push_back(tr / 2.0 + sq);
      m -= 2;
      continue;
    }
    // Wilkinson shift from the trailing 2x2 of the active block.
    double a = H(m - 2, m - 2), b = H(m - 2, m - 1), c = H(m - 1, m - 2), d = H(m - 1, m - 1);
    double tr = a + d, det = a * d - b * c;
    double disc = tr * tr / 4.0 - det;
    double mu;
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      double e1 = tr / 2.0 - sq, e2 = tr / 2.0 + sq;
      mu = (std::abs(e1 - d) < std::abs(e2 - d)) ? e1 : e2;
    } else {
      mu = d;  // complex pair in the corner; shift by the real part
    }
    if (iter % 37 == 0) mu += 1e-3 * anorm;  // exceptional shift on stagnation
    // Shifted QR sweep via Givens rotations on the active Hessenberg block.
    std::vector<double> cs(m), sn(m);
    for (int k = 0; k < m; ++k) H(k, k) -= mu;
    for (int k = 0; k < m - 1; ++k) {
      double x = H(k, k), z = H(k + 1, k);
      double r = std::hypot(x, z);
      double ck = (r == 0.0) ? 1.0 : x / r, sk = (r == 0.0) ? 0.0 : z / r;
      cs[k] = ck;
      sn[k] = sk;
      for (int j = k; j < m; ++j) {
        double t1 = H(k, j), t2 = H(k + 1, j);
        H(k, j) = ck * t1 + sk * t2;
        H(k + 1, j) = -sk * t1 + ck * t2;
      }
    }
    for (int k = 0; k < m - 1; ++k) {
      for (int i = 0; i <= std::min(k + 2, m - 1); ++i) {
        double t1 = H(i, k), t2 = H(i, k + 1);
        H(i, k) = cs[k] * t1 + sn[k] * t2;
        H(i, k + 1) = -sn[k] * t1 + cs[k] * t2;
      }
    }
    for (int k = 0; k < m; ++k) H(k, k) += mu;
  }

  std::sort(evals.begin(), evals.end());
  EigResult res;
  res.values = evals;
  // Inverse iteration on the original matrix for each eigenvalue.
  for (int j = 0; j < n; ++j) {
    double lam = evals[j];
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + i + j);  // deterministic start
    double shift_eps = 1e-11 * anorm;
    for (int it = 0; it < 8; ++it) {
      Mat B = A0;
      for (int i = 0; i < n; ++i) B(i, i) -= lam + shift_eps;
      Vec w;
      try {
        w = solve_linear(B, v);
      } catch (const numerical_error&) {
        shift_eps *= 10.0;
        continue;
      }
      double nw = 0.0;
      for (double x : w) nw += x * x;
      nw = std::sqrt(nw);
      if (nw < 1e-300) break;
      for (auto& x : w) x /= nw;
      v = w;
      // residual check
      Vec Av = mat_vec(A0, v);
      double r = 0.0;
      for (int i = 0; i < n; ++i) r = std::max(r, std::abs(Av[i] - lam * v[i]));
      if (r <= 1e-12 * anorm) break;
    }
    Vec Av = mat_vec(A0, v);
    double r = 0.0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(Av[i] - lam * v[i]));
    if (r > 1e-10 * anorm)
      throw numerical_error("eig_small: eigenvector residual exceeds tolerance");
    res.vectors.push_back(std::move(v));
  }
  return res;
}

}  // namespace wmlab
