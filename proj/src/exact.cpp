#include "tklab/exact.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>

namespace tklab {

namespace {

// Solves B x = rhs for a strictly positive definite rational matrix given
// through an element accessor. Plain Gaussian elimination is safe here:
// every leading principal minor of a PD matrix is nonzero.
std::vector<Rational> solve_pd(
    int k, const std::function<Rational(int, int)>& b,
    std::vector<Rational> rhs) {
  std::vector<std::vector<Rational>> m(k, std::vector<Rational>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) m[i][j] = b(i, j);
  for (int t = 0; t < k; ++t) {
    for (int i = t + 1; i < k; ++i) {
      Rational f = m[i][t] / m[t][t];
      if (sgn(f) == 0) continue;
      for (int j = t; j < k; ++j) m[i][j] -= f * m[t][j];
      rhs[i] -= f * rhs[t];
    }
  }
  std::vector<Rational> x(k);
  for (int i = k - 1; i >= 0; --i) {
    Rational s = rhs[i];
    for (int j = i + 1; j < k; ++j) s -= m[i][j] * x[j];
    x[i] = s / m[i][i];
  }
  return x;
}

Rational quad_against(int n, const std::vector<Scalar>& gram,
                      const std::vector<Rational>& v) {
  Rational acc(0);
  for (int i = 0; i < n; ++i) {
    if (sgn(v[i]) == 0) continue;
    for (int j = 0; j < n; ++j) {
      if (sgn(v[j]) == 0) continue;
      acc += v[i] * v[j] * gram[static_cast<std::size_t>(i) * n + j].rational();
    }
  }
  return acc;
}

PsdCertificate rational_psd(int n, const std::vector<Scalar>& gram) {
  PsdCertificate cert;
  cert.mode = Num::rational;
  cert.n = n;

  // Clear denominators; positive scaling preserves the PSD decision and all
  // sign information the certificates rely on.
  mpz_class scale(1);
  for (const Scalar& s : gram)
    mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(),
            s.rational().get_den().get_mpz_t());
  std::vector<mpz_class> s0(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < s0.size(); ++i) {
    Rational r = gram[i].rational() * Rational(scale);
    s0[i] = r.get_num();  // denominator is 1 by construction
  }

  std::vector<mpz_class> u = s0;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  auto uat = [&](int i, int j) -> mpz_class& {
    return u[static_cast<std::size_t>(i) * n + j];
  };
  auto s0at = [&](int i, int j) -> const mpz_class& {
    return s0[static_cast<std::size_t>(perm[i]) * n + perm[j]];
  };

  // Lifts a vector w on the reduced coordinates k..n-1 to the full space:
  // with the permuted matrix split as [B11 B12; B21 B22] after k pivots,
  // x = -B11^{-1} B12 w makes [x; w]^T S [x; w] equal w^T (Schur) w.
  auto lift = [&](int k, const std::vector<Rational>& w) {
    std::vector<Rational> rhs(k, Rational(0));
    for (int i = 0; i < k; ++i) {
      Rational acc(0);
      for (int j = k; j < n; ++j)
        if (sgn(w[j - k]) != 0) acc += Rational(s0at(i, j)) * w[j - k];
      rhs[i] = -acc;
    }
    std::vector<Rational> x;
    if (k > 0)
      x = solve_pd(
          k, [&](int i, int j) { return Rational(s0at(i, j)); }, rhs);
    std::vector<Rational> full(n, Rational(0));
    for (int i = 0; i < k; ++i) full[perm[i]] = x[i];
    for (int i = k; i < n; ++i) full[perm[i]] = w[i - k];
    return full;
  };

  auto finish_with_vector = [&](int k, std::vector<Rational> w, PsdKind kind,
                                int rank) {
    std::vector<Rational> v = lift(k, std::move(w));
    cert.kind = kind;
    cert.rank = rank;
    Rational q = quad_against(n, gram, v);
    // The pivot bookkeeping guarantees these signs; anything else means the
    // elimination itself is broken, which must never pass silently.
    if (kind == PsdKind::indefinite && sgn(q) >= 0)
      throw std::logic_error("indefinite certificate lost its negative energy");
    if (kind == PsdKind::semidefinite_singular && sgn(q) != 0)
      throw std::logic_error("null certificate has nonzero energy");
    cert.vector = std::vector<Scalar>(v.begin(), v.end());
    cert.quad_value = Scalar(q);
  };

  mpz_class prev(1);
  std::vector<Rational> ff_pivots;
  for (int k = 0; k < n; ++k) {
    // Diagonal scan of the reduced block: a negative entry is already a
    // certificate of indefiniteness, the largest positive one is the pivot.
    int best = -1;
    for (int i = k; i < n; ++i) {
      int s = sgn(uat(i, i));
      if (s < 0) {
        std::vector<Rational> w(n - k, Rational(0));
        w[i - k] = 1;
        finish_with_vector(k, std::move(w), PsdKind::indefinite, k);
        cert.permutation = perm;
        for (const Rational& p : ff_pivots) cert.pivots.emplace_back(Scalar(p));
        return cert;
      }
      if (s > 0 && (best < 0 || uat(i, i) > uat(best, best))) best = i;
    }
    if (best < 0) {
      // All remaining diagonal entries vanish. A PSD block with zero
      // diagonal is the zero block; any nonzero off-diagonal entry gives a
      // negative direction e_i - sign * e_j.
      for (int i = k; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (sgn(uat(i, j)) != 0) {
            std::vector<Rational> w(n - k, Rational(0));
            w[i - k] = 1;
            w[j - k] = sgn(uat(i, j)) > 0 ? -1 : 1;
            finish_with_vector(k, std::move(w), PsdKind::indefinite, k);
            cert.permutation = perm;
            for (const Rational& p : ff_pivots)
              cert.pivots.emplace_back(Scalar(p));
            return cert;
          }
      std::vector<Rational> w(n - k, Rational(0));
      w[0] = 1;
      finish_with_vector(k, std::move(w), PsdKind::semidefinite_singular, k);
      cert.permutation = perm;
      for (const Rational& p : ff_pivots) cert.pivots.emplace_back(Scalar(p));
      return cert;
    }

    if (best != k) {
      std::swap(perm[k], perm[best]);
      for (int j = 0; j < n; ++j) std::swap(uat(k, j), uat(best, j));
      for (int i = 0; i < n; ++i) std::swap(uat(i, k), uat(i, best));
    }
    mpz_class pivot = uat(k, k);
    // True LDL^T pivot of the permuted input: piv_k / (scale * piv_{k-1}).
    ff_pivots.push_back(Rational(pivot) /
                        (Rational(scale) * Rational(prev)));
    for (int i = k + 1; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        mpz_class t = uat(i, j) * pivot - uat(i, k) * uat(k, j);
        mpz_divexact(t.get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
        uat(i, j) = t;
        if (i != j) uat(j, i) = uat(i, j);
      }
    }
    prev = pivot;
  }

  cert.kind = PsdKind::strictly_positive;
  cert.rank = n;
  cert.permutation = perm;
  for (const Rational& p : ff_pivots) cert.pivots.emplace_back(Scalar(p));
  return cert;
}

PsdCertificate float_psd(int n, const std::vector<Scalar>& gram) {
  PsdCertificate cert;
  cert.mode = Num::real;
  cert.n = n;
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = gram[static_cast<std::size_t>(i) * n + j].to_double();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  Eigen::VectorXd ev = es.eigenvalues();
  double top = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  double tol = 1e-10 * top;
  cert.rank = 0;
  for (int i = 0; i < n; ++i) {
    cert.pivots.push_back(Scalar::real(ev(i)));
    if (ev(i) > tol) ++cert.rank;
  }
  auto store_vec = [&](int col, PsdKind kind) {
    cert.kind = kind;
    std::vector<Scalar> v;
    for (int i = 0; i < n; ++i) v.push_back(Scalar::real(es.eigenvectors()(i, col)));
    cert.vector = std::move(v);
    cert.quad_value = Scalar::real(ev(col));
  };
  if (ev(0) < -tol)
    store_vec(0, PsdKind::indefinite);
  else if (cert.rank < n)
    store_vec(0, PsdKind::semidefinite_singular);
  else
    cert.kind = PsdKind::strictly_positive;
  return cert;
}

}  // namespace

PsdCertificate validate_psd(int n, const std::vector<Scalar>& gram) {
  if (n < 1) throw std::invalid_argument("matrix must be at least 1x1");
  if (gram.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("gram size does not match dimension");
  Num mode = gram.front().mode();
  for (const Scalar& s : gram)
    if (s.mode() != mode) throw ModeError("gram mixes rational and float");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Scalar& a = gram[static_cast<std::size_t>(i) * n + j];
      const Scalar& b = gram[static_cast<std::size_t>(j) * n + i];
      bool sym = mode == Num::rational
                     ? a == b
                     : std::abs(a.to_double() - b.to_double()) <= 1e-12;
      if (!sym) throw std::invalid_argument("matrix is not symmetric");
    }
  return mode == Num::rational ? rational_psd(n, gram) : float_psd(n, gram);
}

std::vector<std::vector<Rational>> rational_nullspace(
    std::size_t rows, std::size_t cols, const std::vector<Rational>& a) {
  if (a.size() != rows * cols)
    throw std::invalid_argument("matrix size mismatch");
  std::vector<std::vector<Rational>> m(rows, std::vector<Rational>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = a[i * cols + j];

  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t sel = rows;
    for (std::size_t i = r; i < rows; ++i)
      if (sgn(m[i][c]) != 0) {
        sel = i;
        break;
      }
    if (sel == rows) continue;
    std::swap(m[r], m[sel]);
    Rational inv = Rational(1) / m[r][c];
    for (std::size_t j = c; j < cols; ++j) m[r][j] *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || sgn(m[i][c]) == 0) continue;
      Rational f = m[i][c];
      for (std::size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }

  std::vector<bool> is_pivot(cols, false);
  for (std::size_t c : pivot_col) is_pivot[c] = true;
  std::vector<std::vector<Rational>> basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[free] = 1;
    for (std::size_t k = 0; k < pivot_col.size(); ++k)
      v[pivot_col[k]] = -m[k][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace tklab
