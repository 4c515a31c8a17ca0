#include "k3lat/linalg.hpp"

#include <algorithm>

namespace k3lat {

namespace mp = boost::multiprecision;

Int floor_div(const Int& a, const Int& b) {
  assert(b != 0);
  Int q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) --q;
  return q;
}

Int round_div(const Int& a, const Int& b) {
  assert(b != 0);
  // floor((2a + b) / 2b) gives the nearest integer, ties rounding down.
  return floor_div(2 * a + b, 2 * b);
}

Int isqrt_floor(const Int& a) {
  assert(a >= 0);
  if (a < 2) return a;
  Int x = Int(1) << (unsigned)(mp::msb(a) / 2 + 1);
  for (;;) {
    Int y = (x + a / x) / 2;
    if (y >= x) break;
    x = y;
  }
  return x;
}

Int floor_rat(const Rat& x) { return floor_div(mp::numerator(x), mp::denominator(x)); }
Int ceil_rat(const Rat& x) { return -floor_rat(-x); }

namespace {

// Tracks D together with U, Uinv (row side) and V, Vinv (column side) so that
// U * M * V = D and U * Uinv = V * Vinv = I at all times.
struct SnfWork {
  MatZ U, Uinv, V, Vinv, D;

  explicit SnfWork(const MatZ& m)
      : U(MatZ::identity(m.rows())),
        Uinv(MatZ::identity(m.rows())),
        V(MatZ::identity(m.cols())),
        Vinv(MatZ::identity(m.cols())),
        D(m) {}

  void row_swap(int i, int j) {
    if (i == j) return;
    D.swap_rows(i, j);
    U.swap_rows(i, j);
    Uinv.swap_cols(i, j);
  }
  void col_swap(int i, int j) {
    if (i == j) return;
    D.swap_cols(i, j);
    V.swap_cols(i, j);
    Vinv.swap_rows(i, j);
  }
  // row i += c * row j on D
  void row_add(int i, int j, const Int& c) {
    if (c == 0) return;
    D.add_row_multiple(i, j, c);
    U.add_row_multiple(i, j, c);
    Uinv.add_col_multiple(j, i, -c);
  }
  // col i += c * col j on D
  void col_add(int i, int j, const Int& c) {
    if (c == 0) return;
    D.add_col_multiple(i, j, c);
    V.add_col_multiple(i, j, c);
    Vinv.add_row_multiple(j, i, -c);
  }
  void row_negate(int i) {
    D.scale_row(i, -1);
    U.scale_row(i, -1);
    Uinv.scale_col(i, -1);
  }
};

}  // namespace

Snf smith_normal_form(const MatZ& m) {
  SnfWork w(m);
  const int rows = m.rows(), cols = m.cols();
  const int n = std::min(rows, cols);

  for (int t = 0; t < n; ++t) {
    for (;;) {
      // Deterministic pivot: smallest |value| in the trailing block, then
      // smallest (row, col).
      int pi = -1, pj = -1;
      for (int i = t; i < rows; ++i)
        for (int j = t; j < cols; ++j) {
          if (w.D(i, j) == 0) continue;
          if (pi < 0 || mp::abs(w.D(i, j)) < mp::abs(w.D(pi, pj))) {
            pi = i;
            pj = j;
          }
        }
      if (pi < 0) goto done;  // trailing block all zero
      w.row_swap(t, pi);
      w.col_swap(t, pj);

      bool clean = true;
      for (int i = t + 1; i < rows; ++i) {
        Int q = round_div(w.D(i, t), w.D(t, t));
        w.row_add(i, t, -q);
        if (w.D(i, t) != 0) clean = false;
      }
      for (int j = t + 1; j < cols; ++j) {
        Int q = round_div(w.D(t, j), w.D(t, t));
        w.col_add(j, t, -q);
        if (w.D(t, j) != 0) clean = false;
      }
      if (!clean) continue;  // remainders became new, smaller pivot candidates

      // Pivot must divide every remaining entry for the divisibility chain.
      bool divides = true;
      for (int i = t + 1; i < rows && divides; ++i)
        for (int j = t + 1; j < cols && divides; ++j)
          if (w.D(i, j) % w.D(t, t) != 0) {
            w.row_add(t, i, 1);
            divides = false;
          }
      if (divides) break;
    }
    if (w.D(t, t) < 0) w.row_negate(t);
  }
done:
  Snf s{w.U, w.Uinv, w.V, w.Vinv, w.D, 0};
  for (int t = 0; t < n; ++t)
    if (s.D(t, t) != 0) ++s.rank;
  return s;
}

Int det(const MatZ& m) {
  assert(m.is_square());
  const int n = m.rows();
  if (n == 0) return 1;
  MatZ a = m;
  Int prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (a(k, k) == 0) {
      int p = -1;
      for (int i = k + 1; i < n; ++i)
        if (a(i, k) != 0) {
          p = i;
          break;
        }
      if (p < 0) return 0;
      a.swap_rows(k, p);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        a(i, j) = (a(k, k) * a(i, j) - a(i, k) * a(k, j)) / prev;
      }
    for (int i = k + 1; i < n; ++i) a(i, k) = 0;
    prev = a(k, k);
  }
  return sign > 0 ? a(n - 1, n - 1) : -a(n - 1, n - 1);
}

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<int> rref(MatQ& a) {
  std::vector<int> pivots;
  int r = 0;
  for (int c = 0; c < a.cols() && r < a.rows(); ++c) {
    int p = -1;
    for (int i = r; i < a.rows(); ++i)
      if (a(i, c) != 0) {
        p = i;
        break;
      }
    if (p < 0) continue;
    a.swap_rows(r, p);
    Rat inv = Rat(1) / a(r, c);
    a.scale_row(r, inv);
    for (int i = 0; i < a.rows(); ++i) {
      if (i == r || a(i, c) == 0) continue;
      a.add_row_multiple(i, r, -a(i, c));
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace

int rank_of(const MatQ& a) {
  MatQ w = a;
  return static_cast<int>(rref(w).size());
}
int rank_of(const MatZ& a) { return smith_normal_form(a).rank; }

std::optional<MatQ> solve(const MatQ& a, const MatQ& b) {
  assert(a.rows() == b.rows());
  MatQ aug = hstack(a, b);
  std::vector<int> pivots = rref(aug);
  // Any pivot inside the b-block means inconsistency.
  for (int p : pivots)
    if (p >= a.cols()) return std::nullopt;
  MatQ x(a.cols(), b.cols());
  for (size_t r = 0; r < pivots.size(); ++r)
    for (int j = 0; j < b.cols(); ++j) x(pivots[r], j) = aug(static_cast<int>(r), a.cols() + j);
  return x;
}

MatQ kernel(const MatQ& a) {
  MatQ w = a;
  std::vector<int> pivots = rref(w);
  std::vector<bool> is_pivot(a.cols(), false);
  for (int p : pivots) is_pivot[p] = true;
  MatQ k(a.cols(), a.cols() - static_cast<int>(pivots.size()));
  int col = 0;
  for (int c = 0; c < a.cols(); ++c) {
    if (is_pivot[c]) continue;
    k(c, col) = 1;
    for (size_t r = 0; r < pivots.size(); ++r) k(pivots[r], col) = -w(static_cast<int>(r), c);
    ++col;
  }
  return k;
}

MatQ inverse(const MatQ& a) {
  assert(a.is_square());
  MatQ aug = hstack(a, MatQ::identity(a.rows()));
  std::vector<int> pivots = rref(aug);
  if (static_cast<int>(pivots.size()) != a.rows() || pivots.back() >= a.cols())
    throw std::invalid_argument("matrix is singular");
  MatQ inv(a.rows(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.rows(); ++j) inv(i, j) = aug(i, a.cols() + j);
  return inv;
}

MatQ inverse(const MatZ& a) { return inverse(to_rat(a)); }

MatZ kernel_int(const MatZ& a) {
  Snf s = smith_normal_form(a);
  // A * V = Uinv * D, so columns of V past the rank map to zero; V unimodular
  // makes them a basis of the saturated kernel.
  std::vector<int> idx;
  for (int j = s.rank; j < a.cols(); ++j) idx.push_back(j);
  return s.V.cols_at(idx);
}

std::optional<MatZ> solve_int(const MatZ& a, const MatZ& b) {
  assert(a.rows() == b.rows());
  Snf s = smith_normal_form(a);
  MatZ ub = s.U * b;
  MatZ y(a.cols(), b.cols());
  for (int j = 0; j < b.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      Int d = (i < std::min(a.rows(), a.cols())) ? s.D(i, i) : Int(0);
      if (d == 0) {
        if (ub(i, j) != 0) return std::nullopt;
      } else if (i < a.cols()) {
        if (ub(i, j) % d != 0) return std::nullopt;
        y(i, j) = ub(i, j) / d;
      }
    }
  }
  return s.V * y;
}

Inertia inertia(const MatZ& sym) {
  assert(sym.is_symmetric());
  MatQ a = to_rat(sym);
  Inertia out;
  int n = a.rows();
  std::vector<bool> used(n, false);
  for (;;) {
    // Prefer a nonzero diagonal entry in index order.
    int k = -1;
    for (int i = 0; i < n; ++i)
      if (!used[i] && a(i, i) != 0) {
        k = i;
        break;
      }
    if (k < 0) {
      // Look for an off-diagonal entry to fold onto the diagonal.
      int oi = -1, oj = -1;
      for (int i = 0; i < n && oi < 0; ++i)
        for (int j = i + 1; j < n && oi < 0; ++j)
          if (!used[i] && !used[j] && a(i, j) != 0) {
            oi = i;
            oj = j;
          }
      if (oi < 0) break;
      // a(oi,oi) = a(oj,oj) = 0 here, so after this a(oi,oi) = 2 a(oi,oj) != 0.
      for (int t = 0; t < n; ++t)
        if (!used[t]) a(oi, t) += a(oj, t);
      for (int t = 0; t < n; ++t)
        if (!used[t]) a(t, oi) += a(t, oj);
      continue;
    }
    if (a(k, k) > 0)
      ++out.pos;
    else
      ++out.neg;
    used[k] = true;
    // Congruence update A <- E A E^T zeroing row/column k, with
    // E = I - sum_i c_i e_{ik}, c_i = a(i,k)/a(k,k).
    std::vector<Rat> c(n), rowk(n);
    for (int i = 0; i < n; ++i) {
      c[i] = used[i] ? Rat(0) : a(i, k) / a(k, k);
      rowk[i] = a(k, i);
    }
    Rat akk = a(k, k);
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        a(i, j) += -c[i] * rowk[j] - c[j] * a(i, k) + c[i] * c[j] * akk;
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (!used[i]) ++out.zero;
  return out;
}

Ldlt ldlt(const MatZ& m) {
  assert(m.is_symmetric());
  const int n = m.rows();
  MatQ a = to_rat(m);
  Ldlt out;
  out.L = MatQ::identity(n);
  out.d.assign(n, Rat(0));
  for (int j = 0; j < n; ++j) {
    Rat dj = a(j, j);
    for (int k = 0; k < j; ++k) dj -= out.L(j, k) * out.L(j, k) * out.d[k];
    if (dj <= 0) throw std::invalid_argument("matrix not positive definite");
    out.d[j] = dj;
    for (int i = j + 1; i < n; ++i) {
      Rat x = a(i, j);
      for (int k = 0; k < j; ++k) x -= out.L(i, k) * out.L(j, k) * out.d[k];
      out.L(i, j) = x / dj;
    }
  }
  return out;
}

SymDiag sym_diagonalize(const MatZ& m) {
  assert(m.is_symmetric());
  const int n = m.rows();
  MatQ a = to_rat(m);
  SymDiag out;
  out.t = MatQ::identity(n);
  out.d.assign(n, Rat(0));
  for (int k = 0; k < n; ++k) {
    if (a(k, k) == 0) {
      int swap_j = -1, fold_j = -1;
      for (int j = k + 1; j < n; ++j) {
        if (swap_j < 0 && a(j, j) != 0) swap_j = j;
        if (fold_j < 0 && a(k, j) != 0) fold_j = j;
      }
      if (swap_j >= 0) {
        a.swap_rows(k, swap_j);
        a.swap_cols(k, swap_j);
        out.t.swap_cols(k, swap_j);
      } else if (fold_j >= 0) {
        // Both diagonal entries vanish, so folding column fold_j in gives
        // a(k, k) = 2 a(k, fold_j) != 0.
        a.add_col_multiple(k, fold_j, Rat(1));
        a.add_row_multiple(k, fold_j, Rat(1));
        out.t.add_col_multiple(k, fold_j, Rat(1));
      } else {
        continue;  // row k is zero from column k on: a radical direction
      }
    }
    for (int j = k + 1; j < n; ++j) {
      if (a(k, j) == 0) continue;
      Rat c = a(k, j) / a(k, k);
      a.add_col_multiple(j, k, -c);
      a.add_row_multiple(j, k, -c);
      out.t.add_col_multiple(j, k, -c);
    }
    out.d[k] = a(k, k);
  }
  return out;
}

}  // namespace k3lat
