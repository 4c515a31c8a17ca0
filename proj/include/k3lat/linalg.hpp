#pragma once

#include <optional>
#include <tuple>

#include "k3lat/mat.hpp"

namespace k3lat {

// Smith normal form: U * M * V = D with U, V unimodular and D diagonal with
// d_1 | d_2 | ... | d_r, d_i > 0, remaining diagonal zero. Uinv and Vinv are
// maintained alongside so callers get exact inverses for free.
struct Snf {
  MatZ U, Uinv, V, Vinv, D;
  int rank = 0;
};

Snf smith_normal_form(const MatZ& m);

// Exact determinant by fraction-free elimination.
Int det(const MatZ& m);

// Division helpers for cpp_int (C++ '/' truncates toward zero).
Int floor_div(const Int& a, const Int& b);
// Nearest integer to a/b, ties toward even quotient is not needed; ties go down.
Int round_div(const Int& a, const Int& b);
// Largest s >= 0 with s*s <= a; requires a >= 0.
Int isqrt_floor(const Int& a);

// Floor of a rational.
Int floor_rat(const Rat& x);
Int ceil_rat(const Rat& x);

int rank_of(const MatQ& a);
int rank_of(const MatZ& a);

// One solution of A x = b over Q, if any.
std::optional<MatQ> solve(const MatQ& a, const MatQ& b);

// Basis of the rational kernel of A, as columns.
MatQ kernel(const MatQ& a);

// Inverse; throws std::invalid_argument when singular.
MatQ inverse(const MatQ& a);
MatQ inverse(const MatZ& a);

// Basis of {x in Z^n : A x = 0}, as columns of a matrix whose column span is
// saturated (a Z-basis of the full integer kernel).
MatZ kernel_int(const MatZ& a);

// Integral solution of A x = b, if any.
std::optional<MatZ> solve_int(const MatZ& a, const MatZ& b);

// Inertia of a symmetric matrix: (positive, negative, zero) eigenvalue counts,
// computed exactly by symmetric reduction over Q.
struct Inertia {
  int pos = 0, neg = 0, zero = 0;
  bool operator==(const Inertia&) const = default;
};
Inertia inertia(const MatZ& sym);

// Unit lower-triangular L and diagonal d with A = L * diag(d) * L^T, for
// symmetric positive definite A. Throws if A is not positive definite.
struct Ldlt {
  MatQ L;
  std::vector<Rat> d;
};
Ldlt ldlt(const MatZ& a);

// Rational congruence diagonalization of a symmetric matrix:
// t^T A t = diag(d). Works for indefinite and degenerate forms.
struct SymDiag {
  MatQ t;
  std::vector<Rat> d;
};
SymDiag sym_diagonalize(const MatZ& a);

}  // namespace k3lat
