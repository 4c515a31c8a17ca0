#pragma once

#include "k3lat/lattice.hpp"

namespace k3lat {

// Rank two symplectic reference module E with basis (a, b) and pairing
// <v, w> = beta*gamma - alpha*delta for v = alpha a + beta b,
// w = gamma a + delta b.
MatZ sympl_gram();
Int sympl_pair(const MatZ& v, const MatZ& w);
// Dehn twist along a primitive v: w -> w - <v, w> v, as a 2x2 matrix.
MatZ dehn_twist(const MatZ& v);
MatZ vec_a();
MatZ vec_b();
// alpha * a + beta * b.
MatZ ab(const Int& alpha, const Int& beta);

// Nondegenerate integral bilinear form (not necessarily symmetric) together
// with a morphism f to E. All the derived operators live here.
struct EFibred {
  MatZ gram;  // n x n
  MatZ f;     // 2 x n, columns are images of basis vectors in (a, b) coords

  int rank() const { return gram.rows(); }
  Int pair(const MatZ& u, const MatZ& v) const { return pair_with(gram, u, v); }

  // Serre operator G^-1 G^T; requires a unimodular form.
  MatZ serre() const;
  // Right adjoint of f as a map E -> G, i.e. the n x 2 integral matrix r with
  // <v, r(x)>_G = <f(v), x>_E. Requires unimodularity.
  MatZ adjoint() const;
  MatZ r_a() const { return adjoint() * vec_a(); }
  MatZ r_b() const { return adjoint() * vec_b(); }
  // Twist on E: id - f r. For a chain of Dehn twists this is their product.
  MatZ twist() const;
  // Cotwist on G: id - r f.
  MatZ cotwist() const;
  // Relative Calabi-Yau property in the form cotwist == serre.
  bool is_relative_cy() const;
};

EFibred make_fibred(MatZ gram, MatZ f);

// Exceptional chain attached to a list of primitive vectors v_i in E: Gram is
// upper triangular with unit diagonal and (i, j) entry <v_i, v_j> for i < j,
// and f sends the i-th basis vector to v_i. The twist then equals the product
// of the Dehn twists along v_1, ..., v_k in that order.
EFibred z_chain(const std::vector<MatZ>& vs);

// Semiorthogonal gluing of two fibred pseudolattices, with the second map
// optionally negated (sign2 = -1). Gram is block upper triangular with
// coupling block F1^T E (sign2 F2); the glued map is [F1 | sign2 F2].
EFibred glue_fibred(const EFibred& g1, const EFibred& g2, int sign2);

// Degeneration models: the chain with n >= 3 vertices
// Z(b, 3a+b, 6a+b, a, ..., a) and the quadric model Z(b, 2a+b, 2a+b, 4a+b).
EFibred chain_model(int n);
EFibred quadric_model();

// Surface-like analysis. A fibred pseudolattice is surface-like with point
// class p = r(a) exactly when r(a) is primitive and the twist fixes a. The
// Neron-Severi quotient is p-perp mod p carrying the negated pairing, and the
// canonical class is the unique solution of
//   <u1, u2> - <u2, u1> = -q(K, rank(u1) [u2] - rank(u2) [u1]),
// rank(u) = <u, p>.
struct SurfaceLikeData {
  bool ok = false;
  std::string reason;
  MatZ p;        // point class, ambient coords
  MatZ perp;     // basis of the two-sided orthogonal of p, n x (n-1)
  MatZ ns_lift;  // lift of the NS basis, n x (n-2)
  IntLattice ns;
  MatZ k;  // canonical class in NS coords
  Int degree = 0;  // q(K, K)
};
SurfaceLikeData surface_like(const EFibred& g);

// NS coordinates of a vector orthogonal to the point class on both sides.
MatZ ns_class(const SurfaceLikeData& d, const MatZ& v);

// K-perp inside NS with the restricted form.
IntLattice canonical_perp(const SurfaceLikeData& d);

// Geometric model attached to a unimodular NS lattice with a distinguished
// canonical vector: rank rk(NS) + 2 with Gram
//   [ -1    0   1 ]
//   [ QK   -Q   0 ]
//   [  1    0   0 ]
// and f = [[0, -K^T Q, 0], [1, 0, 0]]. Always surface-like, with NS and K
// recovered on the nose.
EFibred from_anticanonical_pair(const IntLattice& ns, const MatZ& k);

// Change of basis t putting a surface-like pseudolattice into the
// from_anticanonical_pair shape: f * t = phi * model.f with phi a unipotent
// basis change of E fixing a.
struct RealisationCoords {
  MatZ t;    // n x n, |det t| = 1
  MatZ phi;  // 2 x 2
  IntLattice ns;
  MatZ k;
  EFibred model;
};
RealisationCoords realisation_coords(const EFibred& g);

// Classification of quasi del Pezzo pseudolattices against the two model
// families. model is "Chain", "Quadric" or "None".
struct QdpClass {
  std::string model = "None";
  int n = 0;
  Int degree = 0;
  std::string reason;
};
QdpClass classify_qdp(const EFibred& g);

// Isometry of a unimodular NS lattice with distinguished vector k onto the
// standard polarized model: diag(1, -1, ..., -1) with k_std = (-3, 1, ..., 1)
// in the odd case, [[0,1],[1,0]] with k_std = (-2, -2) in the even rank two
// case. to_std maps given coordinates to model coordinates:
//   to_std * k = k_std  and  G_given = to_std^T G_model to_std.
struct NsStandardization {
  enum class Status { Ok, Failed, Unknown };
  Status status = Status::Failed;
  MatZ to_std;
  MatZ k_std;
  std::string detail;
};
NsStandardization standardize_polarized_ns(const IntLattice& ns, const MatZ& k);

// Full isometry test between two quasi del Pezzo pseudolattices. On success
// psi is an isomorphism of bilinear forms intertwining the maps to E up to
// the E-basis change phi: phi f_a = f_b psi.
struct QdpIsoResult {
  enum class Status { Isomorphic, Refuted, Unknown };
  Status status = Status::Unknown;
  MatZ psi;
  MatZ phi;
  std::string detail;
};
QdpIsoResult qdp_isomorphism(const EFibred& a, const EFibred& b);

}  // namespace k3lat
