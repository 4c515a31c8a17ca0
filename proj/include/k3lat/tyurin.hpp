#pragma once

#include <string>
#include <vector>

#include "k3lat/pseudolattice.hpp"

namespace k3lat {

// Gluing of two quasi del Pezzo pseudolattices with opposite canonical
// squares, together with every derived object the degeneration-side calculus
// needs. Conventions:
//   * the second map is negated in the gluing, so the glued twist is the
//     product of a twist and its inverse, i.e. the identity on E;
//   * factors are ordered (swapping the inputs if needed) so that the first
//     canonical square q(K1, K1) is >= 0;
//   * "ker coords" means coordinates with respect to ker_basis, "quot coords"
//     with respect to quot_comp, "match coords" with respect to match_basis,
//     and "ambient pair coords" means NS(G1) + NS(G2) stacked.
//
// The kernel of the glued map carries a symmetric form whose radical is the
// saturated image of the adjoint; the quotient by that radical is unimodular
// of rank 20, and its point-perp-mod-point quotient ns_quot is even
// unimodular of signature (1, 17). The matched-pair lattice consists of the
// pairs (D1, D2) in NS(G1) + NS(G2) with q(K1, D1) = q(K2, D2); it maps onto
// ns_quot with kernel spanned by a single primitive totally degenerate class,
// a multiple of which is the pair (-K1, K2) cut out by the common curve.
struct GluedModel {
  EFibred g;               // glued pseudolattice, rank n = n1 + n2
  EFibred g1, g2;          // the factors, in glued order
  SurfaceLikeData d1, d2;  // surface-like data of the factors
  QdpClass c1, c2;
  bool swapped = false;    // inputs exchanged to make q(K1, K1) >= 0
  int degree_num = 0;      // q(K1, K1), in 0..9
  std::string degree;      // "0".."9"; square 8 splits into "8" (odd NS(G1))
                           // and "8'" (even NS(G1))

  MatZ r;              // adjoint of the glued map, n x 2
  MatZ ker_basis;      // saturated basis of ker f, n x (n-2)
  IntLattice ker_form; // pairing restricted to ker f; symmetric, radical rank 2
  MatZ adjoint_image;  // saturated image of r, ker coords, (n-2) x 2, radical
  MatZ point_span;     // factor point classes (r1(a), 0), (0, r2(a)), ker coords
  MatZ quot_comp;      // complement of adjoint_image, (n-2) x (n-4)
  IntLattice quot;     // ker f modulo adjoint_image; unimodular
  MatZ point_class;    // common class of the point pair in quot coords; primitive
  MatZ ns_quot_lift;   // lift of an NS basis of quot, (n-4) x (n-6)
  IntLattice ns_quot;  // point-perp mod point, negated form; even, unimodular,
                       // signature (1, n-7)

  MatZ match_basis;    // (n-4) x (n-5), basis of the matched pairs
  IntLattice match_form;
  MatZ lift_cols;      // lifts of match_basis columns into ker f, G coords
  MatZ proj;           // (n-6) x (n-5), surjection onto ns_quot coords
  MatZ degenerate_class;  // primitive generator of ker proj, match coords
  MatZ curve_pair;        // (-K1, K2) in match coords
  Int curve_multiple = 0; // curve_pair == curve_multiple * degenerate_class, > 0

  MatZ k1perp, k2perp;    // bases of the K-perps inside NS(G1), NS(G2)

  int rank() const { return g.rank(); }
  int match_rank() const { return match_basis.cols(); }
  int ns_rank() const { return ns_quot.rank(); }
};

// Glue two quasi del Pezzo pseudolattices. Inputs may arrive in either order;
// they must classify as quasi del Pezzo and their canonical squares must sum
// to zero. Every structural claim encoded in GluedModel is rechecked after
// construction.
GluedModel build_glued(const EFibred& a, const EFibred& b);
// Same, but starting from unimodular polarized NS lattices; each factor is
// realised through from_anticanonical_pair first.
GluedModel build_glued(const IntLattice& ns_a, const MatZ& k_a,
                       const IntLattice& ns_b, const MatZ& k_b);

// Coordinate helpers. factor_embed places an NS(G_i) vector into ambient pair
// coords; match_coords expresses an ambient pair vector in match coords and
// throws when the vector does not satisfy the matching condition;
// factor_class_in_quot is the composite NS(G_i) -> matched pairs -> ns_quot,
// defined on vectors orthogonal to K_i.
MatZ factor_embed(const GluedModel& m, int factor, const MatZ& v);
MatZ match_coords(const GluedModel& m, const MatZ& ambient);
MatZ factor_class_in_quot(const GluedModel& m, int factor, const MatZ& v);

// A polarisation in one of the three positions of the transfer pipeline:
//   Lattice       basis columns in ns_quot coords, primitive;
//   Lifted        basis columns in match coords, primitive, contains the
//                 degenerate class;
//   Intersection  basis columns in NS(G_factor) coords, inside K_factor-perp.
struct Polarisation {
  enum class Kind { Lattice, Lifted, Intersection };
  Kind kind = Kind::Lattice;
  int factor = 0;  // 1 or 2 when kind == Intersection
  MatZ basis;

  int rank() const { return basis.cols(); }
};

// Validating constructor for the Lattice kind (primitivity enforced).
Polarisation lattice_polarisation(const GluedModel& m, const MatZ& basis);

// Preimage in the matched-pair lattice of a primitive sublattice of ns_quot.
// The result always contains the degenerate class and projects back onto the
// input. The zero polarisation lifts to the degenerate line alone; the full
// NS lifts to the whole matched-pair lattice.
Polarisation lift_polarisation(const GluedModel& m, const Polarisation& l);

// Image in ns_quot of a lifted polarisation; inverse to lift_polarisation on
// its image. The image of a primitive sublattice containing the degenerate
// class is again primitive.
Polarisation project_polarisation(const GluedModel& m, const Polarisation& lhat);

// Intersection of a lifted polarisation with one factor's NS block. Always
// lands inside the K-perp of that factor.
Polarisation intersection_polarisation(const GluedModel& m,
                                       const Polarisation& lhat, int factor);

// Cokernel data of the inclusion of the two transported intersection
// polarisations into a lattice polarisation L: invariant factors > 1 of
// L / (image of L1 + L2) together with the free rank. Only defined for
// nonzero degree (in degree zero the degenerate class already lies in
// K1-perp + K2-perp and the quotient is never finite for the full NS).
struct CouplingGroup {
  std::vector<Int> invariants;  // nontrivial invariant factors
  int free_rank = 0;

  bool is_torsion() const { return free_rank == 0; }
  Int index() const {  // order of the quotient when finite
    Int n = 1;
    for (const auto& d : invariants) n *= d;
    return n;
  }
};
CouplingGroup coupling_group(const GluedModel& m, const Polarisation& l);

// Bounded search parameters for effectivity questions: coefficients of
// effective generators are searched in [0, cap], the multiple of the curve
// pair class in [-cap, cap].
struct FeasibilityOptions {
  Int cap = 30;
};

// Checks that a lifted polarisation is the lattice shadow of a polarisation
// on a type II surface:
//  (1) the degenerate class lies in it,
//  (2) it contains a class of positive square (the lattice trace of a nef and
//      big divisor; actual nefness is not decidable from Gram data),
//  (3) each -2 class, up to sign and up to multiples of the curve pair class,
//      is a nonnegative integer combination of the supplied effective
//      generators, searched within the bounds of FeasibilityOptions.
// Roots are enumerated when the polarisation is definite modulo the
// degenerate class; otherwise candidate_roots must supply them (ambient pair
// coords), and an exception is thrown if it does not.
struct StableVerdict {
  bool contains_curve_class = false;
  bool has_positive_square = false;
  bool roots_effective = false;
  MatZ positive_witness;           // match coords, set when found
  std::vector<MatZ> failing_roots; // match coords
  std::string detail;

  bool ok() const {
    return contains_curve_class && has_positive_square && roots_effective;
  }
};
StableVerdict check_stable_polarisation(const GluedModel& m,
                                        const Polarisation& lhat,
                                        const std::vector<MatZ>& effective,
                                        const std::vector<MatZ>& candidate_roots = {},
                                        const FeasibilityOptions& opt = {});

// Checks that a sublattice N of a polarized NS lattice is a polarisation of
// the corresponding pair in the weak del Pezzo sense: N primitive, negative
// definite, orthogonal to k, and each root of N orientable so that it is a
// nonnegative integer combination of the supplied effective generators
// (bounded search; a root pair representable with both signs is rejected).
// Requires q(k, k) > 0; surfaces on the other side of a gluing never pass
// that gate.
struct WdpVerdict {
  bool primitive = false;
  bool negative_definite = false;
  bool orthogonal_to_k = false;
  bool roots_effective = false;
  std::vector<MatZ> failing_roots;  // NS coords
  std::string detail;

  bool ok() const {
    return primitive && negative_definite && orthogonal_to_k && roots_effective;
  }
};
WdpVerdict check_wdp_polarisation(const IntLattice& ns, const MatZ& k,
                                  const MatZ& n_basis,
                                  const std::vector<MatZ>& effective,
                                  const FeasibilityOptions& opt = {});

// Whether target is a nonnegative integer combination of the generators, with
// every coefficient searched in [0, cap]. The effectivity primitive shared by
// the polarisation checks.
bool is_nonneg_combination(const std::vector<MatZ>& gens, const MatZ& target,
                           const Int& cap = 30);

// Pushes a pair of factor isometries fixing the canonical classes down to an
// isometry of ns_quot. The result fixes the degenerate direction of the
// matched-pair lattice and preserves the image of each K-perp.
MatZ descend_isometries(const GluedModel& m, const MatZ& psi1, const MatZ& psi2);

// Converse direction, for nonzero degree: an isometry of ns_quot preserving
// the images of both K-perps is descended from a pair of factor isometries,
// possibly only after a global sign flip. Returns the sign and the factor
// isometries, so that descend_isometries(m, psi1, psi2) == sign * psi.
struct IsometryDecomposition {
  int sign = 1;
  MatZ psi1, psi2;
};
IsometryDecomposition decompose_isometry(const GluedModel& m, const MatZ& psi);

}  // namespace k3lat
