#pragma once

#include "k3lat/tyurin.hpp"

#include <optional>

namespace k3lat {

// Kodaira fibre in its vanishing-cycle normal form over the basis (a, b):
// the word lists the cycles of the thimble chain, the monodromy is the twist
// of the associated z_chain, and the Euler number is the word length.
struct KodairaFibre {
  std::string tag;
  std::vector<MatZ> word;
  MatZ monodromy;

  int euler() const { return static_cast<int>(word.size()); }
};

// Builds the normal form for a type tag: "I<n>" (n >= 1), "Istar<n>"
// (n >= 0), "II", "III", "IV", "IVstar", "IIIstar", "IIstar". Multiple-fibre
// tags ("mI3" and friends) are rejected: the fibrations handled here have
// none.
KodairaFibre fibre_model(const std::string& tag);

// Ordered list of fibres over a disc, clockwise from the base point. Each
// fibre may carry a framing, an SL2(Z) change of the local basis applied to
// its word; an empty framing list means all identity.
struct FibreConfig {
  std::vector<KodairaFibre> fibres;
  std::vector<MatZ> framings;

  int euler() const;
};

// The pseudolattice of an elliptic fibration over a disc: the z_chains of the
// framed fibre words glued left to right with positive sign. Per fibre we
// keep the thimble range, the sublattice of thimble combinations killed by
// the cycle map (these are the classes supported on the fibre itself), and a
// simple-root system for it: the classes of the non-identity components of
// the fibre, one orientation chosen.
struct DiscFibration {
  FibreConfig config;
  EFibred g;
  MatZ twist;
  std::vector<int> offsets;
  std::vector<MatZ> component_blocks;
  std::vector<std::vector<MatZ>> components;

  int euler() const { return g.rank(); }
};
DiscFibration build_disc_fibration(const FibreConfig& c);

// The same fibration presented in the (a, b)-basis given by the columns of u.
DiscFibration rebase(const DiscFibration& w, const MatZ& u);

// NS classes of all fibre component generators, in chain order.
std::vector<MatZ> component_classes_ns(const DiscFibration& w,
                                       const SurfaceLikeData& d);

// A loop on the base of an elliptically fibred K3 splits the fibres into two
// discs with Euler numbers summing to 24; sides are labeled so that side1 has
// Euler number at most 12.
struct LoopSplit {
  FibreConfig side1, side2;
  bool swapped = false;
};
LoopSplit make_loop_split(FibreConfig side1, FibreConfig side2);

// A split is allowable when some basis (a, b) puts the side-1 boundary
// monodromy in the shear form [[1, e1 - 12], [0, 1]] (side 2 then carries the
// inverse) and makes both adjoint images of a primitive. The search runs over
// a box of candidate bases with entries enumerated outward from zero; the
// certificate is the first basis found and certificates counts all of them in
// the box, so 1 means unique there.
struct AllowableVerdict {
  bool allowable = false;
  MatZ basis;
  int certificates = 0;
  MatZ twist1, twist2;
  int e1 = 0, e2 = 0;
  std::string reason;
};
AllowableVerdict allowable_check(const LoopSplit& s, const Int& box = 12);

// End-to-end model of a split elliptically fibred K3: both sides rebased into
// a certifying basis, machine-checked as quasi del Pezzo, and glued with the
// second map negated. The degree is 12 minus the side-1 Euler number.
struct K3SplitModel {
  LoopSplit split;
  AllowableVerdict certificate;
  DiscFibration side1, side2;
  SurfaceLikeData surf1, surf2;
  GluedModel glued;
  int degree = 0;
};
K3SplitModel build_k3_split_model(const LoopSplit& s);

// Checks that a sublattice of the NS lattice of a disc fibration with Euler
// number below 12 is a fibration polarisation: negative definite, primitive,
// orthogonal to the adjoint image of b, with every root expressible, after
// choosing an orientation, as a nonnegative integer combination of fibre
// component classes. The fibration must be quasi del Pezzo for its NS lattice
// to exist at all.
struct GammaVerdict {
  bool negative_definite = false;
  bool primitive = false;
  bool orthogonal = false;
  bool roots_effective = false;
  std::vector<MatZ> failing_roots;  // NS coords
  std::string detail;

  bool ok() const {
    return negative_definite && primitive && orthogonal && roots_effective;
  }
};
GammaVerdict check_gamma_polarisation(const DiscFibration& w,
                                      const MatZ& gamma_in_ns,
                                      const FeasibilityOptions& opt = {});
GammaVerdict check_gamma_polarisation(const K3SplitModel& m, int side,
                                      const MatZ& gamma_in_ns,
                                      const FeasibilityOptions& opt = {});

// Mordell-Weil bookkeeping for a model with a section: the caller supplies
// the fibre-orthogonal summand Gamma of the Neron-Severi lattice of the total
// space (NS = H + Gamma), given in ns_quot coordinates of the glued model.
// R is the span of the fibre component classes of both sides transported into
// ns_quot; Gamma / R presents the Mordell-Weil group, and the coupling group
// of Gamma must be a quotient of it, which is checked on ranks and orders.
struct MwReport {
  int gamma_rank = 0;
  int r_rank = 0;
  std::vector<Int> mw_invariants;
  int mw_free_rank = 0;
  CouplingGroup coupling;
  bool consistent = false;
  std::string detail;
};
MwReport mw_coupling_data(const K3SplitModel& m,
                          const std::optional<MatZ>& gamma_in_ns);

// Quasipolarisation data compatible with a fibration: a nondegenerate lattice
// containing a primitive isotropic fibre class f, together with the quotient
// gamma = f-perp mod f taken inside it. The transcendental certificate (the
// class pairing the fibration to the polarisation from the orthogonal side)
// is recorded when the caller supplies one; admissibility analysis lives with
// the mirror machinery.
struct CompatiblePolarisation {
  IntLattice lcheck;
  MatZ f;
  IntLattice gamma;
  MatZ gamma_lift;
  std::optional<MatZ> tau;
};
CompatiblePolarisation make_compatible_polarisation(
    const IntLattice& lcheck, const MatZ& f,
    const std::optional<MatZ>& tau = std::nullopt);

// Picture of a rational elliptic surface with an I_d fibre at infinity:
// Picard lattice I(1,9), fibre class 3h - e_1 - ... - e_9, the quotient
// fperp_mod_f of its orthogonal complement (even unimodular of rank 8), and
// inside the quotient a cyclic chain of d root classes summing to zero, the
// images of the boundary fibre components.
struct RatellModel {
  IntLattice pic;
  MatZ fclass;
  IntLattice quot;
  MatZ quot_lift;
  std::vector<MatZ> d_components;  // quot coords
};
RatellModel ratell_model(int d);

// Transfer of a negative definite sublattice between the NS lattice of a disc
// fibration with boundary monodromy [[1, -d], [0, 1]] (1 <= d <= 9) and the
// fibre-perp quotient of the rational elliptic surface picture. On the NS
// side the transferable classes are those orthogonal to the adjoint image of
// b; on the surface side those orthogonal to the boundary components. The two
// subspaces are isometric and the transfer conjugates through an isometry
// found by backtracking; primitivity is demanded on the source and reverified
// on the image.
enum class RatellDirection { ToRationalSurface, ToDiscFibration };

struct RatellTransfer {
  int d = 0;
  MatZ image;
  IntLattice source_space;
  IntLattice target_space;
  MatZ source_space_basis;  // in source picture coords
  MatZ target_space_basis;  // in target picture coords
  MatZ iso;                 // source-space coords -> target-space coords
};
RatellTransfer ratell_transfer(const DiscFibration& w, const MatZ& n_basis,
                               RatellDirection dir);

// Searches per-fibre framings realizing a target boundary monodromy, each
// framing a word of length at most max_len in the standard generators
// [[1,1],[0,1]] and [[0,-1],[1,0]] and their inverses.
std::optional<std::vector<MatZ>> find_framings(
    const std::vector<KodairaFibre>& fibres, const MatZ& target,
    int max_len = 8);

}  // namespace k3lat
