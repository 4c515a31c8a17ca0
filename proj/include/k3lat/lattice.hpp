#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "k3lat/linalg.hpp"

namespace k3lat {

// Finitely generated free Z-module with an integral symmetric bilinear form,
// given by its Gram matrix in a fixed basis. Possibly degenerate.
struct IntLattice {
  MatZ gram;
  std::vector<std::string> labels;  // optional, purely descriptive

  int rank() const { return gram.rows(); }
  Int determinant() const { return det(gram); }
  bool is_even() const;
  bool is_unimodular() const;
  bool is_nondegenerate() const { return determinant() != 0; }
  Inertia signature() const { return inertia(gram); }
  Int pair(const MatZ& u, const MatZ& v) const { return pair_with(gram, u, v); }
  Int norm(const MatZ& v) const { return pair_with(gram, v, v); }
};

IntLattice lattice_from_gram(MatZ gram, std::vector<std::string> labels = {});

// Builds named lattices: "A17", "D16", "E8" (simply laced root lattices taken
// negative definite; E(n) extends past 8 along the long arm, with the usual
// low-rank conventions E3=A2+A1, E4=A4, E5=D5), "H", "H(3)", "II(1,1)",
// "I(1,9)" (odd unimodular diag(+1^p, -1^q)), "<k>" (rank one), "0", sums
// joined with '+', and an explicit Gram literal like "[[-2,1],[1,-4]]".
IntLattice standard_lattice(const std::string& name);

IntLattice direct_sum(const IntLattice& a, const IntLattice& b);

// Form induced on the column span of B, i.e. Gram B^T G B.
IntLattice sublattice_form(const IntLattice& ambient, const MatZ& basis);

// gcd of pairings of v against the whole lattice (the divisor of v).
Int divisor_of(const IntLattice& l, const MatZ& v);

// --- Z-module operations on column spans inside Z^n ---------------------

// True when span(B) is a direct summand of Z^n (all Smith invariants 1).
bool is_primitive_sublattice(const MatZ& basis);

// Basis of the saturation span_Q(B) intersected with Z^n. Requires full
// column rank.
MatZ saturate(const MatZ& basis);

// Index [saturation : span], i.e. product of Smith invariants.
Int index_in_saturation(const MatZ& basis);

// Columns completing a primitive column span to a basis of Z^n; the result is
// SNF-canonical, so repeated calls agree.
MatZ complement_basis(const MatZ& basis);

// Basis of the subgroup of Z^n generated by the columns, which may be
// dependent. Right multiplication by a unimodular matrix, so the column span
// is unchanged.
MatZ column_span_basis(const MatZ& a);

// Basis of span(a) intersect span(b) as subgroups of Z^n (no saturation is
// applied; the intersection of saturated spans is automatically saturated).
MatZ sublattice_intersection(const MatZ& a, const MatZ& b);

// Basis of {x : <x, s> = 0 for all s in span(B)}; always saturated.
MatZ orthogonal_complement(const IntLattice& l, const MatZ& basis);

// --- Degenerate forms ----------------------------------------------------

// Quotient by the radical of the pairing. proj maps ambient coordinates to
// quotient coordinates; comp_basis is a lift of the quotient basis, radical a
// basis of the radical. proj * comp_basis = I.
struct RadicalQuotient {
  IntLattice quotient;
  MatZ proj;
  MatZ comp_basis;
  MatZ radical;
};
RadicalQuotient quotient_by_radical(const IntLattice& l);

// --- Discriminant group -------------------------------------------------

// disc(L) = L*/L for nondegenerate L, as invariant factors with generators.
// Generator classes are stored by integral representatives x_i (the dual
// vector is G^{-1} x_i). Quadratic values are canonical representatives in
// [0,2) when the lattice is even (q defined mod 2Z), else in [0,1).
struct DiscGroup {
  std::vector<Int> orders;  // invariant factors > 1, divisibility chain
  MatZ gens;                // one column per order
  std::vector<Rat> qvals;
  MatQ linking;  // pairing of generators mod Z, entries in [0,1)
  bool even = false;

  Int order() const {
    Int n = 1;
    for (const auto& d : orders) n *= d;
    return n;
  }
  bool is_trivial() const { return orders.empty(); }
};
DiscGroup disc_group(const IntLattice& l);

// Quadratic value of an arbitrary element written in generator exponents,
// reduced to the canonical range.
Rat disc_q_value(const IntLattice& l, const DiscGroup& d, const std::vector<Int>& exps);

// For cyclic disc groups: whether some generator g has q(g) equal to value
// (compared mod 2Z for even lattices, mod Z otherwise).
bool cyclic_disc_has_generator_q(const IntLattice& l, const Rat& value);
// Same test with the comparison period forced: 1 compares modulo Z, 2 modulo 2Z.
bool cyclic_disc_has_generator_q(const IntLattice& l, const Rat& value, int period);

// --- Vectors of bounded norm, roots -------------------------------------

// All v != 0 with 0 < -<v,v> <= max_abs_norm in a negative definite lattice,
// one representative per antipodal pair (first nonzero coordinate positive),
// sorted lexicographically.
std::vector<MatZ> short_vectors(const IntLattice& l, const Int& max_abs_norm);

// Roots are the norm -2 vectors. positive_roots picks the half with
// <delta, h> > 0; h defaults to (1, N, N^2, ...), N = 10^6, and a root
// pairing to zero with h is an error. Requires a definite lattice (positive
// definite yields the empty set).
std::vector<MatZ> positive_roots(const IntLattice& l, const std::optional<MatQ>& h = std::nullopt);

// Indecomposable positive roots (not a sum of two positive roots).
std::vector<MatZ> simple_roots(const IntLattice& l, const std::optional<MatQ>& h = std::nullopt);

// ADE classification of the root sublattice: list of ("A"|"D"|"E", n) sorted
// by letter then rank, e.g. E8 + A2 + A2 -> {A2, A2, E8}. Throws when a
// component is not a simply laced diagram.
std::vector<std::pair<std::string, int>> root_system_type(const IntLattice& l);

// Simple roots grouped into connected diagram components, each component
// classified; used to build isometries between root lattices.
struct RootComponent {
  std::string letter;
  int n = 0;
  std::vector<MatZ> simples;  // ordered along the diagram, branch node placed
                              // canonically (see implementation)
};
std::vector<RootComponent> root_components(const IntLattice& l);

// --- Isometry search -----------------------------------------------------

// Exact isometry between definite lattices of equal rank by backtracking over
// vectors of matching norms. On success, iso satisfies P^T G2 P = G1 and
// P v = w for every fixed pair (v, w). exhausted distinguishes a certified
// absence (search space fully explored) from a budget cutoff.
struct IsoSearchResult {
  std::optional<MatZ> iso;
  bool exhausted = true;
};
IsoSearchResult definite_isometry(const IntLattice& l1, const IntLattice& l2,
                                  const std::vector<std::pair<MatZ, MatZ>>& fixed = {},
                                  std::uint64_t node_budget = 20'000'000);

// Greedy exact size reduction for definite Gram matrices; returns T with
// T^T G T reduced. Plumbing only, not a reduction-theory guarantee.
MatZ greedy_reduce(const IntLattice& l);

// LLL-style reduction of a possibly indefinite nondegenerate symmetric form,
// carried out exactly. The exchange condition uses absolute values of the
// Gram-Schmidt norms, so either the loop ends with a unimodular basis whose
// Gram matrix is small, or a leading minor collapses along the way and a
// primitive isotropic vector is returned instead (definite forms never hit
// that branch).
struct IndefReduction {
  MatZ basis;
  std::optional<MatZ> isotropic;
};
IndefReduction indefinite_reduce(const IntLattice& l);

}  // namespace k3lat
