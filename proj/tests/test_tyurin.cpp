#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "k3lat/tyurin.hpp"

using namespace k3lat;

namespace {

GluedModel chain_pair(int d) {
  return build_glued(chain_model(12 - d), chain_model(12 + d));
}

bool same_span(const MatZ& a, const MatZ& b) {
  return solve_int(a, b).has_value() && solve_int(b, a).has_value();
}

MatZ slice_rows(const MatZ& m, int lo, int hi) {
  MatZ out(hi - lo, m.cols());
  for (int i = lo; i < hi; ++i)
    for (int j = 0; j < m.cols(); ++j) out(i - lo, j) = m(i, j);
  return out;
}

MatZ erase_rows(const MatZ& m, int lo, int hi) {
  MatZ out(m.rows() - (hi - lo), m.cols());
  int t = 0;
  for (int i = 0; i < m.rows(); ++i) {
    if (i >= lo && i < hi) continue;
    for (int j = 0; j < m.cols(); ++j) out(t, j) = m(i, j);
    ++t;
  }
  return out;
}

// Part of span(cols) hitting one factor block of the ambient pair lattice:
// combinations whose complementary block vanishes, read in that factor.
MatZ factor_slice(const GluedModel& m, const MatZ& ambient_cols, int factor) {
  const int a1 = m.d1.ns.rank(), a2 = m.d2.ns.rank();
  int lo = factor == 1 ? 0 : a1;
  int hi = factor == 1 ? a1 : a1 + a2;
  MatZ y = kernel_int(erase_rows(ambient_cols, lo, hi));
  return column_span_basis(slice_rows(ambient_cols, lo, hi) * y);
}

// Exceptional-class difference e_i - e_{i+1} of a blown-up plane, pulled back
// from standard coordinates to the coordinates the model actually uses.
MatZ exc_diff(const NsStandardization& s, int i) {
  MatZ v(s.to_std.rows(), 1);
  v(i, 0) = 1;
  v(i + 1, 0) = -1;
  return *solve_int(s.to_std, v);
}

MatZ random_primitive(std::mt19937& rng, int dim, int k) {
  std::uniform_int_distribution<int> entry(-3, 3);
  for (;;) {
    MatZ b(dim, k);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < k; ++j) b(i, j) = entry(rng);
    MatZ s = saturate(b);
    if (s.cols() == k) return s;
  }
}

}  // namespace

TEST_CASE("gluing chain pairs yields the expected degeneration invariants") {
  for (int d = 1; d <= 9; ++d) {
    CAPTURE(d);
    GluedModel m = chain_pair(d);
    CHECK(m.degree_num == d);
    CHECK(m.degree == std::to_string(d));
    CHECK_FALSE(m.swapped);
    CHECK(m.rank() == 24);
    CHECK(m.ker_basis.cols() == 22);
    CHECK(m.quot.rank() == 20);
    CHECK(m.quot.is_unimodular());
    CHECK(m.ns_rank() == 18);
    CHECK(m.match_rank() == 19);
    CHECK(m.ns_quot.is_even());
    CHECK(m.ns_quot.is_unimodular());
    Inertia sig = m.ns_quot.signature();
    CHECK(sig.pos == 1);
    CHECK(sig.neg == 17);
    // Both canonical classes have a primitive component, so the curve pair
    // class is itself primitive.
    CHECK(m.curve_multiple == 1);
    CHECK(m.curve_pair == m.degenerate_class);
    CHECK(m.k1perp.cols() == m.g1.rank() - 3);
    CHECK(m.k2perp.cols() == m.g2.rank() - 3);
  }
}

TEST_CASE("degree tags distinguish the even and odd square-eight factors") {
  GluedModel even8 = build_glued(quadric_model(), chain_model(20));
  CHECK(even8.degree == "8'");
  CHECK(even8.degree_num == 8);
  CHECK(even8.d1.ns.is_even());

  GluedModel odd8 = build_glued(chain_model(4), chain_model(20));
  CHECK(odd8.degree == "8");
  CHECK_FALSE(odd8.d1.ns.is_even());

  GluedModel zero = build_glued(chain_model(12), chain_model(12));
  CHECK(zero.degree == "0");
  CHECK(zero.degree_num == 0);
  // In degree zero the degenerate class already lies inside the sum of the
  // canonical perps, so couplings through it are never finite.
  MatZ amb = zero.match_basis * zero.degenerate_class;
  MatZ z1 = slice_rows(amb, 0, zero.d1.ns.rank());
  MatZ z2 = slice_rows(amb, zero.d1.ns.rank(), amb.rows());
  CHECK((zero.d1.k.transposed() * zero.d1.ns.gram * z1).is_zero());
  CHECK((zero.d2.k.transposed() * zero.d2.ns.gram * z2).is_zero());
  CHECK_THROWS_AS(
      coupling_group(zero, lattice_polarisation(zero, MatZ::identity(18))),
      std::invalid_argument);
}

TEST_CASE("swapping the factor order produces the same glued model") {
  GluedModel m1 = build_glued(chain_model(8), chain_model(16));
  GluedModel m2 = build_glued(chain_model(16), chain_model(8));
  CHECK_FALSE(m1.swapped);
  CHECK(m2.swapped);
  CHECK(m1.g.gram == m2.g.gram);
  CHECK(m1.g.f == m2.g.f);
  CHECK(m1.ker_form.gram == m2.ker_form.gram);
  CHECK(m1.match_form.gram == m2.match_form.gram);
  CHECK(m1.ns_quot.gram == m2.ns_quot.gram);
  CHECK(m1.degree == "4");
}

TEST_CASE("invalid gluings are rejected with reasons") {
  CHECK_THROWS_AS(build_glued(chain_model(3), chain_model(20)), std::invalid_argument);
  CHECK_THROWS_AS(build_glued(quadric_model(), chain_model(16)), std::invalid_argument);
  CHECK_THROWS_AS(build_glued(chain_model(3), chain_model(3)), std::invalid_argument);

  // A fibred pseudolattice whose twist moves a is not surface-like, hence
  // not quasi del Pezzo.
  EFibred bad = z_chain({vec_b(), vec_b(), vec_b()});
  CHECK(classify_qdp(bad).model == "None");
  CHECK_THROWS_AS(build_glued(bad, chain_model(12)), std::invalid_argument);
}

TEST_CASE("anticanonical pair inputs glue like their chain models") {
  MatZ g2(19, 19);
  g2(0, 0) = 1;
  for (int i = 1; i < 19; ++i) g2(i, i) = -1;
  MatZ k2(19, 1);
  k2(0, 0) = -3;
  for (int i = 1; i < 19; ++i) k2(i, 0) = 1;
  GluedModel m = build_glued(lattice_from_gram(MatZ{{1}}), MatZ{{-3}},
                             lattice_from_gram(g2), k2);
  CHECK(m.degree == "9");
  CHECK(m.rank() == 24);
  CHECK(m.ns_quot.is_even());
  CHECK(m.ns_quot.is_unimodular());
}

TEST_CASE("full and zero lifts hit the canonical perps of the factors") {
  GluedModel m = chain_pair(9);

  Polarisation zero = lattice_polarisation(m, MatZ(18, 0));
  Polarisation zhat = lift_polarisation(m, zero);
  CHECK(zhat.rank() == 1);
  CHECK(same_span(zhat.basis, m.degenerate_class));
  CHECK(project_polarisation(m, zhat).rank() == 0);
  CHECK(intersection_polarisation(m, zhat, 1).rank() == 0);
  CHECK(intersection_polarisation(m, zhat, 2).rank() == 0);

  Polarisation full = lattice_polarisation(m, MatZ::identity(18));
  Polarisation fhat = lift_polarisation(m, full);
  CHECK(fhat.basis == MatZ::identity(19));
  Polarisation l1 = intersection_polarisation(m, fhat, 1);
  Polarisation l2 = intersection_polarisation(m, fhat, 2);
  CHECK(l1.rank() == 0);
  CHECK(l2.rank() == 18);
  CHECK(same_span(l2.basis, m.k2perp));
  IntLattice restr = lattice_from_gram(
      l2.basis.transposed() * m.d2.ns.gram * l2.basis);
  CHECK(restr.is_even());
  CHECK(restr.determinant() == standard_lattice("E(18)").determinant());
  Inertia sig = restr.signature();
  CHECK(sig.pos == 1);
  CHECK(sig.neg == 17);
}

TEST_CASE("lift and project are mutually inverse on random sublattices") {
  GluedModel m = chain_pair(9);
  std::mt19937 rng(20260825);
  std::uniform_int_distribution<int> rk(1, 3);
  for (int trial = 0; trial < 60; ++trial) {
    CAPTURE(trial);
    int k = rk(rng);
    Polarisation l = lattice_polarisation(m, random_primitive(rng, 18, k));
    Polarisation lhat = lift_polarisation(m, l);
    CHECK(lhat.rank() == k + 1);
    CHECK(solve_int(lhat.basis, m.degenerate_class).has_value());
    CHECK(is_primitive_sublattice(lhat.basis));
    Polarisation back = project_polarisation(m, lhat);
    CHECK(same_span(back.basis, l.basis));
  }
}

TEST_CASE("coupling of the full polarisation recovers the degeneration degree") {
  for (int d = 1; d <= 9; ++d) {
    CAPTURE(d);
    GluedModel m = chain_pair(d);
    CouplingGroup cg =
        coupling_group(m, lattice_polarisation(m, MatZ::identity(18)));
    CHECK(cg.is_torsion());
    CHECK(cg.index() == (d == 9 ? 3 : d));
  }
  GluedModel even8 = build_glued(quadric_model(), chain_model(20));
  CouplingGroup cg =
      coupling_group(even8, lattice_polarisation(even8, MatZ::identity(18)));
  CHECK(cg.is_torsion());
  CHECK(cg.index() == 4);
}

TEST_CASE("transported classes always generate a finite-index coupling") {
  GluedModel m = chain_pair(9);
  NsStandardization s = standardize_polarized_ns(m.d2.ns, m.d2.k);
  REQUIRE(s.status == NsStandardization::Status::Ok);
  MatZ v1 = factor_class_in_quot(m, 2, exc_diff(s, 1));
  MatZ v2 = factor_class_in_quot(m, 2, exc_diff(s, 5));
  Polarisation l = lattice_polarisation(m, saturate(hstack(v1, v2)));
  CouplingGroup cg = coupling_group(m, l);
  CHECK(cg.free_rank == 0);
}

namespace {

// Independent criterion for torsion coupling: for both factors, the
// complement of L_i inside the canonical perp must agree with the part of
// the complement of the lifted polarisation hitting that factor.
bool complement_criterion(const GluedModel& m, const Polarisation& l) {
  Polarisation lhat = lift_polarisation(m, l);
  MatZ lhat_perp = orthogonal_complement(m.match_form, lhat.basis);
  for (int factor = 1; factor <= 2; ++factor) {
    const SurfaceLikeData& d = factor == 1 ? m.d1 : m.d2;
    const MatZ& kp = factor == 1 ? m.k1perp : m.k2perp;
    Polarisation li = intersection_polarisation(m, lhat, factor);
    MatZ inside = kp * kernel_int(li.basis.transposed() * d.ns.gram * kp);
    MatZ outside = factor_slice(m, m.match_basis * lhat_perp, factor);
    if (!same_span(inside, outside)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("coupling torsion matches the orthogonal complement criterion") {
  std::mt19937 rng(77103);
  std::uniform_int_distribution<int> rk(1, 3);

  // Degree nine first: one canonical perp is zero, so a dimension count makes
  // every coupling torsion; the criterion must agree throughout.
  GluedModel m9 = chain_pair(9);
  for (int trial = 0; trial < 25; ++trial) {
    CAPTURE(trial);
    Polarisation l = lattice_polarisation(m9, random_primitive(rng, 18, rk(rng)));
    bool torsion = coupling_group(m9, l).is_torsion();
    CHECK(torsion);
    CHECK(torsion == complement_criterion(m9, l));
  }

  // Degree four: generic small polarisations meet neither factor and are
  // free, while spans of transported classes are torsion by construction, so
  // both sides of the equivalence get exercised.
  GluedModel m4 = chain_pair(4);
  std::uniform_int_distribution<int> comb(-2, 2);
  int torsion_seen = 0, free_seen = 0;
  for (int trial = 0; trial < 40; ++trial) {
    CAPTURE(trial);
    MatZ basis;
    if (trial % 2 == 0) {
      basis = random_primitive(rng, 18, rk(rng));
    } else {
      int pieces = 1 + trial % 2 + trial % 3;
      MatZ cols(18, pieces);
      for (int j = 0; j < pieces; ++j) {
        const MatZ& kp = j % 2 == 0 ? m4.k2perp : m4.k1perp;
        MatZ c(kp.cols(), 1);
        for (int i = 0; i < kp.cols(); ++i) c(i, 0) = comb(rng);
        cols.set_col(j, factor_class_in_quot(m4, j % 2 == 0 ? 2 : 1, kp * c));
      }
      basis = saturate(cols);
      if (basis.cols() == 0) basis = random_primitive(rng, 18, 1);
    }
    Polarisation l = lattice_polarisation(m4, basis);
    bool torsion = coupling_group(m4, l).is_torsion();
    (torsion ? torsion_seen : free_seen)++;
    CHECK(torsion == complement_criterion(m4, l));
  }
  CHECK(torsion_seen > 0);
  CHECK(free_seen > 0);
}

TEST_CASE("stable checker accepts the chain of exceptional differences") {
  GluedModel m = chain_pair(9);
  NsStandardization s = standardize_polarized_ns(m.d2.ns, m.d2.k);
  REQUIRE(s.status == NsStandardization::Status::Ok);

  std::vector<MatZ> deltas;  // ambient pair coords
  for (int i = 1; i <= 17; ++i)
    deltas.push_back(factor_embed(m, 2, exc_diff(s, i)));

  MatZ cols(19, 18);
  cols.set_col(0, m.degenerate_class);
  for (int i = 0; i < 17; ++i) cols.set_col(i + 1, match_coords(m, deltas[i]));
  Polarisation lhat{Polarisation::Kind::Lifted, 0, saturate(cols)};
  REQUIRE(lhat.rank() == 18);

  StableVerdict v = check_stable_polarisation(m, lhat, deltas);
  CHECK(v.contains_curve_class);
  CHECK_FALSE(v.has_positive_square);  // degenerate-plus-definite, no positive direction
  CHECK(v.roots_effective);
  CHECK(v.failing_roots.empty());
  CHECK_FALSE(v.ok());

  StableVerdict bare = check_stable_polarisation(m, lhat, {});
  CHECK_FALSE(bare.roots_effective);
  CHECK(bare.failing_roots.size() > 0);
}

TEST_CASE("stable checker on the full lattice needs supplied roots") {
  GluedModel m = chain_pair(9);
  NsStandardization s = standardize_polarized_ns(m.d2.ns, m.d2.k);
  REQUIRE(s.status == NsStandardization::Status::Ok);
  Polarisation fhat{Polarisation::Kind::Lifted, 0, MatZ::identity(19)};

  // indefinite modulo the degenerate class: enumeration must refuse
  CHECK_THROWS_AS(check_stable_polarisation(m, fhat, {}), std::invalid_argument);

  std::vector<MatZ> roots;
  for (int i = 1; i <= 3; ++i) roots.push_back(factor_embed(m, 2, exc_diff(s, i)));
  StableVerdict v = check_stable_polarisation(m, fhat, roots, roots);
  CHECK(v.contains_curve_class);
  CHECK(v.has_positive_square);
  CHECK(m.match_form.norm(v.positive_witness) > 0);
  CHECK(v.roots_effective);
  CHECK(v.ok());

  // candidate roots must genuinely have square -2
  MatZ h_std(19, 1);
  h_std(0, 0) = 1;
  MatZ h_amb = factor_embed(m, 2, *solve_int(s.to_std, h_std));
  CHECK_THROWS_AS(check_stable_polarisation(m, fhat, roots, {h_amb}),
                  std::invalid_argument);
}

TEST_CASE("definite lifted polarisations enumerate their own roots") {
  GluedModel m = chain_pair(9);
  NsStandardization s = standardize_polarized_ns(m.d2.ns, m.d2.k);
  REQUIRE(s.status == NsStandardization::Status::Ok);
  MatZ d1 = exc_diff(s, 1), d3 = exc_diff(s, 3);  // orthogonal -2 classes
  MatZ v1 = factor_class_in_quot(m, 2, d1);
  MatZ v2 = factor_class_in_quot(m, 2, d3);
  Polarisation l = lattice_polarisation(m, saturate(hstack(v1, v2)));
  Polarisation lhat = lift_polarisation(m, l);

  std::vector<MatZ> both = {factor_embed(m, 2, d1), factor_embed(m, 2, d3)};
  StableVerdict v = check_stable_polarisation(m, lhat, both);
  CHECK(v.contains_curve_class);
  CHECK_FALSE(v.has_positive_square);
  CHECK(v.roots_effective);

  std::vector<MatZ> onlyfirst = {factor_embed(m, 2, d1)};
  StableVerdict w = check_stable_polarisation(m, lhat, onlyfirst);
  CHECK_FALSE(w.roots_effective);
  CHECK(w.failing_roots.size() == 1);

  // a lifted line through the degenerate class alone: clause three is vacuous
  Polarisation zhat = lift_polarisation(m, lattice_polarisation(m, MatZ(18, 0)));
  StableVerdict z = check_stable_polarisation(m, zhat, {});
  CHECK(z.contains_curve_class);
  CHECK_FALSE(z.has_positive_square);
  CHECK(z.roots_effective);
  CHECK_FALSE(z.ok());
}

TEST_CASE("weak del Pezzo checks gate on the canonical square") {
  GluedModel m = chain_pair(9);
  // the positive-square factor passes with the empty sublattice
  CHECK(m.k1perp.cols() == 0);
  WdpVerdict empty = check_wdp_polarisation(m.d1.ns, m.d1.k, MatZ(1, 0), {});
  CHECK(empty.ok());
  // the other side of the gluing can never be weak del Pezzo
  CHECK_THROWS_AS(check_wdp_polarisation(m.d2.ns, m.d2.k, m.k2perp, {}),
                  std::invalid_argument);
}

TEST_CASE("degree one pair polarised by its full canonical perp") {
  SurfaceLikeData d = surface_like(chain_model(11));
  REQUIRE(d.ok);
  CHECK(d.degree == 1);
  MatZ kp = orthogonal_complement(d.ns, d.k);
  REQUIRE(kp.cols() == 8);
  IntLattice restr = lattice_from_gram(kp.transposed() * d.ns.gram * kp);
  auto type = root_system_type(restr);
  REQUIRE(type.size() == 1);
  CHECK(type[0].first == "E");
  CHECK(type[0].second == 8);

  std::vector<MatZ> effective;
  for (const MatZ& sr : simple_roots(restr)) effective.push_back(kp * sr);
  WdpVerdict v = check_wdp_polarisation(d.ns, d.k, kp, effective);
  CHECK(v.primitive);
  CHECK(v.negative_definite);
  CHECK(v.orthogonal_to_k);
  CHECK(v.roots_effective);
  CHECK(v.ok());

  // dropping a simple root leaves unreachable roots
  std::vector<MatZ> partial(effective.begin(), effective.end() - 1);
  WdpVerdict w = check_wdp_polarisation(d.ns, d.k, kp, partial);
  CHECK_FALSE(w.roots_effective);
  CHECK(w.failing_roots.size() > 0);

  // a generator list containing both signs of a root cannot orient it
  std::vector<MatZ> twosided = effective;
  twosided.push_back(-effective[0]);
  WdpVerdict u = check_wdp_polarisation(d.ns, d.k, kp, twosided);
  CHECK_FALSE(u.roots_effective);

  // a sublattice not orthogonal to k fails that clause
  WdpVerdict t = check_wdp_polarisation(d.ns, d.k, d.k, {});
  CHECK_FALSE(t.ok());
  CHECK_FALSE(t.negative_definite);
}

TEST_CASE("isometries descend to the middle lattice and decompose back") {
  GluedModel m = chain_pair(9);
  CHECK(descend_isometries(m, MatZ::identity(1), MatZ::identity(19)) ==
        MatZ::identity(18));

  // swap two exceptional classes downstairs; this fixes the canonical class
  NsStandardization s = standardize_polarized_ns(m.d2.ns, m.d2.k);
  REQUIRE(s.status == NsStandardization::Status::Ok);
  MatZ p_std = MatZ::identity(19);
  p_std.swap_cols(1, 2);
  MatZ psi2 = *solve_int(s.to_std, p_std * s.to_std);
  REQUIRE(psi2.transposed() * m.d2.ns.gram * psi2 == m.d2.ns.gram);
  REQUIRE(psi2 * m.d2.k == m.d2.k);

  MatZ out = descend_isometries(m, MatZ::identity(1), psi2);
  CHECK(out != MatZ::identity(18));
  CHECK(out.transposed() * m.ns_quot.gram * out == m.ns_quot.gram);

  IsometryDecomposition dec = decompose_isometry(m, out);
  CHECK(dec.sign == 1);
  CHECK(dec.psi1 == MatZ::identity(1));
  CHECK(dec.psi2 == psi2);

  IsometryDecomposition neg = decompose_isometry(m, out * Int(-1));
  CHECK(neg.sign == -1);
  CHECK(neg.psi2 == psi2);

  IsometryDecomposition minus = decompose_isometry(m, MatZ::identity(18) * Int(-1));
  CHECK(minus.sign == -1);
  CHECK(minus.psi1 == MatZ::identity(1));
  CHECK(minus.psi2 == MatZ::identity(19));

  // a factor map failing to fix the canonical class is rejected up front
  MatZ bad = MatZ::identity(19);
  bad.swap_cols(0, 1);
  CHECK_THROWS_AS(descend_isometries(m, MatZ::identity(1), bad),
                  std::invalid_argument);
}
