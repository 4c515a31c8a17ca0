#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "k3lat/pseudolattice.hpp"

using namespace k3lat;

namespace {

MatZ random_unimodular(std::mt19937& rng, int n, int ops = 15) {
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_int_distribution<int> coef(-2, 2);
  MatZ u = MatZ::identity(n);
  for (int s = 0; s < ops; ++s) {
    int i = pick(rng), j = pick(rng);
    if (i == j) continue;
    Int c = coef(rng);
    u.add_col_multiple(i, j, c);
    if (s % 3 == 0) u.swap_cols(i, j);
  }
  return u;
}

// Conjugate a fibred pseudolattice by a basis change (columns of u are the
// new basis vectors in old coordinates).
EFibred change_basis(const EFibred& g, const MatZ& u) {
  return make_fibred(u.transposed() * g.gram * u, g.f * u);
}

IntLattice odd_hyperbolic(int m) {
  MatZ g(m + 1, m + 1);
  g(0, 0) = 1;
  for (int i = 1; i <= m; ++i) g(i, i) = -1;
  return lattice_from_gram(g);
}

MatZ standard_k(int m) {
  MatZ k(m + 1, 1);
  k(0, 0) = -3;
  for (int i = 1; i <= m; ++i) k(i, 0) = 1;
  return k;
}

}  // namespace

TEST_CASE("symplectic pairing and Dehn twists on reference vectors") {
  CHECK(sympl_pair(vec_a(), vec_b()) == -1);
  CHECK(sympl_pair(vec_b(), vec_a()) == 1);
  CHECK(sympl_pair(ab(2, 5), ab(2, 5)) == 0);
  CHECK(sympl_pair(ab(1, 3), ab(2, 1)) == 5);

  CHECK(dehn_twist(vec_a()) == MatZ{{1, 1}, {0, 1}});
  CHECK(dehn_twist(vec_b()) == MatZ{{1, 0}, {-1, 1}});
  CHECK(dehn_twist(ab(3, 1)) == MatZ{{-2, 9}, {-1, 4}});
  CHECK(dehn_twist(ab(6, 1)) == MatZ{{-5, 36}, {-1, 7}});
  CHECK(dehn_twist(ab(2, 1)) == MatZ{{-1, 4}, {-1, 3}});
  CHECK(dehn_twist(ab(4, 1)) == MatZ{{-3, 16}, {-1, 5}});
  CHECK(dehn_twist(ab(-1, 1)) == MatZ{{2, 1}, {-1, 0}});
  CHECK(dehn_twist(ab(1, 1)) == MatZ{{0, 1}, {-1, 2}});

  // A twist fixes its own vector and has determinant one.
  for (auto& v : {ab(3, 1), ab(-2, 5), ab(0, 1)}) {
    MatZ t = dehn_twist(v);
    CHECK(t * v == v);
    CHECK(det(t) == 1);
  }
  CHECK(dehn_twist(-vec_a()) == dehn_twist(vec_a()));
  CHECK_THROWS_AS(dehn_twist(ab(2, 4)), std::invalid_argument);
}

TEST_CASE("fibred pseudolattice operators on the two vector chain") {
  EFibred g = z_chain({vec_a(), vec_b()});
  CHECK(g.gram == MatZ{{1, -1}, {0, 1}});
  MatZ expect{{0, 1}, {-1, 1}};
  CHECK(g.serre() == expect);
  CHECK(g.cotwist() == expect);
  CHECK(g.is_relative_cy());
  CHECK(g.twist() == dehn_twist(vec_a()) * dehn_twist(vec_b()));

  // Defining property of the adjoint: <v, r(x)> = <f(v), x>.
  MatZ r = g.adjoint();
  for (int i = 0; i < g.rank(); ++i)
    for (const MatZ& x : {vec_a(), vec_b()}) {
      MatZ v = unit_vec(g.rank(), i);
      CHECK(g.pair(v, r * x) == sympl_pair(g.f * v, x));
    }
}

TEST_CASE("chains multiply their Dehn twists and glue by concatenation") {
  std::vector<MatZ> vs{vec_b(), ab(3, 1), ab(6, 1), vec_a(), vec_a()};
  EFibred g = z_chain(vs);
  MatZ prod = MatZ::identity(2);
  for (const auto& v : vs) prod = prod * dehn_twist(v);
  CHECK(g.twist() == prod);
  CHECK(g.is_relative_cy());

  EFibred left = z_chain({vec_b(), ab(3, 1)});
  EFibred right = z_chain({ab(6, 1), vec_a(), vec_a()});
  EFibred glued = glue_fibred(left, right, 1);
  CHECK(glued.gram == g.gram);
  CHECK(glued.f == g.f);
  CHECK(glued.twist() == left.twist() * right.twist());

  EFibred flipped = glue_fibred(left, right, -1);
  CHECK(flipped.gram == z_chain({vec_b(), ab(3, 1), ab(-6, -1), -vec_a(), -vec_a()}).gram);
  CHECK(flipped.twist() == glued.twist());

  CHECK_THROWS_AS(glue_fibred(left, right, 2), std::invalid_argument);
  CHECK_THROWS_AS(z_chain({ab(2, 4)}), std::invalid_argument);
  CHECK_THROWS_AS(make_fibred(MatZ{{1, 1}, {1, 1}}, MatZ::zero(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(make_fibred(MatZ{{2}}, MatZ::zero(2, 2)), std::invalid_argument);
}

TEST_CASE("operators demand a unimodular form") {
  EFibred g = make_fibred(MatZ{{2}}, MatZ{{1}, {0}});
  CHECK_THROWS_AS(g.serre(), std::invalid_argument);
  CHECK_THROWS_AS(g.adjoint(), std::invalid_argument);
}

TEST_CASE("degeneration models have the expected Gram matrices and twists") {
  EFibred c3 = chain_model(3);
  CHECK(c3.gram == MatZ{{1, 3, 6}, {0, 1, 3}, {0, 0, 1}});
  CHECK(c3.twist() == MatZ{{1, -9}, {0, 1}});

  for (int n = 3; n <= 21; ++n) {
    EFibred c = chain_model(n);
    CHECK(c.rank() == n);
    CHECK(c.twist() == MatZ{{1, n - 12}, {0, 1}});
    CHECK(c.is_relative_cy());
  }

  EFibred q = quadric_model();
  CHECK(q.gram == MatZ{{1, 2, 2, 4}, {0, 1, 0, 2}, {0, 0, 1, 2}, {0, 0, 0, 1}});
  CHECK(q.twist() == MatZ{{1, -8}, {0, 1}});
  CHECK(q.is_relative_cy());

  CHECK_THROWS_AS(chain_model(2), std::invalid_argument);
}

TEST_CASE("surface-like analysis of the chain models") {
  for (int n = 3; n <= 21; ++n) {
    CAPTURE(n);
    EFibred c = chain_model(n);
    SurfaceLikeData d = surface_like(c);
    REQUIRE(d.ok);
    CHECK(is_primitive_vector(d.p));
    CHECK(d.ns.rank() == n - 2);
    CHECK(d.ns.is_unimodular());
    CHECK_FALSE(d.ns.is_even());
    CHECK(d.ns.signature() == Inertia{1, n - 3, 0});
    CHECK(d.degree == 12 - n);
    // The canonical class pairs with every class the way the norm does mod 2.
    for (int i = 0; i < d.ns.rank(); ++i) {
      MatZ e = unit_vec(d.ns.rank(), i);
      CHECK((d.ns.pair(d.k, e) - d.ns.norm(e)) % 2 == 0);
    }
    QdpClass cl = classify_qdp(c);
    CHECK(cl.model == "Chain");
    CHECK(cl.n == n);
    CHECK(cl.degree == 12 - n);
  }
}

TEST_CASE("surface-like analysis of the quadric model") {
  EFibred q = quadric_model();
  SurfaceLikeData d = surface_like(q);
  REQUIRE(d.ok);
  CHECK(d.ns.rank() == 2);
  CHECK(d.ns.is_unimodular());
  CHECK(d.ns.is_even());
  CHECK(d.ns.signature() == Inertia{1, 1, 0});
  CHECK(d.degree == 8);
  QdpClass cl = classify_qdp(q);
  CHECK(cl.model == "Quadric");
  CHECK(cl.degree == 8);
}

TEST_CASE("non surface-like inputs are reported with a reason") {
  // Fibre map zero: the point class vanishes.
  EFibred z = make_fibred(MatZ{{1}}, MatZ::zero(2, 1));
  SurfaceLikeData dz = surface_like(z);
  CHECK_FALSE(dz.ok);
  CHECK(dz.reason == "point class vanishes");

  // A single vertex mapping to b: twist moves a.
  EFibred one = z_chain({vec_b()});
  SurfaceLikeData d1 = surface_like(one);
  CHECK_FALSE(d1.ok);
  CHECK(d1.reason == "twist does not fix a");

  QdpClass cl = classify_qdp(one);
  CHECK(cl.model == "None");
}

TEST_CASE("orthogonal of the canonical class inside the chain models") {
  // Definite shapes for small n.
  auto kperp = [](int n) {
    SurfaceLikeData d = surface_like(chain_model(n));
    REQUIRE(d.ok);
    return canonical_perp(d);
  };

  CHECK(kperp(3).rank() == 0);

  auto matches = [](const IntLattice& got, const IntLattice& want) {
    IsoSearchResult r = definite_isometry(got, want);
    return r.iso.has_value();
  };

  CHECK(matches(kperp(4), lattice_from_gram(MatZ{{-8}})));
  CHECK(matches(kperp(5), lattice_from_gram(MatZ{{-2, 1}, {1, -4}})));
  CHECK(matches(kperp(6), standard_lattice("A2+A1")));
  CHECK(matches(kperp(7), standard_lattice("A4")));
  CHECK(matches(kperp(8), standard_lattice("D5")));
  CHECK(matches(kperp(9), standard_lattice("E6")));
  CHECK(matches(kperp(10), standard_lattice("E7")));
  CHECK(matches(kperp(11), standard_lattice("E8")));

  // n = 12: the canonical class is isotropic, so it sits inside its own
  // orthogonal and the restricted form is degenerate with a rank one radical.
  IntLattice deg = kperp(12);
  CHECK(deg.rank() == 9);
  CHECK(deg.signature().zero == 1);
  RadicalQuotient rq = quotient_by_radical(deg);
  CHECK(rq.radical.cols() == 1);
  IsoSearchResult r8 = definite_isometry(rq.quotient, standard_lattice("E8"));
  CHECK(r8.iso.has_value());

  // Past the isotropic wall the orthogonal goes hyperbolic; it stays even
  // with cyclic discriminant group of order n - 12.
  for (int n = 13; n <= 21; ++n) {
    CAPTURE(n);
    IntLattice l = kperp(n);
    CHECK(l.rank() == n - 3);
    CHECK(l.is_even());
    CHECK(l.signature() == Inertia{1, n - 4, 0});
    Int order = n - 12;
    DiscGroup dg = disc_group(l);
    CHECK(dg.order() == order);
    if (order > 1) {
      // Projecting an ambient unit vector onto the orthogonal yields a
      // generator of square exactly 1/(n-12) - 1; modulo one that is the
      // familiar 1/(n-12).
      CHECK(cyclic_disc_has_generator_q(l, Rat(1, n - 12), 1));
      CHECK(cyclic_disc_has_generator_q(l, Rat(1, n - 12) - 1, 2));
    }
  }
}

TEST_CASE("anticanonical pair models recover their input") {
  std::mt19937 rng(20240817);
  for (int trial = 0; trial < 40; ++trial) {
    int m = 1 + trial % 5;
    MatZ u = random_unimodular(rng, m + 1);
    IntLattice base = odd_hyperbolic(m);
    MatZ g = u.transposed() * base.gram * u;
    IntLattice ns = lattice_from_gram(g);
    MatZ k = to_int(inverse(u)) * standard_k(m);

    EFibred model = from_anticanonical_pair(ns, k);
    CHECK(model.rank() == m + 3);
    CHECK(model.is_relative_cy());
    SurfaceLikeData d = surface_like(model);
    REQUIRE(d.ok);
    CHECK(d.degree == 9 - m);
    QdpClass cl = classify_qdp(model);
    CHECK(cl.model == "Chain");
    CHECK(cl.n == m + 3);
  }
}

TEST_CASE("adapted coordinates reproduce the anticanonical model") {
  for (int n : {3, 4, 5, 8, 12, 16, 21}) {
    CAPTURE(n);
    EFibred c = chain_model(n);
    RealisationCoords rc = realisation_coords(c);
    Int dt = det(rc.t);
    CHECK((dt == 1 || dt == -1));
    CHECK(rc.t.transposed() * c.gram * rc.t == rc.model.gram);
    CHECK(c.f * rc.t == rc.phi * rc.model.f);
    CHECK(rc.phi(0, 0) == 1);
    CHECK(rc.phi(1, 0) == 0);
    CHECK(rc.phi(1, 1) == 1);
  }

  EFibred q = quadric_model();
  RealisationCoords rq = realisation_coords(q);
  CHECK(rq.t.transposed() * q.gram * rq.t == rq.model.gram);
  CHECK(q.f * rq.t == rq.phi * rq.model.f);
}

TEST_CASE("polarized standardization handles the hyperbolic even case") {
  IntLattice h = standard_lattice("H");
  MatZ k{{-2}, {-2}};
  NsStandardization s = standardize_polarized_ns(h, k);
  REQUIRE(s.status == NsStandardization::Status::Ok);
  CHECK(s.to_std * k == s.k_std);

  // Conjugated presentations of the same polarized lattice.
  std::mt19937 rng(777);
  for (int trial = 0; trial < 60; ++trial) {
    MatZ u = random_unimodular(rng, 2);
    IntLattice hh = lattice_from_gram(u.transposed() * h.gram * u);
    MatZ kk = to_int(inverse(u)) * k;
    NsStandardization ss = standardize_polarized_ns(hh, kk);
    REQUIRE(ss.status == NsStandardization::Status::Ok);
    CHECK(ss.to_std * kk == ss.k_std);
    CHECK(hh.gram == ss.to_std.transposed() * MatZ{{0, 1}, {1, 0}} * ss.to_std);
  }

  // A characteristic vector of the wrong square is rejected.
  NsStandardization bad = standardize_polarized_ns(h, MatZ{{0}, {2}});
  CHECK(bad.status == NsStandardization::Status::Failed);
}

TEST_CASE("polarized standardization reduces odd canonical vectors") {
  // Identity presentation: any answer must fix the standard vector and be an
  // isometry of the diagonal form.
  for (int m : {0, 1, 2, 5, 9, 12}) {
    CAPTURE(m);
    IntLattice base = odd_hyperbolic(m);
    NsStandardization s = standardize_polarized_ns(base, standard_k(m));
    REQUIRE(s.status == NsStandardization::Status::Ok);
    CHECK(s.to_std * standard_k(m) == s.k_std);
    CHECK(base.gram == s.to_std.transposed() * base.gram * s.to_std);
  }

  // The classical quartic-range reduction (-5, 3, 3) -> (-3, 1, 1).
  NsStandardization s2 = standardize_polarized_ns(odd_hyperbolic(2), MatZ{{-5}, {3}, {3}});
  REQUIRE(s2.status == NsStandardization::Status::Ok);
  CHECK(s2.to_std * MatZ{{-5}, {3}, {3}} == s2.k_std);

  // (-5, 3, 3, 1, ..., 1) reduces through a Cremona move once a third
  // exceptional direction is available.
  for (int m : {3, 6, 10}) {
    CAPTURE(m);
    MatZ k(m + 1, 1);
    k(0, 0) = -5;
    k(1, 0) = 3;
    k(2, 0) = 3;
    for (int i = 3; i <= m; ++i) k(i, 0) = 1;
    NsStandardization s = standardize_polarized_ns(odd_hyperbolic(m), k);
    REQUIRE(s.status == NsStandardization::Status::Ok);
    CHECK(s.to_std * k == s.k_std);
    MatZ gi = odd_hyperbolic(m).gram;
    CHECK(gi == s.to_std.transposed() * gi * s.to_std);
  }

  // Sign-scrambled and conjugated presentations.
  std::mt19937 rng(424242);
  for (int trial = 0; trial < 60; ++trial) {
    int m = 1 + trial % 6;
    MatZ u = random_unimodular(rng, m + 1);
    IntLattice base = odd_hyperbolic(m);
    IntLattice ns = lattice_from_gram(u.transposed() * base.gram * u);
    MatZ k = to_int(inverse(u)) * standard_k(m);
    NsStandardization s = standardize_polarized_ns(ns, k);
    REQUIRE(s.status == NsStandardization::Status::Ok);
    CHECK(s.to_std * k == s.k_std);
    CHECK(ns.gram == s.to_std.transposed() * base.gram * s.to_std);
  }

  // Even coordinate: not characteristic.
  NsStandardization bad = standardize_polarized_ns(odd_hyperbolic(1), MatZ{{2}, {1}});
  CHECK(bad.status != NsStandardization::Status::Ok);
}

TEST_CASE("isomorphism testing between quasi del Pezzo pseudolattices") {
  // A chain model is isomorphic to the anticanonical model of its own data.
  for (int n : {3, 4, 5, 7, 12, 15}) {
    CAPTURE(n);
    EFibred c = chain_model(n);
    SurfaceLikeData d = surface_like(c);
    REQUIRE(d.ok);
    EFibred model = from_anticanonical_pair(d.ns, d.k);
    QdpIsoResult r = qdp_isomorphism(c, model);
    CHECK(r.status == QdpIsoResult::Status::Isomorphic);
  }

  // Chain and quadric in rank four share the degree but not the parity.
  QdpIsoResult rq = qdp_isomorphism(chain_model(4), quadric_model());
  CHECK(rq.status == QdpIsoResult::Status::Refuted);

  // Different ranks are refuted outright.
  QdpIsoResult rn = qdp_isomorphism(chain_model(5), chain_model(6));
  CHECK(rn.status == QdpIsoResult::Status::Refuted);

  // The quadric is isomorphic to itself through a scrambled basis.
  std::mt19937 rng(90210);
  for (int trial = 0; trial < 25; ++trial) {
    EFibred q = quadric_model();
    MatZ u = random_unimodular(rng, q.rank());
    EFibred scrambled = change_basis(q, u);
    QdpIsoResult r = qdp_isomorphism(scrambled, q);
    REQUIRE(r.status == QdpIsoResult::Status::Isomorphic);
    CHECK(r.psi.transposed() * q.gram * r.psi == scrambled.gram);
    CHECK(q.f * r.psi == r.phi * scrambled.f);
  }

  // Scrambled chain models in a few ranks.
  for (int trial = 0; trial < 25; ++trial) {
    int n = 3 + trial % 8;
    EFibred c = chain_model(n);
    MatZ u = random_unimodular(rng, n);
    EFibred scrambled = change_basis(c, u);
    QdpIsoResult r = qdp_isomorphism(scrambled, c);
    REQUIRE(r.status == QdpIsoResult::Status::Isomorphic);
    CHECK(r.psi.transposed() * c.gram * r.psi == scrambled.gram);
    CHECK(c.f * r.psi == r.phi * scrambled.f);
  }

  CHECK_THROWS_AS(qdp_isomorphism(z_chain({vec_b()}), chain_model(3)), std::invalid_argument);
}
