#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "k3lat/lattice.hpp"

using namespace k3lat;

namespace {

MatZ random_matrix(std::mt19937& rng, int rows, int cols, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  MatZ m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = d(rng);
  return m;
}

}  // namespace

TEST_CASE("smith normal form on fixed inputs") {
  // diag(-2,-4): invariant factors 2, 4.
  Snf s = smith_normal_form(MatZ{{-2, 0}, {0, -4}});
  CHECK(s.D == MatZ{{2, 0}, {0, 4}});
  CHECK(s.rank == 2);

  // Hyperbolic plane: unimodular, so all invariants 1.
  Snf h = smith_normal_form(MatZ{{0, 1}, {1, 0}});
  CHECK(h.D == MatZ{{1, 0}, {0, 1}});

  Snf z = smith_normal_form(MatZ::zero(3, 2));
  CHECK(z.rank == 0);
  CHECK(z.D == MatZ::zero(3, 2));

  // Classic example with a nontrivial chain.
  Snf e = smith_normal_form(MatZ{{2, 4, 4}, {-6, 6, 12}, {10, 4, 16}});
  CHECK(e.D == MatZ{{2, 0, 0}, {0, 2, 0}, {0, 0, 156}});
}

TEST_CASE("smith normal form transform identities on random input") {
  std::mt19937 rng(20260825);
  for (int trial = 0; trial < 200; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 5), cols = 1 + static_cast<int>(rng() % 5);
    MatZ m = random_matrix(rng, rows, cols, -9, 9);
    Snf s = smith_normal_form(m);
    CHECK(s.U * m * s.V == s.D);
    CHECK((s.U * s.Uinv).is_identity());
    CHECK((s.V * s.Vinv).is_identity());
    for (int i = 0; i + 1 < std::min(rows, cols); ++i) {
      if (s.D(i + 1, i + 1) != 0) {
        REQUIRE(s.D(i, i) != 0);
        CHECK(s.D(i + 1, i + 1) % s.D(i, i) == 0);
      }
      CHECK(s.D(i, i) >= 0);
    }
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        if (i != j) CHECK(s.D(i, j) == 0);
  }
}

TEST_CASE("determinant agrees with smith invariants") {
  CHECK(det(MatZ{{0, 1}, {1, 0}}) == -1);
  CHECK(det(MatZ{{3}}) == 3);
  CHECK(det(MatZ(0, 0)) == 1);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng() % 5);
    MatZ m = random_matrix(rng, n, n, -6, 6);
    Int d = det(m);
    Snf s = smith_normal_form(m);
    Int p = 1;
    for (int i = 0; i < n; ++i) p *= s.D(i, i);
    CHECK(boost::multiprecision::abs(d) == p);
  }
}

TEST_CASE("rational solve, kernel, inverse") {
  MatQ a = to_rat(MatZ{{2, 1}, {1, 1}});
  auto x = solve(a, to_rat(MatZ{{3}, {2}}));
  REQUIRE(x.has_value());
  CHECK(a * *x == to_rat(MatZ{{3}, {2}}));
  CHECK(!solve(to_rat(MatZ{{1, 1}, {1, 1}}), to_rat(MatZ{{0}, {1}})).has_value());

  MatQ k = kernel(to_rat(MatZ{{1, 2, 3}}));
  CHECK(k.cols() == 2);
  CHECK((to_rat(MatZ{{1, 2, 3}}) * k).is_zero());

  CHECK_THROWS_AS(inverse(MatZ{{1, 1}, {1, 1}}), std::invalid_argument);
  MatQ inv = inverse(MatZ{{0, 1}, {1, 0}});
  CHECK(inv * to_rat(MatZ{{0, 1}, {1, 0}}) == MatQ::identity(2));
}

TEST_CASE("integer kernel and integral solve") {
  MatZ k = kernel_int(MatZ{{2, 4}});
  REQUIRE(k.cols() == 1);
  // Saturated: (2,-1) rather than a multiple.
  CHECK(boost::multiprecision::abs(k(0, 0)) == 2);
  CHECK(is_primitive_vector(k));

  auto s = solve_int(MatZ{{2, 0}, {0, 3}}, MatZ{{4}, {9}});
  REQUIRE(s.has_value());
  CHECK(*s == MatZ{{2}, {3}});
  CHECK(!solve_int(MatZ{{2}}, MatZ{{3}}).has_value());
}

TEST_CASE("inertia of fixed forms") {
  CHECK(inertia(MatZ{{0, 1}, {1, 0}}) == Inertia{1, 1, 0});
  CHECK(inertia(standard_lattice("E8").gram) == Inertia{0, 8, 0});
  CHECK(inertia(standard_lattice("I(3,5)").gram) == Inertia{3, 5, 0});
  CHECK(inertia(MatZ::zero(2, 2)) == Inertia{0, 0, 2});
  CHECK(inertia(MatZ{{2}}) == Inertia{1, 0, 0});
}

TEST_CASE("standard lattice construction") {
  IntLattice a1 = standard_lattice("A1");
  CHECK(a1.gram == MatZ{{-2}});

  IntLattice a17 = standard_lattice("A17");
  CHECK(a17.rank() == 17);
  CHECK(boost::multiprecision::abs(a17.determinant()) == 18);

  IntLattice e8 = standard_lattice("E8");
  CHECK(e8.determinant() == 1);
  CHECK(e8.is_even());
  CHECK(e8.signature() == Inertia{0, 8, 0});

  // Extended E chain: |det E(n)| = |9 - n|.
  for (int n = 6; n <= 13; ++n) {
    IntLattice en = standard_lattice("E(" + std::to_string(n) + ")");
    CHECK(en.rank() == n);
    CHECK(boost::multiprecision::abs(en.determinant()) == std::abs(9 - n));
  }
  // Low-rank conventions.
  CHECK(standard_lattice("E3").gram == standard_lattice("A2+A1").gram);
  CHECK(standard_lattice("E4").gram == standard_lattice("A4").gram);
  CHECK(standard_lattice("E5").gram == standard_lattice("D5").gram);

  IntLattice h = standard_lattice("H");
  CHECK(h.gram == MatZ{{0, 1}, {1, 0}});
  CHECK(h.signature() == Inertia{1, 1, 0});
  CHECK(standard_lattice("II(1,1)").gram == h.gram);
  CHECK(standard_lattice("H(3)").gram == MatZ{{0, 3}, {3, 0}});

  IntLattice odd = standard_lattice("I(1,9)");
  CHECK(odd.rank() == 10);
  CHECK(odd.determinant() == -1);
  CHECK(!odd.is_even());

  CHECK(standard_lattice("<2>").gram == MatZ{{2}});
  CHECK(standard_lattice("<-8>").gram == MatZ{{-8}});
  CHECK(standard_lattice("0").rank() == 0);

  IntLattice sum = standard_lattice("H+E8+E8");
  CHECK(sum.rank() == 18);
  CHECK(sum.is_even());
  CHECK(sum.is_unimodular());
  CHECK(sum.signature() == Inertia{1, 17, 0});

  IntLattice lit = standard_lattice("[[-2,1],[1,-4]]");
  CHECK(lit.determinant() == 7);
  CHECK(lit.is_even());
  CHECK(lit.signature() == Inertia{0, 2, 0});

  CHECK_THROWS_AS(standard_lattice("X5"), std::invalid_argument);
  CHECK_THROWS_AS(standard_lattice("E2"), std::invalid_argument);
  CHECK_THROWS_AS(standard_lattice("A0"), std::invalid_argument);
  CHECK_THROWS_AS(standard_lattice("II(2,2)"), std::invalid_argument);
}

TEST_CASE("discriminant groups of fixed lattices") {
  // A1: Z/2 with q(g) = -1/2, canonically 3/2 mod 2Z.
  DiscGroup a1 = disc_group(standard_lattice("A1"));
  REQUIRE(a1.orders.size() == 1);
  CHECK(a1.orders[0] == 2);
  CHECK(a1.even);
  CHECK(a1.qvals[0] == Rat(3, 2));

  DiscGroup a17 = disc_group(standard_lattice("A17"));
  REQUIRE(a17.orders.size() == 1);
  CHECK(a17.orders[0] == 18);

  CHECK(disc_group(standard_lattice("E8")).is_trivial());
  CHECK(disc_group(standard_lattice("H")).is_trivial());

  DiscGroup a2 = disc_group(standard_lattice("A2"));
  REQUIRE(a2.orders.size() == 1);
  CHECK(a2.orders[0] == 3);
  CHECK(cyclic_disc_has_generator_q(standard_lattice("A2"), Rat(-2, 3)));
  CHECK(!cyclic_disc_has_generator_q(standard_lattice("A2"), Rat(-1, 3)));

  DiscGroup d4 = disc_group(standard_lattice("D4"));
  REQUIRE(d4.orders.size() == 2);
  CHECK(d4.orders[0] == 2);
  CHECK(d4.orders[1] == 2);

  DiscGroup e7 = disc_group(standard_lattice("E7"));
  REQUIRE(e7.orders.size() == 1);
  CHECK(e7.orders[0] == 2);
  CHECK(e7.qvals[0] == Rat(1, 2));  // -3/2 mod 2Z

  // <2> is even (norms 2a^2); its generator has q = 1/2 mod 2Z.
  DiscGroup two = disc_group(standard_lattice("<2>"));
  CHECK(two.even);
  CHECK(two.qvals[0] == Rat(1, 2));

  // Odd lattice: q only defined mod Z.
  DiscGroup odd3 = disc_group(standard_lattice("<3>"));
  CHECK(!odd3.even);
  CHECK(odd3.qvals[0] == Rat(1, 3));

  CHECK_THROWS_AS(disc_group(lattice_from_gram(MatZ::zero(1, 1))), std::invalid_argument);
}

TEST_CASE("discriminant generators reproduce the quotient") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 1 + static_cast<int>(rng() % 4);
    MatZ b = random_matrix(rng, n, n, -4, 4);
    MatZ g = b + b.transposed();  // symmetric, even diagonal
    if (det(g) == 0) continue;
    IntLattice l = lattice_from_gram(g);
    DiscGroup d = disc_group(l);
    CHECK(d.order() == boost::multiprecision::abs(l.determinant()));
    // Each generator's dual vector has order exactly orders[i] modulo Z^n.
    for (size_t i = 0; i < d.orders.size(); ++i) {
      MatQ dual = inverse(g) * to_rat(d.gens.col(static_cast<int>(i)));
      MatQ scaled = dual * Rat(d.orders[i]);
      CHECK(is_integral(scaled));
      if (d.orders[i] > 1) {
        bool proper = false;
        MatQ half = dual * Rat(d.orders[i] / 2);
        if (d.orders[i] % 2 == 0 && !is_integral(half)) proper = true;
        // For non-prime orders the full check is order-exactness over all
        // prime divisors; the determinant identity above already pins the
        // group, so spot-check divisibility by 2 only when applicable.
        if (d.orders[i] % 2 == 0) CHECK(proper);
      }
    }
  }
}

TEST_CASE("primitivity, saturation, index") {
  MatZ b{{2, 0}, {0, 3}};
  CHECK(!is_primitive_sublattice(b));
  CHECK(index_in_saturation(b) == 6);
  MatZ sat = saturate(b);
  CHECK(boost::multiprecision::abs(det(sat)) == 1);

  CHECK(is_primitive_sublattice(MatZ{{1}, {2}}));
  CHECK(!is_primitive_sublattice(MatZ{{2}, {4}}));
  CHECK(index_in_saturation(MatZ{{2}, {4}}) == 2);
  MatZ s2 = saturate(MatZ{{2}, {4}});
  CHECK(s2.cols() == 1);
  CHECK(is_primitive_vector(s2));

  CHECK_THROWS_AS(is_primitive_sublattice(MatZ{{1, 2}, {1, 2}}), std::invalid_argument);
}

TEST_CASE("saturation is idempotent and contains the span") {
  std::mt19937 rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(rng() % 4);
    int k = 1 + static_cast<int>(rng() % n);
    MatZ b = random_matrix(rng, n, k, -7, 7);
    if (rank_of(b) != k) continue;
    MatZ s = saturate(b);
    CHECK(is_primitive_sublattice(s));
    // Same rational span: each original column solves in the saturation.
    CHECK(solve_int(s, b).has_value());
    MatZ ss = saturate(s);
    CHECK(solve_int(ss, s).has_value());
    CHECK(solve_int(s, ss).has_value());
  }
}

TEST_CASE("orthogonal complements") {
  IntLattice h = standard_lattice("H");
  MatZ e{{1}, {0}};
  MatZ c = orthogonal_complement(h, e);
  REQUIRE(c.cols() == 1);
  CHECK(h.pair(c.col(0), e) == 0);
  // e is isotropic so it lies in its own complement.
  CHECK(solve_int(c, e).has_value());

  IntLattice a11 = standard_lattice("A1+A1");
  MatZ diag{{1}, {1}};
  MatZ cd = orthogonal_complement(a11, diag);
  REQUIRE(cd.cols() == 1);
  CHECK(a11.pair(cd.col(0), diag) == 0);
  CHECK(is_primitive_vector(cd.col(0)));

  // Complement in E8 of an A2 has rank 6 and determinant 3.
  IntLattice e8 = standard_lattice("E8");
  MatZ a2(8, 2);
  a2(0, 0) = 1;
  a2(1, 1) = 1;
  MatZ ce = orthogonal_complement(e8, a2);
  CHECK(ce.cols() == 6);
  IntLattice cf = sublattice_form(e8, ce);
  CHECK(boost::multiprecision::abs(cf.determinant()) == 3);
  CHECK(root_system_type(cf) == std::vector<std::pair<std::string, int>>{{"E", 6}});
}

TEST_CASE("radical quotient") {
  // Rank 2 zero form: everything is radical.
  RadicalQuotient z = quotient_by_radical(lattice_from_gram(MatZ::zero(2, 2)));
  CHECK(z.quotient.rank() == 0);
  CHECK(z.radical.cols() == 2);

  // Nondegenerate input passes through.
  RadicalQuotient h = quotient_by_radical(standard_lattice("H"));
  CHECK(h.quotient.gram == standard_lattice("H").gram);
  CHECK(h.radical.cols() == 0);

  // A1 plus a null direction.
  MatZ g{{-2, 0}, {0, 0}};
  RadicalQuotient q = quotient_by_radical(lattice_from_gram(g));
  CHECK(q.quotient.rank() == 1);
  CHECK(q.quotient.gram == MatZ{{-2}});
  CHECK((q.proj * q.comp_basis).is_identity());
  // Projection kills the radical.
  CHECK((q.proj * q.radical).is_zero());
}

TEST_CASE("short vectors in definite lattices") {
  CHECK(short_vectors(standard_lattice("A1"), 2).size() == 1);
  CHECK(short_vectors(standard_lattice("A2"), 2).size() == 3);
  CHECK(short_vectors(standard_lattice("D4"), 2).size() == 12);
  CHECK(short_vectors(standard_lattice("E8"), 2).size() == 120);
  CHECK(short_vectors(standard_lattice("<-4>"), 2).empty());
  CHECK(short_vectors(standard_lattice("<-4>"), 4).size() == 1);
  // A2 with bound 6: 3 roots + 3 vectors of norm -6 (the long diagonals).
  CHECK(short_vectors(standard_lattice("A2"), 6).size() == 6);
  CHECK_THROWS_AS(short_vectors(standard_lattice("H"), 2), std::invalid_argument);
}

TEST_CASE("positive roots") {
  CHECK(positive_roots(standard_lattice("E8")).size() == 120);
  CHECK(positive_roots(standard_lattice("A17")).size() == 153);
  CHECK(positive_roots(standard_lattice("<2>")).empty());
  CHECK(positive_roots(standard_lattice("I(3,0)")).empty());

  // Every returned root pairs positively with the default functional.
  IntLattice d5 = standard_lattice("D5");
  auto pr = positive_roots(d5);
  CHECK(pr.size() == 20);
  MatQ h(5, 1);
  Int pw = 1;
  for (int i = 0; i < 5; ++i) {
    h(i, 0) = Rat(pw);
    pw *= 1000000;
  }
  for (const auto& r : pr) {
    MatQ p = to_rat(d5.gram * r).transposed() * h;
    CHECK(p(0, 0) > 0);
  }

  // A functional orthogonal to a root is rejected.
  MatQ bad(2, 1);
  bad(0, 0) = 1;
  CHECK_THROWS_AS(positive_roots(standard_lattice("A1+A1"), bad), std::runtime_error);
}

TEST_CASE("simple roots and diagram classification") {
  CHECK(simple_roots(standard_lattice("E8")).size() == 8);
  CHECK(simple_roots(standard_lattice("A17")).size() == 17);

  using T = std::vector<std::pair<std::string, int>>;
  CHECK(root_system_type(standard_lattice("E8")) == T{{"E", 8}});
  CHECK(root_system_type(standard_lattice("A2+A2+E8")) == T{{"A", 2}, {"A", 2}, {"E", 8}});
  CHECK(root_system_type(standard_lattice("D5")) == T{{"D", 5}});
  CHECK(root_system_type(standard_lattice("D4")) == T{{"D", 4}});
  CHECK(root_system_type(standard_lattice("E6+A1")) == T{{"A", 1}, {"E", 6}});
  CHECK(root_system_type(standard_lattice("E7")) == T{{"E", 7}});
  CHECK(root_system_type(standard_lattice("D16")) == T{{"D", 16}});
  CHECK(root_system_type(standard_lattice("<-4>")).empty());

  // Ordered simple roots of each component reproduce the model Gram, which
  // root_components verifies internally; spot-check the shapes here.
  auto comps = root_components(standard_lattice("A3+D6"));
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].letter == "A");
  CHECK(comps[0].simples.size() == 3);
  CHECK(comps[1].letter == "D");
  CHECK(comps[1].simples.size() == 6);
}

TEST_CASE("definite isometry search") {
  IntLattice a2 = standard_lattice("A2");
  auto r = definite_isometry(a2, a2);
  REQUIRE(r.iso.has_value());
  CHECK(r.iso->transposed() * a2.gram * *r.iso == a2.gram);

  // Sign-flipped presentation of A2.
  IntLattice a2f = lattice_from_gram(MatZ{{-2, -1}, {-1, -2}});
  auto rf = definite_isometry(a2, a2f);
  REQUIRE(rf.iso.has_value());

  // Determinant obstruction: A4 vs D4.
  auto none = definite_isometry(standard_lattice("A4"), standard_lattice("D4"));
  CHECK(!none.iso.has_value());
  CHECK(none.exhausted);

  // Parity obstruction.
  auto odd = definite_isometry(standard_lattice("I(0,1)"), standard_lattice("<-1>"));
  CHECK(odd.iso.has_value());  // same lattice
  auto mix = definite_isometry(lattice_from_gram(MatZ{{-1, 0}, {0, -4}}),
                               lattice_from_gram(MatZ{{-2, 0}, {0, -2}}));
  CHECK(!mix.iso.has_value());
  CHECK(mix.exhausted);

  // A2 + A1 and A3 have different determinants.
  auto det_obstr = definite_isometry(standard_lattice("A2+A1"), standard_lattice("A3"));
  CHECK(!det_obstr.iso.has_value());

  // Fixed vector: an automorphism of A2 sending the first basis root to the
  // second.
  MatZ v{{1}, {0}}, w{{0}, {1}};
  auto fix = definite_isometry(a2, a2, {{v, w}});
  REQUIRE(fix.iso.has_value());
  CHECK(*fix.iso * v == w);

  // Unsatisfiable fixed pair: norms differ.
  MatZ long_vec{{1}, {1}};  // norm -2 in A2: (1,1) has norm -2+2-2 = -2
  CHECK(a2.norm(long_vec) == -2);
  MatZ bad_target{{2}, {0}};
  auto bad = definite_isometry(a2, a2, {{v, bad_target}});
  CHECK(!bad.iso.has_value());
  CHECK(bad.exhausted);

  CHECK_THROWS_AS(definite_isometry(standard_lattice("H"), standard_lattice("H")),
                  std::invalid_argument);

  // E8 to itself: large but prunes quickly.
  IntLattice e8 = standard_lattice("E8");
  auto big = definite_isometry(e8, e8);
  REQUIRE(big.iso.has_value());
  CHECK(big.iso->transposed() * e8.gram * *big.iso == e8.gram);
}

TEST_CASE("greedy reduction keeps the lattice") {
  MatZ g{{-2, -3}, {-3, -8}};  // badly skewed negative definite form
  IntLattice l = lattice_from_gram(g);
  MatZ t = greedy_reduce(l);
  Int dt = det(t);
  CHECK((dt == 1 || dt == -1));
  MatZ rg = t.transposed() * g * t;
  CHECK(det(rg) == det(g));
  // Off-diagonal reduced below the smaller norm.
  CHECK(boost::multiprecision::abs(rg(0, 1)) * 2 <= boost::multiprecision::abs(rg(0, 0)));
}

TEST_CASE("divisor of a vector") {
  IntLattice h = standard_lattice("H");
  CHECK(divisor_of(h, MatZ{{1}, {0}}) == 1);
  CHECK(divisor_of(h, MatZ{{2}, {0}}) == 2);
  IntLattice a1 = standard_lattice("A1");
  CHECK(divisor_of(a1, MatZ{{1}}) == 2);
  IntLattice h2 = standard_lattice("H(2)");
  CHECK(divisor_of(h2, MatZ{{1}, {0}}) == 2);
}

TEST_CASE("indefinite reduction shrinks mangled presentations") {
  std::mt19937 rng(555);
  auto conjugate = [&](const MatZ& g) {
    int n = g.rows();
    MatZ u = MatZ::identity(n);
    std::uniform_int_distribution<int> pick(0, n - 1), coef(-3, 3);
    for (int s = 0; s < 20; ++s) {
      int i = pick(rng), j = pick(rng);
      if (i != j) u.add_col_multiple(i, j, coef(rng));
    }
    return u.transposed() * g * u;
  };

  // The hyperbolic plane starts with an isotropic diagonal entry.
  IndefReduction h = indefinite_reduce(standard_lattice("H"));
  REQUIRE(h.isotropic.has_value());
  IntLattice hl = standard_lattice("H");
  CHECK(hl.norm(*h.isotropic) == 0);
  CHECK(is_primitive_vector(*h.isotropic));

  // Conjugated odd forms: either a genuinely small Gram matrix comes back or
  // an exact isotropic vector does.
  for (int trial = 0; trial < 100; ++trial) {
    int m = 1 + trial % 4;
    MatZ g(m + 1, m + 1);
    g(0, 0) = 1;
    for (int i = 1; i <= m; ++i) g(i, i) = -1;
    MatZ big = conjugate(g);
    IntLattice l = lattice_from_gram(big);
    IndefReduction r = indefinite_reduce(l);
    Int dt = det(r.basis);
    CHECK((dt == 1 || dt == -1));
    if (r.isotropic) {
      CHECK(l.norm(*r.isotropic) == 0);
      CHECK(is_primitive_vector(*r.isotropic));
    } else {
      MatZ rg = r.basis.transposed() * big * r.basis;
      Int biggest = 0;
      for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j)
          if (boost::multiprecision::abs(rg(i, j)) > biggest)
            biggest = boost::multiprecision::abs(rg(i, j));
      CHECK(biggest <= 16);
    }
  }

  // Definite input never reports an isotropic vector.
  MatZ a2 = conjugate(standard_lattice("A2").gram);
  IndefReduction rd = indefinite_reduce(lattice_from_gram(a2));
  CHECK_FALSE(rd.isotropic.has_value());
  MatZ rg = rd.basis.transposed() * a2 * rd.basis;
  CHECK(det(rg) == 3);
}

TEST_CASE("complement, column span, intersection of sublattices") {
  std::mt19937 rng(777001);

  for (int trial = 0; trial < 120; ++trial) {
    int n = 2 + static_cast<int>(rng() % 5);
    int k = 1 + static_cast<int>(rng() % n);
    MatZ b = random_matrix(rng, n, k, -6, 6);
    if (rank_of(b) != k) continue;
    MatZ sat = saturate(b);
    MatZ comp = complement_basis(sat);
    CHECK(comp.cols() == n - k);
    Int d = det(hstack(sat, comp));
    CHECK((d == 1 || d == -1));
  }
  CHECK_THROWS_AS(complement_basis(MatZ{{2}, {0}}), std::invalid_argument);

  // Dependent columns collapse to a basis with the same span.
  MatZ dep{{1, 2, 0}, {2, 4, 1}, {0, 0, 3}};
  MatZ basis = column_span_basis(dep);
  CHECK(basis.cols() == 2);
  CHECK(solve_int(basis, dep).has_value());
  CHECK(solve_int(dep, basis).has_value());

  // Fixed intersection: (e1, e2) meet (e2, e3) along e2.
  MatZ a{{1, 0}, {0, 1}, {0, 0}};
  MatZ b2{{0, 0}, {1, 0}, {0, 1}};
  MatZ inter = sublattice_intersection(a, b2);
  REQUIRE(inter.cols() == 1);
  CHECK(boost::multiprecision::abs(inter(1, 0)) == 1);
  CHECK(inter(0, 0) == 0);
  CHECK(inter(2, 0) == 0);

  // Random saturated spans: the intersection lies in both, has the rational
  // intersection rank, and is saturated.
  for (int trial = 0; trial < 120; ++trial) {
    int n = 3 + static_cast<int>(rng() % 3);
    int ka = 1 + static_cast<int>(rng() % (n - 1));
    int kb = 1 + static_cast<int>(rng() % (n - 1));
    MatZ ma = random_matrix(rng, n, ka, -5, 5);
    MatZ mb = random_matrix(rng, n, kb, -5, 5);
    if (rank_of(ma) != ka || rank_of(mb) != kb) continue;
    ma = saturate(ma);
    mb = saturate(mb);
    MatZ both = sublattice_intersection(ma, mb);
    int expect = ka + kb - rank_of(hstack(ma, mb));
    CHECK(both.cols() == expect);
    if (both.cols() == 0) continue;
    CHECK(solve_int(ma, both).has_value());
    CHECK(solve_int(mb, both).has_value());
    CHECK(is_primitive_sublattice(both));
  }
}

TEST_CASE("symmetric congruence diagonalization") {
  std::mt19937 rng(777002);
  for (int trial = 0; trial < 150; ++trial) {
    int n = 1 + static_cast<int>(rng() % 5);
    MatZ m = random_matrix(rng, n, n, -6, 6);
    MatZ sym = m + m.transposed();
    if (trial % 3 == 0) {
      // Plant a radical direction to exercise the degenerate branch.
      for (int j = 0; j < n; ++j) {
        sym(0, j) = 0;
        sym(j, 0) = 0;
      }
    }
    SymDiag sd = sym_diagonalize(sym);
    MatQ dg = sd.t.transposed() * to_rat(sym) * sd.t;
    Inertia in = inertia(sym);
    int pos = 0, neg = 0, zero = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (i != j) CHECK(dg(i, j) == 0);
      CHECK(dg(i, i) == sd.d[i]);
      if (sd.d[i] > 0)
        ++pos;
      else if (sd.d[i] < 0)
        ++neg;
      else
        ++zero;
    }
    CHECK(pos == in.pos);
    CHECK(neg == in.neg);
    CHECK(zero == in.zero);
  }
}
