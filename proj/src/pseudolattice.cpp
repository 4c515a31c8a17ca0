#include "k3lat/pseudolattice.hpp"

#include <algorithm>
#include <random>

namespace k3lat {

namespace mp = boost::multiprecision;

MatZ sympl_gram() { return MatZ{{0, -1}, {1, 0}}; }

Int sympl_pair(const MatZ& v, const MatZ& w) { return pair_with(sympl_gram(), v, w); }

MatZ vec_a() { return MatZ{{1}, {0}}; }
MatZ vec_b() { return MatZ{{0}, {1}}; }

MatZ ab(const Int& alpha, const Int& beta) {
  MatZ v(2, 1);
  v(0, 0) = alpha;
  v(1, 0) = beta;
  return v;
}

MatZ dehn_twist(const MatZ& v) {
  assert(v.rows() == 2 && v.cols() == 1);
  if (!is_primitive_vector(v)) throw std::invalid_argument("Dehn twist needs a primitive vector");
  return MatZ::identity(2) - v * v.transposed() * sympl_gram();
}

MatZ EFibred::serre() const {
  Int d = det(gram);
  if (d != 1 && d != -1) throw std::invalid_argument("Serre operator needs a unimodular form");
  return to_int(inverse(gram) * to_rat(gram.transposed()));
}

MatZ EFibred::adjoint() const {
  Int d = det(gram);
  if (d != 1 && d != -1) throw std::invalid_argument("adjoint needs a unimodular form");
  return to_int(inverse(gram) * to_rat(f.transposed() * sympl_gram()));
}

MatZ EFibred::twist() const { return MatZ::identity(2) - f * adjoint(); }

MatZ EFibred::cotwist() const { return MatZ::identity(rank()) - adjoint() * f; }

bool EFibred::is_relative_cy() const { return cotwist() == serre(); }

EFibred make_fibred(MatZ gram, MatZ f) {
  if (!gram.is_square()) throw std::invalid_argument("Gram matrix must be square");
  if (det(gram) == 0) throw std::invalid_argument("form must be nondegenerate");
  if (f.rows() != 2 || f.cols() != gram.rows())
    throw std::invalid_argument("fibre map must be 2 x rank");
  return EFibred{std::move(gram), std::move(f)};
}

EFibred z_chain(const std::vector<MatZ>& vs) {
  const int k = static_cast<int>(vs.size());
  if (k == 0) throw std::invalid_argument("chain needs at least one vector");
  MatZ g(k, k), f(2, k);
  for (int i = 0; i < k; ++i) {
    if (vs[i].rows() != 2 || vs[i].cols() != 1) throw std::invalid_argument("chain entries live in E");
    if (!is_primitive_vector(vs[i])) throw std::invalid_argument("chain entries must be primitive");
    g(i, i) = 1;
    f.set_col(i, vs[i]);
    for (int j = i + 1; j < k; ++j) g(i, j) = sympl_pair(vs[i], vs[j]);
  }
  EFibred out{g, f};
  MatZ prod = MatZ::identity(2);
  for (const auto& v : vs) prod = prod * dehn_twist(v);
  if (out.twist() != prod) throw std::logic_error("chain twist does not match the Dehn product");
  return out;
}

EFibred glue_fibred(const EFibred& g1, const EFibred& g2, int sign2) {
  if (sign2 != 1 && sign2 != -1) throw std::invalid_argument("sign must be +1 or -1");
  MatZ f2 = sign2 == 1 ? g2.f : -g2.f;
  MatZ coupling = g1.f.transposed() * sympl_gram() * f2;
  const int n1 = g1.rank(), n2 = g2.rank();
  MatZ g(n1 + n2, n1 + n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) g(i, j) = g1.gram(i, j);
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) g(n1 + i, n1 + j) = g2.gram(i, j);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) g(i, n1 + j) = coupling(i, j);
  EFibred out{g, hstack(g1.f, f2)};
  if (out.twist() != g1.twist() * g2.twist())
    throw std::logic_error("glued twist does not factor");
  return out;
}

EFibred chain_model(int n) {
  if (n < 3) throw std::invalid_argument("chain model needs n >= 3");
  std::vector<MatZ> vs{vec_b(), ab(3, 1), ab(6, 1)};
  for (int i = 3; i < n; ++i) vs.push_back(vec_a());
  return z_chain(vs);
}

EFibred quadric_model() { return z_chain({vec_b(), ab(2, 1), ab(2, 1), ab(4, 1)}); }

MatZ ns_class(const SurfaceLikeData& d, const MatZ& v) {
  MatZ basis = hstack(d.p, d.ns_lift);
  auto sol = solve_int(basis, v);
  if (!sol) throw std::invalid_argument("vector is not orthogonal to the point class");
  MatZ c(d.ns_lift.cols(), 1);
  for (int i = 0; i < c.rows(); ++i) c(i, 0) = (*sol)(i + 1, 0);
  return c;
}

SurfaceLikeData surface_like(const EFibred& g) {
  SurfaceLikeData d;
  const int n = g.rank();
  MatZ r = g.adjoint();
  d.p = r * vec_a();
  if (d.p.is_zero()) {
    d.reason = "point class vanishes";
    return d;
  }
  if (!is_primitive_vector(d.p)) {
    d.reason = "point class is not primitive";
    return d;
  }
  MatZ t = g.twist();
  if (!(t * vec_a() == vec_a())) {
    d.reason = "twist does not fix a";
    return d;
  }
  if (!(g.gram * d.p == g.gram.transposed() * d.p)) {
    d.reason = "pairing with the point class is not symmetric";
    return d;
  }

  // Two-sided orthogonal of p.
  MatZ rows = vstack((g.gram * d.p).transposed(), (g.gram.transposed() * d.p).transposed());
  MatZ w = kernel_int(rows);
  if (w.cols() != n - 1) {
    d.reason = "orthogonal of the point class has unexpected rank";
    return d;
  }
  auto y = solve_int(w, d.p);
  if (!y) {
    d.reason = "point class is not isotropic for the two-sided pairing";
    return d;
  }
  Snf s = smith_normal_form(*y);
  std::vector<int> comp;
  for (int j = 1; j < n - 1; ++j) comp.push_back(j);
  d.ns_lift = w * s.Uinv.cols_at(comp);
  d.perp = hstack(d.p, d.ns_lift);

  MatZ q = -(d.ns_lift.transposed() * g.gram * d.ns_lift);
  if (!q.is_symmetric()) {
    d.reason = "restricted pairing is not symmetric";
    return d;
  }
  if (det(q) == 0) {
    d.reason = "Neron-Severi form is degenerate";
    return d;
  }
  d.ns = lattice_from_gram(q);

  // Solve the canonical class equation over all basis pairs.
  MatZ rankvec = g.gram * d.p;  // rank(e_i) = <e_i, p>
  std::vector<MatQ> lhs_rows;
  std::vector<Rat> rhs_vals;
  MatQ a_mat(n * n, n - 2);
  MatQ rhs(n * n, 1);
  int row = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      MatZ lambda = unit_vec(n, j) * rankvec(i, 0) - unit_vec(n, i) * rankvec(j, 0);
      MatZ m = ns_class(d, lambda);
      MatZ qm = q * m;
      for (int c = 0; c < n - 2; ++c) a_mat(row, c) = Rat(qm(c, 0));
      rhs(row, 0) = Rat(-(g.gram(i, j) - g.gram(j, i)));
      ++row;
    }
  MatQ a_used(row, n - 2), rhs_used(row, 1);
  for (int i = 0; i < row; ++i) {
    for (int c = 0; c < n - 2; ++c) a_used(i, c) = a_mat(i, c);
    rhs_used(i, 0) = rhs(i, 0);
  }
  if (rank_of(a_used) != n - 2) {
    d.reason = "canonical class is underdetermined";
    return d;
  }
  auto k = solve(a_used, rhs_used);
  if (!k || !is_integral(*k)) {
    d.reason = "canonical class equation has no integral solution";
    return d;
  }
  d.k = to_int(*k);
  MatZ dq = d.k.transposed() * q * d.k;
  d.degree = dq(0, 0);

  // Cross-checks forced by the theory: r(b) represents -K, and the twist is
  // the expected unipotent matrix.
  MatZ rb = r * vec_b();
  MatZ rb_class;
  try {
    rb_class = ns_class(d, rb);
  } catch (const std::invalid_argument&) {
    d.reason = "r(b) is not orthogonal to the point class";
    return d;
  }
  if (!(rb_class == -d.k)) {
    d.reason = "r(b) does not represent minus the canonical class";
    return d;
  }
  MatZ expected{{1, -d.degree}, {0, 1}};
  if (!(t == expected)) {
    d.reason = "twist is not the unipotent matrix of the degree";
    return d;
  }
  d.ok = true;
  return d;
}

IntLattice canonical_perp(const SurfaceLikeData& d) {
  if (!d.ok) throw std::invalid_argument("input is not surface-like");
  MatZ b = orthogonal_complement(d.ns, d.k);
  return sublattice_form(d.ns, b);
}

EFibred from_anticanonical_pair(const IntLattice& ns, const MatZ& k) {
  const int m = ns.rank();
  if (!ns.is_unimodular()) throw std::invalid_argument("NS lattice must be unimodular");
  if (k.rows() != m || k.cols() != 1) throw std::invalid_argument("canonical vector has wrong shape");
  const int n = m + 2;
  MatZ qk = ns.gram * k;
  MatZ g(n, n);
  g(0, 0) = -1;
  g(0, n - 1) = 1;
  g(n - 1, 0) = 1;
  for (int i = 0; i < m; ++i) {
    g(1 + i, 0) = qk(i, 0);
    for (int j = 0; j < m; ++j) g(1 + i, 1 + j) = -ns.gram(i, j);
  }
  MatZ f(2, n);
  f(1, 0) = 1;
  for (int i = 0; i < m; ++i) f(0, 1 + i) = -qk(i, 0);
  EFibred out = make_fibred(g, f);

  SurfaceLikeData d = surface_like(out);
  if (!d.ok) throw std::logic_error("anticanonical model is not surface-like: " + d.reason);
  // The middle block realises (ns, k) on the nose through its NS classes.
  MatZ cmap(m, m);
  for (int i = 0; i < m; ++i) cmap.set_col(i, ns_class(d, unit_vec(n, 1 + i)));
  if (!(cmap.transposed() * d.ns.gram * cmap == ns.gram))
    throw std::logic_error("anticanonical model NS form mismatch");
  if (!(cmap * k == d.k)) throw std::logic_error("anticanonical model canonical class mismatch");
  return out;
}

RealisationCoords realisation_coords(const EFibred& g) {
  SurfaceLikeData d = surface_like(g);
  if (!d.ok) throw std::invalid_argument("not surface-like: " + d.reason);
  const int n = g.rank();

  // e with <e, p> = 1 and <e, C_k> = 0, then norm corrected to -1 along p.
  MatZ a = vstack((g.gram * d.p).transposed(), (g.gram * d.ns_lift).transposed());
  MatZ rhs(n - 1, 1);
  rhs(0, 0) = 1;
  auto e0 = solve_int(a, rhs);
  if (!e0) throw std::runtime_error("no integral section for the point functional");
  Int nrm = g.pair(*e0, *e0);
  if ((nrm % 2) == 0) throw std::runtime_error("section norm has wrong parity");
  Int t = floor_div(-1 - nrm, 2);
  assert(-1 - nrm == 2 * t);
  MatZ e = *e0 + d.p * t;

  RealisationCoords rc;
  rc.ns = d.ns;
  rc.k = d.k;
  rc.t = hstack(hstack(e, d.ns_lift), d.p);
  Int dt = det(rc.t);
  if (dt != 1 && dt != -1) throw std::logic_error("adapted basis is not unimodular");
  rc.model = from_anticanonical_pair(d.ns, d.k);
  if (!(rc.t.transposed() * g.gram * rc.t == rc.model.gram))
    throw std::logic_error("adapted coordinates failed to match the model form");
  MatZ ft = g.f * rc.t;
  rc.phi = MatZ{{1, ft(0, 0)}, {0, 1}};
  if (!(ft == rc.phi * rc.model.f))
    throw std::logic_error("fibre map mismatch in adapted coordinates");
  return rc;
}

namespace {

bool is_characteristic(const IntLattice& l, const MatZ& k) {
  for (int i = 0; i < l.rank(); ++i) {
    MatZ e = unit_vec(l.rank(), i);
    if ((l.pair(k, e) - l.pair(e, e)) % 2 != 0) return false;
  }
  return true;
}

}  // namespace

QdpClass classify_qdp(const EFibred& g) {
  QdpClass out;
  SurfaceLikeData d = surface_like(g);
  if (!d.ok) {
    out.reason = d.reason;
    return out;
  }
  out.n = g.rank();
  out.degree = d.degree;
  if (!d.ns.is_unimodular()) {
    out.reason = "NS lattice is not unimodular";
    return out;
  }
  Inertia sig = d.ns.signature();
  if (!(sig == Inertia{1, out.n - 3, 0})) {
    out.reason = "NS signature is not (1, n-3)";
    return out;
  }
  if (!is_characteristic(d.ns, d.k)) {
    out.reason = "canonical vector is not characteristic";
    return out;
  }
  if (d.ns.is_even()) {
    if (out.n == 4 && d.degree == 8) {
      out.model = "Quadric";
    } else {
      out.reason = "even NS outside the quadric family";
    }
    return out;
  }
  if (d.degree == 12 - out.n) {
    out.model = "Chain";
  } else {
    out.reason = "degree does not match the chain family";
  }
  return out;
}

namespace {

// Candidate vectors of a prescribed norm in an indefinite unimodular form:
// basis vectors, small combinations, then seeded random reduction.
std::vector<MatZ> norm_candidates(const IntLattice& l, const Int& target, int want) {
  const int n = l.rank();
  std::vector<MatZ> out;
  auto push = [&](const MatZ& v) {
    if (v.is_zero() || l.norm(v) != target) return;
    MatZ c = v;
    for (int i = 0; i < n; ++i) {
      if (c(i, 0) > 0) break;
      if (c(i, 0) < 0) {
        c = -c;
        break;
      }
    }
    for (const auto& o : out)
      if (o == c) return;
    out.push_back(c);
  };

  for (int i = 0; i < n; ++i) push(unit_vec(n, i));
  for (int i = 0; i < n && static_cast<int>(out.size()) < want; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int si = -1; si <= 1; si += 2)
        for (int sj = -1; sj <= 1; sj += 2) push(unit_vec(n, i) * si + unit_vec(n, j) * sj);
  for (int i = 0; i < n && static_cast<int>(out.size()) < want; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        for (int si = -1; si <= 1; si += 2)
          for (int sj = -1; sj <= 1; sj += 2)
            for (int sk = -1; sk <= 1; sk += 2)
              push(unit_vec(n, i) * si + unit_vec(n, j) * sj + unit_vec(n, k) * sk);

  std::mt19937 rng(987654321u);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int trial = 0; trial < 4000 && static_cast<int>(out.size()) < want; ++trial) {
    MatZ v(n, 1);
    for (int i = 0; i < n; ++i) v(i, 0) = coef(rng);
    if (v.is_zero()) continue;
    // Greedy descent toward the target norm by basis moves.
    for (int step = 0; step < 60; ++step) {
      Int cur = l.norm(v);
      if (cur == target) break;
      Int best_gap = mp::abs(cur - target);
      int best_i = -1, best_s = 0;
      for (int i = 0; i < n; ++i)
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          MatZ w = v + unit_vec(n, i) * sgn;
          Int gap = mp::abs(l.norm(w) - target);
          if (gap < best_gap) {
            best_gap = gap;
            best_i = i;
            best_s = sgn;
          }
        }
      if (best_i < 0) break;
      v = v + unit_vec(n, best_i) * best_s;
    }
    push(v);
  }
  return out;
}

// A norm one vector built from a primitive isotropic vector of an odd
// unimodular lattice: pick a dual partner, force its norm odd with an odd
// basis vector if needed, then shift along the isotropic direction.
MatZ norm_one_from_isotropic(const IntLattice& l, const MatZ& z0) {
  MatZ z = z0;
  Int c = content(z);
  for (int i = 0; i < z.rows(); ++i) z(i, 0) /= c;
  auto w = solve_int((l.gram * z).transposed(), MatZ{{1}});
  if (!w) throw std::logic_error("isotropic vector has no dual partner");
  MatZ wv = *w;
  if (l.norm(wv) % 2 == 0) {
    int odd = -1;
    for (int i = 0; i < l.rank(); ++i)
      if (l.gram(i, i) % 2 != 0) {
        odd = i;
        break;
      }
    if (odd < 0) throw std::logic_error("odd lattice without an odd basis vector");
    MatZ u = unit_vec(l.rank(), odd);
    u = u - wv * l.pair(z, u);
    wv = wv + u;
  }
  Int t = (1 - l.norm(wv)) / 2;
  MatZ v = wv + z * t;
  if (l.norm(v) != 1) throw std::logic_error("norm one construction failed");
  return v;
}

struct NoetherState {
  MatZ k;
  MatZ u;  // accumulated isometry of the diagonal model
};

void apply_move(NoetherState& st, const MatZ& mv) {
  st.k = mv * st.k;
  st.u = mv * st.u;
}

void normalize_signs_and_sort(NoetherState& st, int m) {
  if (st.k(0, 0) > 0) apply_move(st, -MatZ::identity(m + 1));
  for (int i = 1; i <= m; ++i)
    if (st.k(i, 0) < 0) {
      MatZ fl = MatZ::identity(m + 1);
      fl(i, i) = -1;
      apply_move(st, fl);
    }
  // Sort the tail descending with a permutation matrix.
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i + 1;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return st.k(a, 0) > st.k(b, 0); });
  MatZ perm(m + 1, m + 1);
  perm(0, 0) = 1;
  for (int i = 0; i < m; ++i) perm(i + 1, idx[i]) = 1;
  apply_move(st, perm);
}

}  // namespace

NsStandardization standardize_polarized_ns(const IntLattice& ns, const MatZ& k) {
  NsStandardization out;
  const int n = ns.rank();
  if (!ns.is_unimodular()) {
    out.detail = "lattice is not unimodular";
    return out;
  }
  if (k.rows() != n || k.cols() != 1) throw std::invalid_argument("polarization vector shape");

  if (ns.is_even()) {
    if (n != 2 || !(ns.signature() == Inertia{1, 1, 0})) {
      out.detail = "even case is only the rank two hyperbolic model";
      return out;
    }
    // Split off an isotropic vector exactly.
    Int a2 = ns.gram(0, 0), b = ns.gram(0, 1);
    MatZ x(2, 1);
    if (a2 == 0) {
      x(0, 0) = 1;
    } else {
      // Direction (u, v) with a u^2 + b u v + c v^2 = 0, discriminant 1.
      x(0, 0) = -b + 1;
      x(1, 0) = a2;
      Int c = content(x);
      x(0, 0) /= c;
      x(1, 0) /= c;
    }
    if (ns.norm(x) != 0) throw std::logic_error("isotropic split failed");
    auto w = solve_int((ns.gram * x).transposed(), MatZ{{1}});
    if (!w) throw std::logic_error("no dual partner for the isotropic vector");
    MatZ wv = *w;
    Int t = -ns.norm(wv) / 2;
    wv = wv + x * t;
    MatZ basis = hstack(x, wv);
    if (!(basis.transposed() * ns.gram * basis == MatZ{{0, 1}, {1, 0}}))
      throw std::logic_error("hyperbolic basis verification failed");
    MatZ m0 = to_int(inverse(basis));
    MatZ k0 = m0 * k;
    const MatZ kstd{{-2}, {-2}};
    std::vector<MatZ> cands{MatZ::identity(2), -MatZ::identity(2), MatZ{{0, 1}, {1, 0}},
                            MatZ{{0, -1}, {-1, 0}}};
    for (const auto& wmat : cands) {
      if (wmat * k0 == kstd) {
        out.status = NsStandardization::Status::Ok;
        out.to_std = wmat * m0;
        out.k_std = kstd;
        return out;
      }
    }
    out.detail = "canonical vector is not in the hyperbolic model orbit";
    return out;
  }

  // Odd case: diagonalize to (1, -1, ..., -1).
  const int m = n - 1;
  if (!(ns.signature() == Inertia{1, m, 0})) {
    out.detail = "signature is not (1, m)";
    return out;
  }
  MatZ gi(n, n);
  gi(0, 0) = 1;
  for (int i = 1; i < n; ++i) gi(i, i) = -1;

  // Reduce the presentation first; the candidate hunt below needs small
  // entries. A collapsing minor even hands over an isotropic vector, which
  // converts into an exact norm one vector.
  IndefReduction red = indefinite_reduce(ns);
  IntLattice work = lattice_from_gram(red.basis.transposed() * ns.gram * red.basis);
  std::vector<MatZ> cands = norm_candidates(work, 1, 40);
  if (red.isotropic) {
    auto zw = solve_int(red.basis, *red.isotropic);
    if (zw) cands.insert(cands.begin(), norm_one_from_isotropic(work, *zw));
  }

  MatZ basis;
  bool have_basis = false;
  for (size_t ci = 0; ci < cands.size() && ci < 300 && !have_basis; ++ci) {
    MatZ v = cands[ci];
    if (work.norm(v) != 1) continue;
    MatZ comp = orthogonal_complement(work, v);
    IntLattice cf = sublattice_form(work, comp);
    if (!(cf.signature() == Inertia{0, m, 0})) continue;
    std::vector<MatZ> units = short_vectors(cf, 1);
    if (static_cast<int>(units.size()) != m) {
      // The complement hides an even unimodular chunk; push v across a root
      // of the complement and retry. Norm one vectors are always primitive.
      for (const MatZ& rho : short_vectors(cf, 2)) {
        if (cf.norm(rho) != -2) continue;
        if (cands.size() >= 300) break;
        cands.push_back(v * 3 + comp * rho * 2);
      }
      continue;
    }
    MatZ bs = v;
    for (const auto& u : units) bs = hstack(bs, comp * u);
    if (bs.transposed() * work.gram * bs == gi) {
      basis = bs;
      have_basis = true;
    }
  }
  if (!have_basis) {
    out.status = NsStandardization::Status::Unknown;
    out.detail = "no diagonalizing basis found within the search bounds";
    return out;
  }
  MatZ m0 = to_int(inverse(red.basis * basis));

  NoetherState st{m0 * k, MatZ::identity(n)};
  for (int i = 0; i < n; ++i)
    if (st.k(i, 0) % 2 == 0) {
      out.detail = "canonical vector is not characteristic";
      return out;
    }

  MatZ kstd(n, 1);
  kstd(0, 0) = -3;
  for (int i = 1; i < n; ++i) kstd(i, 0) = 1;

  bool done = false;
  for (int iter = 0; iter < 2000; ++iter) {
    normalize_signs_and_sort(st, m);
    if (st.k == kstd) {
      done = true;
      break;
    }
    if (m >= 3) {
      Int sigma = st.k(0, 0) + st.k(1, 0) + st.k(2, 0) + st.k(3, 0);
      if (sigma > 0) {
        // Reflection in h - e1 - e2 - e3 (norm -2).
        MatZ v(n, 1);
        v(0, 0) = 1;
        v(1, 0) = -1;
        v(2, 0) = -1;
        v(3, 0) = -1;
        apply_move(st, MatZ::identity(n) + v * (v.transposed() * gi));
        continue;
      }
    }
    if (m >= 2) {
      Int s = st.k(0, 0) + st.k(1, 0) + st.k(2, 0);
      Int next = st.k(0, 0) + 2 * s;
      if (mp::abs(next) < mp::abs(st.k(0, 0))) {
        // Reflection in h - e1 - e2 (norm -1).
        MatZ v(n, 1);
        v(0, 0) = 1;
        v(1, 0) = -1;
        v(2, 0) = -1;
        apply_move(st, MatZ::identity(n) + (v * (v.transposed() * gi)) * 2);
        continue;
      }
    }
    out.status = NsStandardization::Status::Unknown;
    out.detail = "polarization reduction stalled";
    return out;
  }
  if (!done) {
    out.status = NsStandardization::Status::Unknown;
    out.detail = "polarization reduction did not terminate";
    return out;
  }

  out.status = NsStandardization::Status::Ok;
  out.to_std = st.u * m0;
  out.k_std = kstd;
  if (!(out.to_std * k == kstd)) throw std::logic_error("standardization canonical image wrong");
  if (!(ns.gram == out.to_std.transposed() * gi * out.to_std))
    throw std::logic_error("standardization is not an isometry");
  return out;
}

QdpIsoResult qdp_isomorphism(const EFibred& a, const EFibred& b) {
  QdpIsoResult out;
  QdpClass ca = classify_qdp(a), cb = classify_qdp(b);
  if (ca.model == "None") throw std::invalid_argument("first input: " + ca.reason);
  if (cb.model == "None") throw std::invalid_argument("second input: " + cb.reason);
  if (ca.model != cb.model || ca.n != cb.n || ca.degree != cb.degree) {
    out.status = QdpIsoResult::Status::Refuted;
    out.detail = "different models or degrees";
    return out;
  }
  RealisationCoords ra = realisation_coords(a), rb = realisation_coords(b);
  NsStandardization sa = standardize_polarized_ns(ra.ns, ra.k);
  NsStandardization sb = standardize_polarized_ns(rb.ns, rb.k);
  if (sa.status != NsStandardization::Status::Ok || sb.status != NsStandardization::Status::Ok) {
    out.status = QdpIsoResult::Status::Unknown;
    out.detail = sa.status != NsStandardization::Status::Ok ? sa.detail : sb.detail;
    return out;
  }
  MatZ p = to_int(inverse(sb.to_std)) * sa.to_std;
  const int m = ra.ns.rank();
  MatZ psi_real(m + 2, m + 2);
  psi_real(0, 0) = 1;
  psi_real(m + 1, m + 1) = 1;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) psi_real(1 + i, 1 + j) = p(i, j);
  out.psi = rb.t * psi_real * to_int(inverse(ra.t));
  out.phi = rb.phi * to_int(inverse(ra.phi));
  if (!(out.psi.transposed() * b.gram * out.psi == a.gram))
    throw std::logic_error("pseudolattice isometry verification failed");
  if (!(b.f * out.psi == out.phi * a.f))
    throw std::logic_error("fibre map intertwining verification failed");
  out.status = QdpIsoResult::Status::Isomorphic;
  return out;
}

}  // namespace k3lat
