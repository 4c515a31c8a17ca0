#include "k3lat/fibration.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace k3lat {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::logic_error(msg);
}

void demand(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

MatZ solved(const MatZ& a, const MatZ& b, const char* msg) {
  auto x = solve_int(a, b);
  require(x.has_value(), msg);
  return *x;
}

std::string str(const Int& n) {
  std::ostringstream os;
  os << n;
  return os.str();
}

bool is_sl2(const MatZ& u) {
  return u.rows() == 2 && u.cols() == 2 && det(u) == 1;
}

MatZ sl2_inverse(const MatZ& u) {
  require(is_sl2(u), "matrix is not in SL2(Z)");
  return MatZ{{u(1, 1), -u(0, 1)}, {-u(1, 0), u(0, 0)}};
}

bool negative_definite(const MatZ& gram) {
  Inertia in = inertia(gram);
  return in.pos == 0 && in.zero == 0;
}

MatZ hstack_cols(const std::vector<MatZ>& cols, int rows) {
  MatZ out(rows, static_cast<int>(cols.size()));
  for (int j = 0; j < out.cols(); ++j) {
    require(cols[j].rows() == rows && cols[j].cols() == 1,
            "column stack received a non-column");
    for (int i = 0; i < rows; ++i) out(i, j) = cols[j](i, 0);
  }
  return out;
}

std::string mat_key(const MatZ& m) {
  std::ostringstream os;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) os << m(i, j) << ",";
  return os.str();
}

// Signed shear invariant of a unipotent element: the unique m with
// u^-1 t u = [[1, m], [0, 1]] for some u in SL2(Z), or nothing when the trace
// is not 2. The sign is pinned by taking (v, w) positively oriented with v
// spanning the fixed line.
std::optional<Int> shear_of(const MatZ& t) {
  require(is_sl2(t), "shear invariant needs an SL2(Z) matrix");
  if (t(0, 0) + t(1, 1) != 2) return std::nullopt;
  MatZ id = MatZ::identity(2);
  if (t == id) return Int(0);
  MatZ k = kernel_int(t - id);
  require(k.cols() == 1, "unipotent matrix without a fixed line");
  MatZ u0 = complement_basis(k);
  if (det(hstack(k, u0)) != 1) u0 = -u0;
  MatZ w = (t - id) * u0;
  Int m = k(0, 0) != 0 ? w(0, 0) / k(0, 0) : w(1, 0) / k(1, 0);
  require(w == k * m, "shear extraction failed");
  return m;
}

bool all_digits(const std::string& s) {
  if (s.empty() || s.size() > 2) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

KodairaFibre fibre_model(const std::string& tag) {
  demand(!tag.empty(), "empty fibre tag");
  demand(tag[0] != 'm',
         "multiple fibres do not occur on these fibrations; drop the m");
  const MatZ a = vec_a();
  const MatZ bma = ab(-1, 1);  // b - a
  const MatZ bpa = ab(1, 1);   // b + a
  std::vector<MatZ> w;
  auto run = [&](int count, const MatZ& v) {
    for (int i = 0; i < count; ++i) w.push_back(v);
  };
  if (tag == "II") {
    w = {a, bpa};
  } else if (tag == "III") {
    w = {a, a, bpa};
  } else if (tag == "IV") {
    w = {a, a, a, bpa};
  } else if (tag == "IVstar") {
    run(5, a);
    w.push_back(bma);
    w.push_back(bpa);
    w.push_back(bpa);
  } else if (tag == "IIIstar") {
    run(6, a);
    w.push_back(bma);
    w.push_back(bpa);
    w.push_back(bpa);
  } else if (tag == "IIstar") {
    run(7, a);
    w.push_back(bma);
    w.push_back(bpa);
    w.push_back(bpa);
  } else if (tag.rfind("Istar", 0) == 0 && all_digits(tag.substr(5))) {
    int n = std::stoi(tag.substr(5));
    demand(n + 6 <= 24, "Istar" + tag.substr(5) + " does not fit on a K3");
    run(n + 4, a);
    w.push_back(bma);
    w.push_back(bpa);
  } else if (tag.size() > 1 && tag[0] == 'I' && all_digits(tag.substr(1))) {
    int n = std::stoi(tag.substr(1));
    demand(n >= 1 && n <= 24, "I" + tag.substr(1) + " does not fit on a K3");
    run(n, a);
  } else {
    demand(false, "unrecognized fibre tag: " + tag);
  }
  KodairaFibre out;
  out.tag = tag;
  out.word = w;
  out.monodromy = z_chain(w).twist();
  return out;
}

int FibreConfig::euler() const {
  int t = 0;
  for (const auto& f : fibres) t += f.euler();
  return t;
}

DiscFibration build_disc_fibration(const FibreConfig& c) {
  const int nf = static_cast<int>(c.fibres.size());
  demand(nf > 0, "fibre configuration is empty");
  demand(c.framings.empty() || static_cast<int>(c.framings.size()) == nf,
         "framing list must match the fibre list or be empty");
  for (const MatZ& m : c.framings)
    demand(is_sl2(m), "framings must lie in SL2(Z)");
  const int total = c.euler();
  demand(total <= 24, "total Euler number exceeds 24");

  DiscFibration w;
  w.config = c;
  std::vector<std::vector<MatZ>> words(nf);
  for (int i = 0; i < nf; ++i) {
    demand(!c.fibres[i].word.empty(), "fibre with an empty word");
    for (const MatZ& v : c.fibres[i].word)
      words[i].push_back(c.framings.empty() ? v : c.framings[i] * v);
  }
  EFibred g = z_chain(words[0]);
  for (int i = 1; i < nf; ++i) g = glue_fibred(g, z_chain(words[i]), +1);
  w.g = g;
  w.twist = g.twist();

  int off = 0;
  for (int i = 0; i < nf; ++i) {
    w.offsets.push_back(off);
    const int k = static_cast<int>(words[i].size());
    MatZ wm(2, k);
    for (int j = 0; j < k; ++j) {
      wm(0, j) = words[i][j](0, 0);
      wm(1, j) = words[i][j](1, 0);
    }
    MatZ ker = kernel_int(wm);  // k x r, saturated
    MatZ amb(total, ker.cols());
    for (int p = 0; p < k; ++p)
      for (int q = 0; q < ker.cols(); ++q) amb(off + p, q) = ker(p, q);
    w.component_blocks.push_back(amb);

    std::vector<MatZ> simples;
    if (ker.cols() > 0) {
      MatZ sub = amb.transposed() * g.gram * amb;
      require(sub.is_symmetric(), "fibre-supported block pairing not symmetric");
      IntLattice l = lattice_from_gram(-sub);
      require(negative_definite(l.gram), "fibre-supported block not definite");
      for (const MatZ& s : simple_roots(l)) simples.push_back(amb * s);
    }
    w.components.push_back(simples);
    off += k;
  }
  return w;
}

DiscFibration rebase(const DiscFibration& w, const MatZ& u) {
  demand(is_sl2(u), "base changes must lie in SL2(Z)");
  MatZ uinv = sl2_inverse(u);
  DiscFibration out = w;
  out.g = make_fibred(w.g.gram, uinv * w.g.f);
  out.twist = out.g.twist();
  // Keep the stored configuration reproducing the rebased object.
  if (out.config.framings.empty())
    out.config.framings.assign(out.config.fibres.size(), uinv);
  else
    for (MatZ& m : out.config.framings) m = uinv * m;
  return out;
}

std::vector<MatZ> component_classes_ns(const DiscFibration& w,
                                       const SurfaceLikeData& d) {
  demand(d.ok, "component classes need surface-like data");
  std::vector<MatZ> out;
  for (const auto& fibre : w.components)
    for (const MatZ& s : fibre) out.push_back(ns_class(d, s));
  return out;
}

LoopSplit make_loop_split(FibreConfig side1, FibreConfig side2) {
  demand(!side1.fibres.empty() && !side2.fibres.empty(),
         "both sides of a split need at least one fibre");
  const int e1 = side1.euler(), e2 = side2.euler();
  demand(e1 + e2 == 24, "split Euler numbers must sum to 24, got " +
                            std::to_string(e1 + e2));
  LoopSplit s;
  if (e1 > 12) {
    s.side1 = std::move(side2);
    s.side2 = std::move(side1);
    s.swapped = true;
  } else {
    s.side1 = std::move(side1);
    s.side2 = std::move(side2);
  }
  return s;
}

AllowableVerdict allowable_check(const LoopSplit& s, const Int& box) {
  demand(box >= 0, "search box must be nonnegative");
  DiscFibration w1 = build_disc_fibration(s.side1);
  DiscFibration w2 = build_disc_fibration(s.side2);
  AllowableVerdict v;
  v.e1 = w1.euler();
  v.e2 = w2.euler();
  v.twist1 = w1.twist;
  v.twist2 = w2.twist;
  demand(v.e1 + v.e2 == 24, "split Euler numbers must sum to 24");
  demand(v.e1 <= 12, "side 1 must carry Euler number at most 12");

  const MatZ id = MatZ::identity(2);
  if (!(v.twist1 * v.twist2 == id)) {
    v.reason = "side monodromies do not compose to the identity";
    return v;
  }
  const MatZ target{{1, Int(v.e1 - 12)}, {0, 1}};
  const MatZ r1 = w1.g.adjoint();
  const MatZ r2 = w2.g.adjoint();

  std::vector<Int> vals{0};
  for (Int q = 1; q <= box; ++q) {
    vals.push_back(q);
    vals.push_back(-q);
  }
  bool found = false;
  MatZ best;
  for (const Int& x0 : vals)
    for (const Int& x1 : vals)
      for (const Int& x2 : vals)
        for (const Int& x3 : vals) {
          if (x0 * x3 - x1 * x2 != 1) continue;
          MatZ u{{x0, x1}, {x2, x3}};
          if (!(v.twist1 * u == u * target)) continue;
          MatZ anew{{x0}, {x2}};
          if (!is_primitive_vector(r1 * anew)) continue;
          if (!is_primitive_vector(r2 * anew)) continue;
          ++v.certificates;
          if (!found) {
            found = true;
            best = u;
          }
        }
  if (found) {
    v.allowable = true;
    v.basis = best;
    return v;
  }
  auto sh = shear_of(v.twist1);
  if (!sh.has_value())
    v.reason = "side-1 boundary monodromy is not unipotent";
  else if (*sh != v.e1 - 12)
    v.reason = "side-1 boundary shear is " + str(*sh) +
               " but the Euler number forces " + std::to_string(v.e1 - 12);
  else
    v.reason =
        "no basis in the search box makes both adjoint point images primitive";
  return v;
}

K3SplitModel build_k3_split_model(const LoopSplit& s) {
  K3SplitModel out;
  out.split = s;
  out.certificate = allowable_check(s);
  demand(out.certificate.allowable,
         "split is not allowable: " + out.certificate.reason);
  const MatZ& u = out.certificate.basis;
  out.side1 = rebase(build_disc_fibration(s.side1), u);
  out.side2 = rebase(build_disc_fibration(s.side2), u);
  out.surf1 = surface_like(out.side1.g);
  demand(out.surf1.ok, "side 1 is not surface-like: " + out.surf1.reason);
  out.surf2 = surface_like(out.side2.g);
  demand(out.surf2.ok, "side 2 is not surface-like: " + out.surf2.reason);
  QdpClass c1 = classify_qdp(out.side1.g);
  demand(c1.model != "None", "side 1 is not quasi del Pezzo: " + c1.reason);
  QdpClass c2 = classify_qdp(out.side2.g);
  demand(c2.model != "None", "side 2 is not quasi del Pezzo: " + c2.reason);
  out.glued = build_glued(out.side1.g, out.side2.g);
  require(!out.glued.swapped, "gluing reordered an allowable split");
  out.degree = 12 - out.certificate.e1;
  require(out.glued.degree_num == Int(out.degree),
          "glued degree disagrees with the Euler count");
  require(out.glued.g.twist() == MatZ::identity(2),
          "allowable split glued to a nontrivial twist");
  return out;
}

GammaVerdict check_gamma_polarisation(const DiscFibration& w,
                                      const MatZ& gamma_in_ns,
                                      const FeasibilityOptions& opt) {
  SurfaceLikeData d = surface_like(w.g);
  demand(d.ok, "disc fibration is not surface-like: " + d.reason);
  QdpClass cls = classify_qdp(w.g);
  demand(cls.model != "None",
         "disc fibration is not quasi del Pezzo: " + cls.reason);
  demand(w.euler() < 12,
         "fibration polarisations need Euler number below 12, got " +
             std::to_string(w.euler()));
  demand(gamma_in_ns.rows() == d.ns.rank(),
         "polarisation basis must live in NS coordinates");
  GammaVerdict v;
  if (gamma_in_ns.cols() == 0) {
    v.negative_definite = v.primitive = v.orthogonal = v.roots_effective = true;
    v.detail = "trivial polarisation";
    return v;
  }
  v.primitive = is_primitive_sublattice(gamma_in_ns);
  MatZ restr = gamma_in_ns.transposed() * d.ns.gram * gamma_in_ns;
  v.negative_definite = negative_definite(restr);
  MatZ rb = ns_class(d, w.g.r_b());
  v.orthogonal = (gamma_in_ns.transposed() * d.ns.gram * rb).is_zero();
  if (!v.negative_definite) {
    v.detail = "not negative definite, roots not enumerated";
    return v;
  }
  std::vector<MatZ> comps = component_classes_ns(w, d);
  v.roots_effective = true;
  for (const MatZ& sv : short_vectors(lattice_from_gram(restr), 2)) {
    if ((sv.transposed() * restr * sv)(0, 0) != -2) continue;
    MatZ root = gamma_in_ns * sv;
    bool plus = is_nonneg_combination(comps, root, opt.cap);
    bool minus = is_nonneg_combination(comps, -root, opt.cap);
    if (plus != minus) continue;
    v.roots_effective = false;
    v.failing_roots.push_back(root);
  }
  if (!v.roots_effective)
    v.detail = std::to_string(v.failing_roots.size()) +
               " root pair(s) not resolved by fibre components";
  return v;
}

GammaVerdict check_gamma_polarisation(const K3SplitModel& m, int side,
                                      const MatZ& gamma_in_ns,
                                      const FeasibilityOptions& opt) {
  demand(side == 1 || side == 2, "side must be 1 or 2");
  return check_gamma_polarisation(side == 1 ? m.side1 : m.side2, gamma_in_ns,
                                  opt);
}

MwReport mw_coupling_data(const K3SplitModel& m,
                          const std::optional<MatZ>& gamma_in_ns) {
  demand(gamma_in_ns.has_value(),
         "no section decomposition supplied: pass the fibre-orthogonal "
         "summand of NS in ns_quot coordinates");
  demand(m.glued.degree_num > 0,
         "Mordell-Weil coupling needs positive degree (side-1 Euler number "
         "below 12)");
  const MatZ& gamma = *gamma_in_ns;
  Polarisation l = lattice_polarisation(m.glued, gamma);
  MwReport rep;
  rep.gamma_rank = gamma.cols();
  MatZ restr = gamma.transposed() * m.glued.ns_quot.gram * gamma;
  demand(negative_definite(restr),
         "the section complement must be negative definite");

  Polarisation lhat = lift_polarisation(m.glued, l);
  Polarisation l1 = intersection_polarisation(m.glued, lhat, 1);
  Polarisation l2 = intersection_polarisation(m.glued, lhat, 2);

  std::vector<MatZ> rcols;
  for (int side = 1; side <= 2; ++side) {
    const DiscFibration& w = side == 1 ? m.side1 : m.side2;
    const SurfaceLikeData& dd = side == 1 ? m.surf1 : m.surf2;
    const Polarisation& li = side == 1 ? l1 : l2;
    for (const auto& fibre : w.components)
      for (const MatZ& s : fibre) {
        MatZ c_ns = ns_class(dd, s);
        require(solve_int(li.basis, c_ns).has_value(),
                "fibre component escapes the intersection polarisation");
        rcols.push_back(factor_class_in_quot(m.glued, side, c_ns));
      }
  }
  MatZ x(gamma.cols(), static_cast<int>(rcols.size()));
  for (int j = 0; j < x.cols(); ++j) {
    MatZ co = solved(gamma, rcols[j],
                     "component classes do not lie in the supplied section "
                     "complement");
    for (int i = 0; i < x.rows(); ++i) x(i, j) = co(i, 0);
  }
  Snf s = smith_normal_form(x);
  rep.r_rank = s.rank;
  rep.mw_free_rank = gamma.cols() - s.rank;
  for (int i = 0; i < s.rank; ++i)
    if (s.D(i, i) != 1) rep.mw_invariants.push_back(s.D(i, i));

  rep.coupling = coupling_group(m.glued, l);

  bool ok = rep.coupling.free_rank <= rep.mw_free_rank;
  if (ok && rep.coupling.free_rank == 0 && rep.mw_free_rank == 0) {
    Int qo = 1, mo = 1;
    for (const Int& d : rep.coupling.invariants) qo *= d;
    for (const Int& d : rep.mw_invariants) mo *= d;
    ok = qo != 0 && mo % qo == 0;
  }
  rep.consistent = ok;
  std::ostringstream os;
  os << "MW free rank " << rep.mw_free_rank << ", torsion";
  if (rep.mw_invariants.empty()) os << " trivial";
  for (const Int& d : rep.mw_invariants) os << " Z/" << d;
  os << "; coupling free rank " << rep.coupling.free_rank << ", torsion";
  if (rep.coupling.invariants.empty()) os << " trivial";
  for (const Int& d : rep.coupling.invariants) os << " Z/" << d;
  rep.detail = os.str();
  return rep;
}

CompatiblePolarisation make_compatible_polarisation(
    const IntLattice& lcheck, const MatZ& f, const std::optional<MatZ>& tau) {
  demand(det(lcheck.gram) != 0, "polarisation lattice must be nondegenerate");
  demand(f.rows() == lcheck.rank() && f.cols() == 1,
         "fibre class must be a column in lattice coordinates");
  demand(!f.is_zero() && is_primitive_vector(f),
         "fibre class must be primitive");
  demand(lcheck.norm(f) == 0, "fibre class must be isotropic");
  CompatiblePolarisation out;
  out.lcheck = lcheck;
  out.f = f;
  MatZ perp = kernel_int((lcheck.gram * f).transposed());
  MatZ fin = solved(perp, f, "fibre class missing from its own perp");
  out.gamma_lift = perp * complement_basis(fin);
  MatZ gg = out.gamma_lift.transposed() * lcheck.gram * out.gamma_lift;
  out.gamma = lattice_from_gram(gg);
  Inertia sig = lcheck.signature();
  if (sig.pos == 1 && sig.neg == lcheck.rank() - 1)
    require(negative_definite(gg),
            "fibre-perp quotient of a hyperbolic lattice must be negative "
            "definite");
  if (tau.has_value()) {
    demand(tau->cols() == 1 && tau->rows() > 0,
           "transcendental certificate must be a column vector");
    out.tau = tau;
  }
  return out;
}

namespace {

// Expected Gram matrix of the cyclic component chain of an I_d fibre: -2 on
// the diagonal, consecutive entries (cyclically) 1, the rest 0; for d = 2 the
// two components meet twice.
MatZ affine_cycle_gram(int d) {
  MatZ g(d, d);
  for (int i = 0; i < d; ++i) g(i, i) = -2;
  if (d == 2) {
    g(0, 1) = g(1, 0) = 2;
  } else {
    for (int i = 0; i < d; ++i) {
      int j = (i + 1) % d;
      g(i, j) += 1;
      g(j, i) += 1;
    }
  }
  return g;
}

// Depth-first search for a chain of k roots with consecutive pairing 1 and
// all other pairings 0, scanning roots in canonical order. accept() filters
// complete chains; the first accepted chain is returned.
bool chain_dfs(const std::vector<MatZ>& roots, const MatZ& gram, int k,
               std::vector<MatZ>& path,
               const std::function<bool(const std::vector<MatZ>&)>& accept) {
  if (static_cast<int>(path.size()) == k) return accept(path);
  for (const MatZ& r : roots) {
    bool fits = true;
    for (int i = 0; i < static_cast<int>(path.size()) && fits; ++i) {
      Int p = pair_with(gram, path[i], r);
      fits = (i + 1 == static_cast<int>(path.size())) ? p == 1 : p == 0;
    }
    if (!fits) continue;
    path.push_back(r);
    if (chain_dfs(roots, gram, k, path, accept)) return true;
    path.pop_back();
  }
  return false;
}

}  // namespace

RatellModel ratell_model(int d) {
  demand(d >= 1 && d <= 9, "the fibre at infinity must be I_d with 1 <= d <= 9");
  RatellModel m;
  m.pic = standard_lattice("I(1,9)");
  m.fclass = MatZ(10, 1);
  m.fclass(0, 0) = 3;
  for (int i = 1; i < 10; ++i) m.fclass(i, 0) = -1;
  require(m.pic.norm(m.fclass) == 0, "anticanonical fibre class not isotropic");
  MatZ perp = kernel_int((m.pic.gram * m.fclass).transposed());
  MatZ fin = solved(perp, m.fclass, "fibre class missing from its own perp");
  m.quot_lift = perp * complement_basis(fin);
  MatZ qg = m.quot_lift.transposed() * m.pic.gram * m.quot_lift;
  m.quot = lattice_from_gram(qg);
  require(m.quot.rank() == 8 && m.quot.is_even() && m.quot.is_unimodular() &&
              negative_definite(qg),
          "fibre-perp quotient is not the negative definite even unimodular "
          "rank-8 lattice");

  if (d == 1) {
    m.d_components = {MatZ(8, 1)};  // the fibre itself, zero in the quotient
    return m;
  }

  std::vector<MatZ> roots;
  for (const MatZ& r : short_vectors(m.quot, 2)) {
    roots.push_back(r);
    roots.push_back(-r);
  }
  auto accept = [&](const std::vector<MatZ>& path) {
    if (d == 9) return true;  // perp is trivial, nothing to pin down
    MatZ c = hstack_cols(path, 8);
    MatZ b = orthogonal_complement(m.quot, c);
    MatZ g = b.transposed() * qg * b;
    Int dd = det(g);
    return (dd < 0 ? -dd : dd) == d;
  };
  std::vector<MatZ> path;
  require(chain_dfs(roots, qg, d - 1, path, accept),
          "no boundary component chain with the expected complement");
  MatZ closing(8, 1);
  for (const MatZ& r : path) closing = closing - r;
  path.push_back(closing);
  MatZ c = hstack_cols(path, 8);
  require(c.transposed() * qg * c == affine_cycle_gram(d),
          "boundary components do not form the affine cycle");
  m.d_components = path;
  return m;
}

RatellTransfer ratell_transfer(const DiscFibration& w, const MatZ& n_basis,
                               RatellDirection dir) {
  SurfaceLikeData d0 = surface_like(w.g);
  demand(d0.ok, "disc fibration is not surface-like: " + d0.reason);
  QdpClass cls = classify_qdp(w.g);
  demand(cls.model != "None",
         "disc fibration is not quasi del Pezzo: " + cls.reason);
  const MatZ& tw = w.twist;
  demand(tw(0, 0) == 1 && tw(1, 1) == 1 && tw(1, 0) == 0 && tw(0, 1) <= -1 &&
             tw(0, 1) >= -9,
         "boundary monodromy is not inverse to an I_d fibre with 1 <= d <= 9");
  const int d = static_cast<int>(-tw(0, 1));
  demand(w.euler() == 12 - d,
         "Euler number does not match the boundary fibre");

  RatellTransfer out;
  out.d = d;
  RatellModel model = ratell_model(d);

  MatZ rb = ns_class(d0, w.g.r_b());
  MatZ sg_basis = orthogonal_complement(d0.ns, rb);
  IntLattice sg =
      lattice_from_gram(sg_basis.transposed() * d0.ns.gram * sg_basis);
  MatZ sy_basis;
  if (d == 1) {
    sy_basis = MatZ::identity(8);
  } else {
    std::vector<MatZ> chain(model.d_components.begin(),
                            model.d_components.end() - 1);
    sy_basis = orthogonal_complement(model.quot, hstack_cols(chain, 8));
  }
  IntLattice sy =
      lattice_from_gram(sy_basis.transposed() * model.quot.gram * sy_basis);
  require(sg.rank() == 9 - d && sy.rank() == 9 - d,
          "transfer subspaces have unexpected rank");

  MatZ iso(0, 0);
  if (sg.rank() > 0) {
    IsoSearchResult res = definite_isometry(sg, sy);
    require(res.iso.has_value(), "transfer subspaces failed to match");
    iso = *res.iso;
  }

  const bool to_surface = dir == RatellDirection::ToRationalSurface;
  out.source_space = to_surface ? sg : sy;
  out.target_space = to_surface ? sy : sg;
  out.source_space_basis = to_surface ? sg_basis : sy_basis;
  out.target_space_basis = to_surface ? sy_basis : sg_basis;
  out.iso = to_surface ? iso : (sg.rank() > 0 ? to_int(inverse(iso)) : iso);

  if (to_surface) {
    demand(n_basis.rows() == d0.ns.rank(),
           "transfer source must be given in NS coordinates");
  } else {
    demand(n_basis.rows() == 8,
           "transfer source must be given in fibre-perp quotient coordinates");
    for (const MatZ& comp : model.d_components)
      demand((n_basis.transposed() * model.quot.gram * comp).is_zero(),
             "classes must be orthogonal to the boundary fibre components");
  }
  if (n_basis.cols() == 0) {
    out.image = MatZ(to_surface ? 8 : d0.ns.rank(), 0);
    return out;
  }
  demand(is_primitive_sublattice(n_basis), "transfer source must be primitive");
  const IntLattice& src_amb = to_surface ? d0.ns : model.quot;
  MatZ src_gram = n_basis.transposed() * src_amb.gram * n_basis;
  demand(negative_definite(src_gram),
         "transferable sublattices are negative definite");
  MatZ co =
      solved(out.source_space_basis, n_basis,
             to_surface
                 ? "classes must pair to zero with the adjoint image of b"
                 : "classes must lie in the boundary-component perp");
  out.image = out.target_space_basis * (out.iso * co);
  require(is_primitive_sublattice(out.image),
          "transfer failed to preserve primitivity");
  const IntLattice& tgt_amb = to_surface ? model.quot : d0.ns;
  require(out.image.transposed() * tgt_amb.gram * out.image == src_gram,
          "transfer failed to preserve the form");
  return out;
}

namespace {

std::vector<MatZ> sl2_ball(int max_len) {
  const MatZ t{{1, 1}, {0, 1}};
  const MatZ s{{0, -1}, {1, 0}};
  const std::vector<MatZ> gens = {t, sl2_inverse(t), s, sl2_inverse(s)};
  std::vector<MatZ> out = {MatZ::identity(2)};
  std::set<std::string> seen = {mat_key(out[0])};
  std::vector<MatZ> frontier = out;
  for (int len = 1; len <= max_len; ++len) {
    std::vector<MatZ> next;
    for (const MatZ& m : frontier)
      for (const MatZ& g : gens) {
        MatZ p = m * g;
        if (seen.insert(mat_key(p)).second) {
          next.push_back(p);
          out.push_back(p);
        }
      }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

std::optional<std::vector<MatZ>> find_framings(
    const std::vector<KodairaFibre>& fibres, const MatZ& target, int max_len) {
  demand(!fibres.empty(), "framing search needs at least one fibre");
  demand(is_sl2(target), "framing target must lie in SL2(Z)");
  demand(max_len >= 0 && max_len <= 12, "word length out of range");
  const int nf = static_cast<int>(fibres.size());
  std::vector<MatZ> ball = sl2_ball(max_len);

  // Per fibre, distinct conjugates of the monodromy with a witness framing;
  // first witness in ball order wins, so results are deterministic and small.
  struct Entry {
    MatZ conj, m;
  };
  std::vector<std::vector<Entry>> entries(nf);
  std::vector<std::map<std::string, MatZ>> lookup(nf);
  for (int i = 0; i < nf; ++i) {
    for (const MatZ& m : ball) {
      MatZ c = m * fibres[i].monodromy * sl2_inverse(m);
      auto ins = lookup[i].emplace(mat_key(c), m);
      if (ins.second) entries[i].push_back({c, m});
    }
  }

  std::vector<MatZ> witness(nf);
  std::function<bool(int, const MatZ&)> dfs = [&](int i, const MatZ& p) {
    if (i == nf - 1) {
      MatZ need = sl2_inverse(p) * target;
      auto it = lookup[i].find(mat_key(need));
      if (it == lookup[i].end()) return false;
      witness[i] = it->second;
      return true;
    }
    for (const Entry& e : entries[i]) {
      if (!dfs(i + 1, p * e.conj)) continue;
      witness[i] = e.m;
      return true;
    }
    return false;
  };
  if (!dfs(0, MatZ::identity(2))) return std::nullopt;
  return witness;
}

}  // namespace k3lat
