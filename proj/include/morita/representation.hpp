#pragma once

// Representations of a unital C*-algebra on right Hilbert modules, and
// the operator-valued witnesses that tie two representations together
// across an equivalence bimodule.  A witness assigns to every element
// y of the bimodule a map between the two module spaces such that the
// two inner products and the two-sided action are implemented by
// operator algebra; verifying those identities numerically is what
// certifies strong Morita equivalence of the representations.

#include <utility>
#include <vector>

#include "morita/bimodule.hpp"

namespace morita {

/// pi: C -> B_B(E), tabulated over the matrix-unit basis of C.
struct Representation {
  AlgebraPtr alg;
  ModuleRef space;
  std::vector<ModuleMap> table;

  ModuleMap act(const AlgebraElement& a) const {
    require(same_algebra(a.algebra(), alg), "shape-mismatch",
            "acting by an element of a different algebra");
    auto out = zero_map(space, space);
    const Vec v = a.vec();
    for (int w = 0; w < alg->vs_dim(); ++w)
      if (v(w) != cplx(0.0)) out = out + table[w] * v(w);
    return out;
  }
};

inline bool same_representation(const Representation& a, const Representation& b,
                                double tol = 1e-9) {
  if (!same_algebra(a.alg, b.alg) || !same_module(a.space, b.space, tol))
    return false;
  for (int w = 0; w < a.alg->vs_dim(); ++w)
    if ((a.table[w] - b.table[w]).norm() > tol) return false;
  return true;
}

inline Certificate verify_representation(const Representation& rep,
                                         const Tolerances& tt = {}) {
  Certificate cert("representation", tt.tol);
  const int vs = rep.alg->vs_dim();
  require(static_cast<int>(rep.table.size()) == vs, "invalid-shape",
          "representation table must cover the algebra basis");

  cert.record("unital", (rep.act(unit_element(rep.alg)) - identity_map(rep.space)).norm());

  double mult = 0.0, star = 0.0;
  for (int w = 0; w < vs; ++w) {
    star = std::max(star, (rep.act(basis_element(rep.alg, w).adjoint()) -
                           rep.table[w].adjoint())
                              .norm());
    for (int v = 0; v < vs; ++v) {
      const auto prod = basis_element(rep.alg, w) * basis_element(rep.alg, v);
      mult = std::max(mult,
                      (rep.table[w].compose(rep.table[v]) - rep.act(prod)).norm());
    }
  }
  cert.record("multiplicative", mult);
  cert.record("star", star);

  // Nondegeneracy as a rank statement: pi(C)E spans E.
  const Mat basis = rep.space->basis();
  const int r = static_cast<int>(basis.cols());
  Mat span(rep.space->vec_dim(), static_cast<Eigen::Index>(vs) * r);
  for (int w = 0; w < vs; ++w)
    span.block(0, static_cast<Eigen::Index>(w) * r, rep.space->vec_dim(), r) =
        rep.table[w].vec_action() * basis;
  cert.record("nondegenerate", static_cast<double>(
                                   r - detail::rank_of_span(span, tt.rank_cutoff)));
  return cert;
}

inline Representation make_representation(AlgebraPtr alg, ModuleRef space,
                                          std::vector<ModuleMap> table,
                                          const Tolerances& tt = {}) {
  Representation rep{std::move(alg), std::move(space), std::move(table)};
  for (const auto& t : rep.table)
    require(same_module(t.source(), rep.space) && same_module(t.target(), rep.space),
            "shape-mismatch", "representation maps must act on the given module");
  auto cert = verify_representation(rep, tt);
  if (!cert.passed())
    throw Error("invalid-representation",
                "table is not a nondegenerate *-representation", cert);
  return rep;
}

/// Equivalence witness between (pi1, E) and (pi2, F) over a bimodule Y:
/// one map F -> E per complex basis element of the carrier, extended
/// linearly by pi_of.
struct SMEWitness {
  Representation rep1;   // (pi_C, E)
  Representation rep2;   // (pi_D, F)
  BimodulePtr bimodule;  // Y : C-D
  std::vector<ModuleMap> maps;

  ModuleMap pi_of(const ModuleElement& y) const {
    const Vec coords = bimodule->carrier()->basis().adjoint() * y.vec();
    auto out = zero_map(rep2.space, rep1.space);
    for (Eigen::Index a = 0; a < coords.size(); ++a)
      if (coords(a) != cplx(0.0)) out = out + maps[a] * coords(a);
    return out;
  }
};

/// Residuals of the three defining identities of a witness:
///   left-inner       pi_Y(y) pi_Y(z)* = pi1(_C<y,z>)
///   right-inner      pi_Y(y)* pi_Y(z) = pi2(<y,z>_D)
///   bimodule-action  pi_Y(c.y.d) = pi1(c) pi_Y(y) pi2(d)
inline Certificate verify_sme_witness(const SMEWitness& w, const Tolerances& tt = {}) {
  require(same_algebra(w.rep1.alg, w.bimodule->left()) &&
              same_algebra(w.rep2.alg, w.bimodule->right()),
          "shape-mismatch", "witness representations do not match the bimodule");
  require(same_algebra(w.rep1.space->base(), w.rep2.space->base()),
          "shape-mismatch", "witness spaces live over different base algebras");
  const auto& carrier = w.bimodule->carrier();
  const Mat basis = carrier->basis();
  const int r = static_cast<int>(basis.cols());
  require(static_cast<int>(w.maps.size()) == r, "invalid-shape",
          "witness table must cover the carrier basis");
  for (const auto& m : w.maps)
    require(same_module(m.source(), w.rep2.space) &&
                same_module(m.target(), w.rep1.space),
            "shape-mismatch", "witness maps must go from the second space to the first");

  std::vector<ModuleElement> ys;
  ys.reserve(r);
  for (int a = 0; a < r; ++a) ys.push_back(element_from_vec(carrier, Vec(basis.col(a))));

  Certificate cert("sme-witness", tt.tol);
  auto rel = [](double d, double lhs, double rhs) {
    return d / std::max({1.0, lhs, rhs});
  };

  double left = 0.0, right = 0.0;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      const auto lhs1 = w.maps[a].compose(w.maps[b].adjoint());
      const auto rhs1 = w.rep1.act(w.bimodule->left_inner(ys[a], ys[b]));
      left = std::max(left, rel((lhs1 - rhs1).norm(), lhs1.norm(), rhs1.norm()));

      const auto lhs2 = w.maps[a].adjoint().compose(w.maps[b]);
      const auto rhs2 = w.rep2.act(inner_product(ys[a], ys[b]));
      right = std::max(right, rel((lhs2 - rhs2).norm(), lhs2.norm(), rhs2.norm()));
    }
  cert.record("left-inner", left);
  cert.record("right-inner", right);

  double action = 0.0;
  for (int u = 0; u < w.rep1.alg->vs_dim(); ++u) {
    const auto cu = basis_element(w.rep1.alg, u);
    const auto act_u = w.rep1.table[u];
    for (int v = 0; v < w.rep2.alg->vs_dim(); ++v) {
      const auto dv = basis_element(w.rep2.alg, v);
      const auto act_v = w.rep2.table[v];
      for (int a = 0; a < r; ++a) {
        const auto moved = w.bimodule->left_act(cu, ys[a]).acted(dv);
        const auto lhs = w.pi_of(moved);
        const auto rhs = act_u.compose(w.maps[a]).compose(act_v);
        action = std::max(action, rel((lhs - rhs).norm(), lhs.norm(), rhs.norm()));
      }
    }
  }
  cert.record("bimodule-action", action);
  return cert;
}

/// Every representation is equivalent to itself over the trivial
/// bimodule, witnessed by its own action.
inline SMEWitness witness_reflexive(const Representation& rep,
                                    const Tolerances& tt = {}) {
  auto y0 = trivial_bimodule(rep.alg, tt);
  const Mat basis = y0->carrier()->basis();
  std::vector<ModuleMap> maps;
  for (Eigen::Index a = 0; a < basis.cols(); ++a)
    maps.push_back(rep.act(element_from_vec(y0->carrier(), Vec(basis.col(a))).entry(0)));
  return {rep, rep, y0, std::move(maps)};
}

/// Flip a witness across the conjugate bimodule: pi_{Y~}(y~) = pi_Y(y)*.
inline SMEWitness witness_dual(const SMEWitness& w, const DualBimodule& dual) {
  require(dual.original == w.bimodule, "shape-mismatch",
          "conjugate of a different bimodule");
  const Mat basis = dual.dual->carrier()->basis();
  std::vector<ModuleMap> maps;
  for (Eigen::Index a = 0; a < basis.cols(); ++a) {
    const auto t = element_from_vec(dual.dual->carrier(), Vec(basis.col(a)));
    maps.push_back(w.pi_of(dual.untilde_of(t)).adjoint());
  }
  return {w.rep2, w.rep1, dual.dual, std::move(maps)};
}

inline SMEWitness witness_dual(const SMEWitness& w, const Tolerances& tt = {}) {
  return witness_dual(w, dual_bimodule(w.bimodule, tt));
}

/// Chaining across a shared middle representation:
/// pi_{Y(x)W}(y (x) w) = pi_Y(y) pi_W(w).
struct ComposedWitness {
  SMEWitness witness;
  TensorBimodule bimodule;
};

inline ComposedWitness witness_compose(const SMEWitness& w1, const SMEWitness& w2,
                                       const Tolerances& tt = {}) {
  require(same_representation(w1.rep2, w2.rep1, tt.tol), "shape-mismatch",
          "composition needs identical middle representations");
  ComposedWitness out;
  out.bimodule = bimodule_tensor(w1.bimodule, w2.bimodule, tt);
  const Mat basis = out.bimodule.bimodule->carrier()->basis();
  const int rr = static_cast<int>(out.bimodule.tensor.basis_right.cols());
  std::vector<ModuleMap> maps;
  for (Eigen::Index mu = 0; mu < basis.cols(); ++mu) {
    const Vec amb = out.bimodule.tensor.real.bwd * basis.col(mu);
    auto m = zero_map(w2.rep2.space, w1.rep1.space);
    for (Eigen::Index a = 0; a * rr < amb.size(); ++a)
      for (int b = 0; b < rr; ++b) {
        const cplx cc = amb(a * rr + b);
        if (cc != cplx(0.0)) m = m + w1.maps[a].compose(w2.maps[b]) * cc;
      }
    maps.push_back(std::move(m));
  }
  out.witness = {w1.rep1, w2.rep2, out.bimodule.bimodule, std::move(maps)};
  return out;
}

/// Unitarily conjugate representations are equivalent over the trivial
/// bimodule: pi2 = Ad(u) pi1 gives pi_{Y0}(y) = pi1(y) u*.
inline SMEWitness witness_from_unitary(const Representation& r1,
                                       const Representation& r2, const ModuleMap& u,
                                       const Tolerances& tt = {}) {
  require(same_algebra(r1.alg, r2.alg), "shape-mismatch",
          "representations of different algebras");
  require(same_module(u.source(), r1.space) && same_module(u.target(), r2.space),
          "shape-mismatch", "unitary must map the first space onto the second");
  const double udef = std::max(
      (u.adjoint().compose(u) - identity_map(r1.space)).norm(),
      (u.compose(u.adjoint()) - identity_map(r2.space)).norm());
  if (udef > tt.tol) throw Error("not-unitary", "transport map is not unitary");
  for (int w = 0; w < r1.alg->vs_dim(); ++w) {
    const double d =
        (r2.table[w] - u.compose(r1.table[w]).compose(u.adjoint())).norm();
    if (d > tt.tol * std::max(1.0, r2.table[w].norm()))
      throw Error("not-intertwining", "unitary does not conjugate the actions");
  }
  auto y0 = trivial_bimodule(r1.alg, tt);
  const Mat basis = y0->carrier()->basis();
  std::vector<ModuleMap> maps;
  for (Eigen::Index a = 0; a < basis.cols(); ++a) {
    const auto e = element_from_vec(y0->carrier(), Vec(basis.col(a))).entry(0);
    maps.push_back(r1.act(e).compose(u.adjoint()));
  }
  return {r1, r2, y0, std::move(maps)};
}

/// Representation induced along Y: C acts on Y (x)_D F by moving the
/// left leg, and f -> y (x) f witnesses the equivalence with pi_D.
struct InducedRepresentation {
  Representation rep;
  SMEWitness witness;
  InteriorTensor tensor;
};

inline InducedRepresentation induce_representation(const Representation& rep,
                                                   const BimodulePtr& y,
                                                   const Tolerances& tt = {}) {
  require(same_algebra(rep.alg, y->right()), "shape-mismatch",
          "induction needs a bimodule ending at the representation's algebra");
  InducedRepresentation out;
  out.tensor = interior_tensor(y->carrier(), y->right(), rep.table, rep.space, tt);
  const Mat& bl = out.tensor.basis_left;
  const int rr = static_cast<int>(out.tensor.basis_right.cols());
  std::vector<ModuleMap> table;
  for (int u = 0; u < y->left()->vs_dim(); ++u) {
    const Mat al = bl.adjoint() * y->action_table()[u].vec_action() * bl;
    table.push_back(map_from_vec_action(
        out.tensor.module(), out.tensor.module(),
        Mat(out.tensor.real.fwd * detail::kron_identity_right(al, rr) *
            out.tensor.real.bwd)));
  }
  out.rep = Representation{y->left(), out.tensor.module(), std::move(table)};

  const Mat basis = y->carrier()->basis();
  std::vector<ModuleMap> maps;
  for (Eigen::Index a = 0; a < basis.cols(); ++a)
    maps.push_back(
        out.tensor.embed_map(element_from_vec(y->carrier(), Vec(basis.col(a)))));
  out.witness = SMEWitness{out.rep, rep, y, std::move(maps)};
  return out;
}

/// Base change F -> F (x)_B Z along a bimodule Z out of the base: the
/// algebra action rides on the left leg.
struct TensorRepresentation {
  Representation rep;
  InteriorTensor tensor;
};

inline TensorRepresentation tensor_representation(const Representation& rep,
                                                  const BimodulePtr& z,
                                                  const Tolerances& tt = {}) {
  require(same_algebra(rep.space->base(), z->left()), "shape-mismatch",
          "base change needs a bimodule starting at the module's base");
  TensorRepresentation out;
  out.tensor =
      interior_tensor(rep.space, z->left(), z->action_table(), z->carrier(), tt);
  const Mat& bl = out.tensor.basis_left;
  const int rr = static_cast<int>(out.tensor.basis_right.cols());
  std::vector<ModuleMap> table;
  for (int u = 0; u < rep.alg->vs_dim(); ++u) {
    const Mat al = bl.adjoint() * rep.table[u].vec_action() * bl;
    table.push_back(map_from_vec_action(
        out.tensor.module(), out.tensor.module(),
        Mat(out.tensor.real.fwd * detail::kron_identity_right(al, rr) *
            out.tensor.real.bwd)));
  }
  out.rep = Representation{rep.alg, out.tensor.module(), std::move(table)};
  return out;
}

/// Base change of a whole witness: pi_Y(y) (x) id_Z.
struct TensoredWitness {
  SMEWitness witness;
  TensorRepresentation left, right;
};

inline TensoredWitness witness_tensor(const SMEWitness& w, const BimodulePtr& z,
                                      const Tolerances& tt = {}) {
  TensoredWitness out;
  out.left = tensor_representation(w.rep1, z, tt);
  out.right = tensor_representation(w.rep2, z, tt);
  const int rz = static_cast<int>(out.left.tensor.basis_right.cols());
  std::vector<ModuleMap> maps;
  for (const auto& m : w.maps) {
    const Mat a = out.left.tensor.basis_left.adjoint() * m.vec_action() *
                  out.right.tensor.basis_left;
    maps.push_back(map_from_vec_action(
        out.right.tensor.module(), out.left.tensor.module(),
        Mat(out.left.tensor.real.fwd * detail::kron_identity_right(a, rz) *
            out.right.tensor.real.bwd)));
  }
  out.witness = SMEWitness{out.left.rep, out.right.rep, w.bimodule, std::move(maps)};
  return out;
}

namespace detail {

/// Shared assembly for the roundtrip collapse maps.  `pair(g, b)` is
/// the base-algebra element contracted between the middle leg g and
/// the last leg b; the returned matrix sends vec(E (x) M1 (x) M2)
/// coordinates to vec(E).
template <typename PairFn>
Mat roundtrip_action(const Representation& rep, const TensorRepresentation& t1,
                     const TensorRepresentation& t2, PairFn&& pair) {
  const auto& e_mod = rep.space;
  const Mat basis_e = e_mod->basis();
  const int re = static_cast<int>(basis_e.cols());
  const int r1 = static_cast<int>(t1.tensor.basis_right.cols());
  const int rr2 = static_cast<int>(t2.tensor.basis_right.cols());
  const int dim1 = static_cast<int>(t2.tensor.basis_left.cols());
  const Mat c1 = t1.tensor.real.bwd * t2.tensor.basis_left;

  Mat amb = Mat::Zero(e_mod->vec_dim(), static_cast<Eigen::Index>(dim1) * rr2);
  for (int b = 0; b < rr2; ++b) {
    Mat pb(e_mod->vec_dim(), static_cast<Eigen::Index>(re) * r1);
    for (int g = 0; g < r1; ++g) {
      const Mat ract = right_action_matrix(e_mod, pair(g, b));
      for (int a = 0; a < re; ++a) pb.col(a * r1 + g) = ract * basis_e.col(a);
    }
    const Mat gb = pb * c1;
    for (int mu = 0; mu < dim1; ++mu) amb.col(mu * rr2 + b) = gb.col(mu);
  }
  return amb * t2.tensor.real.bwd;
}

}  // namespace detail

/// Tensoring with Z~ and back with Z collapses to the original
/// representation: e (x) z~ (x) z1 -> pi(y)(e . <z, z1>).
struct RoundtripWitness {
  SMEWitness witness;
  DualBimodule dual;
  TensorRepresentation first, second;
};

inline RoundtripWitness witness_roundtrip(const Representation& rep,
                                          const BimodulePtr& z,
                                          const Tolerances& tt = {}) {
  require(same_algebra(rep.space->base(), z->right()), "shape-mismatch",
          "roundtrip needs a bimodule ending at the module's base");
  RoundtripWitness out;
  out.dual = dual_bimodule(z, tt);
  out.first = tensor_representation(rep, out.dual.dual, tt);
  out.second = tensor_representation(out.first.rep, z, tt);

  const Mat zt = out.dual.dual->carrier()->basis();
  const Mat zc = z->carrier()->basis();
  auto pair = [&](int g, int b) {
    const auto zg = out.dual.untilde_of(
        element_from_vec(out.dual.dual->carrier(), Vec(zt.col(g))));
    return inner_product(zg, element_from_vec(z->carrier(), Vec(zc.col(b))));
  };
  const Mat base_action = detail::roundtrip_action(rep, out.first, out.second, pair);

  auto y0 = trivial_bimodule(rep.alg, tt);
  const Mat basis = y0->carrier()->basis();
  std::vector<ModuleMap> maps;
  for (Eigen::Index a = 0; a < basis.cols(); ++a) {
    const auto e = element_from_vec(y0->carrier(), Vec(basis.col(a))).entry(0);
    maps.push_back(map_from_vec_action(out.second.tensor.module(), rep.space,
                                       Mat(rep.act(e).vec_action() * base_action)));
  }
  out.witness = SMEWitness{rep, out.second.rep, y0, std::move(maps)};
  return out;
}

/// Mirror image of witness_roundtrip for a representation over the
/// bimodule's left algebra: tensor with Z first, then with Z~.
inline RoundtripWitness witness_roundtrip_back(const Representation& rep,
                                               const BimodulePtr& z,
                                               const DualBimodule& dual,
                                               const Tolerances& tt = {}) {
  require(same_algebra(rep.space->base(), z->left()), "shape-mismatch",
          "mirrored roundtrip needs a bimodule starting at the module's base");
  require(dual.original == z, "shape-mismatch", "conjugate of a different bimodule");
  RoundtripWitness out;
  out.dual = dual;
  out.first = tensor_representation(rep, z, tt);
  out.second = tensor_representation(out.first.rep, dual.dual, tt);

  const Mat zc = z->carrier()->basis();
  const Mat zt = dual.dual->carrier()->basis();
  auto pair = [&](int g, int b) {
    const auto tg = dual.tilde_of(element_from_vec(z->carrier(), Vec(zc.col(g))));
    return inner_product(tg, element_from_vec(dual.dual->carrier(), Vec(zt.col(b))));
  };
  const Mat base_action = detail::roundtrip_action(rep, out.first, out.second, pair);

  auto y0 = trivial_bimodule(rep.alg, tt);
  const Mat basis = y0->carrier()->basis();
  std::vector<ModuleMap> maps;
  for (Eigen::Index a = 0; a < basis.cols(); ++a) {
    const auto e = element_from_vec(y0->carrier(), Vec(basis.col(a))).entry(0);
    maps.push_back(map_from_vec_action(out.second.tensor.module(), rep.space,
                                       Mat(rep.act(e).vec_action() * base_action)));
  }
  out.witness = SMEWitness{rep, out.second.rep, y0, std::move(maps)};
  return out;
}

}  // namespace morita
