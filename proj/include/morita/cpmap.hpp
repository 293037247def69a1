#pragma once

// Completely positive maps from a C*-algebra into the adjointable
// operators of a right Hilbert module, with the machinery built on top
// of them: the dilation that turns a CP map into a compression of a
// representation, the uniqueness unitary between two minimal dilations,
// equivalence of CP maps certified through their dilations, induction
// of CP maps across an equivalence bimodule, base change, and the
// two-stage transfer together with its roundtrip certificate.

#include <utility>
#include <vector>

#include "morita/representation.hpp"

namespace morita {

struct CPMap {
  AlgebraPtr source;
  ModuleRef space;
  std::vector<ModuleMap> table;

  ModuleMap apply(const AlgebraElement& c) const {
    require(same_algebra(c.algebra(), source), "shape-mismatch",
            "applying a map to an element of a different algebra");
    auto out = zero_map(space, space);
    const Vec v = c.vec();
    for (int w = 0; w < source->vs_dim(); ++w)
      if (v(w) != cplx(0.0)) out = out + table[w] * v(w);
    return out;
  }
};

/// Complete positivity for maps off a direct sum of matrix blocks is
/// equivalent to positivity of the single block Gram [phi(c_a* c_b)]
/// over the full matrix-unit basis, assembled in the faithful
/// representation of the operators.
inline Certificate verify_cp_map(const CPMap& phi, const Tolerances& tt = {}) {
  const int vs = phi.source->vs_dim();
  require(static_cast<int>(phi.table.size()) == vs, "invalid-shape",
          "map table must cover the source basis");
  for (const auto& t : phi.table)
    require(same_module(t.source(), phi.space) && same_module(t.target(), phi.space),
            "shape-mismatch", "map values must act on the given module");

  Certificate cert("cp-map", tt.tol);
  double herm = 0.0, scale = 1.0;
  for (int w = 0; w < vs; ++w) {
    scale = std::max(scale, phi.table[w].norm());
    herm = std::max(herm, (phi.apply(basis_element(phi.source, w).adjoint()) -
                           phi.table[w].adjoint())
                              .norm());
  }
  cert.record("hermitian", herm / scale);

  const Eigen::Index rd = phi.table.empty() ? 0 : phi.table[0].rep_action().rows();
  Mat gram(vs * rd, vs * rd);
  for (int a = 0; a < vs; ++a)
    for (int b = 0; b < vs; ++b) {
      const auto prod =
          basis_element(phi.source, a).adjoint() * basis_element(phi.source, b);
      gram.block(a * rd, b * rd, rd, rd) = phi.apply(prod).rep_action();
    }
  auto [lam, u] = detail::hermitian_eig(gram);
  const double low = lam.size() ? lam(0) : 0.0;
  const double top = lam.size() ? lam(lam.size() - 1) : 0.0;
  cert.record("completely-positive", std::max(0.0, -low) / std::max(top, 1.0));
  return cert;
}

inline CPMap make_cp_map(AlgebraPtr source, ModuleRef space,
                         std::vector<ModuleMap> table, const Tolerances& tt = {}) {
  CPMap phi{std::move(source), std::move(space), std::move(table)};
  auto cert = verify_cp_map(phi, tt);
  if (!cert.passed())
    throw Error("not-cp", "map is not completely positive", cert);
  return phi;
}

/// Minimal dilation of a CP map psi: D -> B_B(F).  The module F_psi is
/// the realized quotient of D (.) F under <d(x)f, d'(x)f'> =
/// <f, psi(d*d')f'>, pi acts by left multiplication on the first leg,
/// and V embeds f as [1(x)f].  Compression recovers psi, and the
/// generators span, so the dilation is minimal.
struct KSGNSDilation {
  CPMap of;
  Representation rep;
  ModuleMap v;
  Realization real;
  Mat f_basis;
  Certificate cert;

  const ModuleRef& module() const { return real.module; }

  /// [d (x) f] as an element of the dilation module.
  ModuleElement embed(const AlgebraElement& d, const ModuleElement& f) const {
    const Vec dc = d.vec();
    const Vec fc = f_basis.adjoint() * f.vec();
    Vec amb = Vec::Zero(dc.size() * fc.size());
    for (Eigen::Index i = 0; i < dc.size(); ++i)
      amb.segment(i * fc.size(), fc.size()) = dc(i) * fc;
    return real.to_module(amb);
  }
};

inline KSGNSDilation ksgns(const CPMap& psi, const Tolerances& tt = {}) {
  {
    auto cp = verify_cp_map(psi, tt);
    if (!cp.passed()) throw Error("not-cp", "dilation needs a completely positive map", cp);
  }
  const auto& d = psi.source;
  const auto& f = psi.space;
  const auto& base = f->base();
  const int vsd = d->vs_dim();
  const Mat fb = f->basis();
  const int rf = static_cast<int>(fb.cols());

  AbstractModule am(base, vsd * rf);
  for (int w = 0; w < base->vs_dim(); ++w) {
    const Mat rhat = right_action_matrix(f, basis_element(base, w));
    const Mat af = fb.adjoint() * rhat * fb;
    for (int a = 0; a < vsd; ++a) am.action[w].block(a * rf, a * rf, rf, rf) = af;
  }

  std::vector<ModuleElement> fs;
  for (int b = 0; b < rf; ++b) fs.push_back(element_from_vec(f, Vec(fb.col(b))));
  for (int w = 0; w < vsd; ++w)
    for (int v = 0; v < vsd; ++v) {
      const auto mid = basis_element(d, w).adjoint() * basis_element(d, v);
      const auto pmap = psi.apply(mid);
      for (int c = 0; c < rf; ++c) {
        const auto pf = pmap.apply(fs[c]);
        for (int b = 0; b < rf; ++b)
          am.set_sip(w * rf + b, v * rf + c, inner_product(fs[b], pf));
      }
    }

  KSGNSDilation out;
  out.of = psi;
  out.f_basis = fb;
  out.real = realize(am, tt);

  std::vector<ModuleMap> table;
  for (int u = 0; u < vsd; ++u) {
    const Mat amb =
        detail::kron_identity_right(left_mult_matrix(basis_element(d, u)), rf);
    table.push_back(map_from_vec_action(out.real.module, out.real.module,
                                        Mat(out.real.fwd * amb * out.real.bwd)));
  }
  out.rep = Representation{d, out.real.module, std::move(table)};

  Mat k = Mat::Zero(static_cast<Eigen::Index>(vsd) * rf, f->vec_dim());
  const Vec one = unit_element(d).vec();
  for (int w = 0; w < vsd; ++w)
    if (one(w) != cplx(0.0)) k.block(w * rf, 0, rf, f->vec_dim()) = one(w) * fb.adjoint();
  out.v = map_from_vec_action(f, out.real.module, Mat(out.real.fwd * k));

  Certificate cert("ksgns", tt.tol);
  const auto rc = verify_representation(out.rep, tt);
  cert.record("representation",
              std::max({rc.residual("unital"), rc.residual("multiplicative"),
                        rc.residual("star")}));
  cert.record("nondegenerate", rc.residual("nondegenerate"));

  double dil = 0.0;
  for (int u = 0; u < vsd; ++u) {
    const auto back = out.v.adjoint().compose(out.rep.table[u]).compose(out.v);
    dil = std::max(dil, (psi.table[u] - back).norm() /
                            std::max(1.0, psi.table[u].norm()));
  }
  cert.record("dilation", dil);

  const Mat vfb = out.v.vec_action() * fb;
  Mat span(out.real.module->vec_dim(), static_cast<Eigen::Index>(vsd) * rf);
  for (int w = 0; w < vsd; ++w)
    span.block(0, static_cast<Eigen::Index>(w) * rf, span.rows(), rf) =
        out.rep.table[w].vec_action() * vfb;
  cert.record("minimality",
              static_cast<double>(out.real.module->complex_dim() -
                                  detail::rank_of_span(span, tt.rank_cutoff)));
  out.cert = cert;
  return out;
}

/// Uniqueness unitary of the minimal dilation: maps [d (x) f] to
/// pi2(d) w2 f.  The second dilation (pi2 on its space, w2 : F -> space)
/// must dilate the same map and be minimal, otherwise the assignment is
/// not even well defined on the quotient.
inline ModuleMap ksgns_unitary(const KSGNSDilation& d1, const Representation& rep2,
                               const ModuleMap& w2, const Tolerances& tt = {}) {
  const auto& psi = d1.of;
  require(same_algebra(rep2.alg, psi.source), "shape-mismatch",
          "second dilation represents a different algebra");
  require(same_module(w2.source(), psi.space) && same_module(w2.target(), rep2.space),
          "shape-mismatch", "second dilation map must go from the map's module");

  double dil = 0.0;
  for (int u = 0; u < psi.source->vs_dim(); ++u) {
    const auto back = w2.adjoint().compose(rep2.table[u]).compose(w2);
    dil = std::max(dil,
                   (psi.table[u] - back).norm() / std::max(1.0, psi.table[u].norm()));
  }
  if (dil > tt.tol)
    throw Error("not-a-dilation", "the data does not dilate the same map");

  const int vsd = psi.source->vs_dim();
  const int rf = static_cast<int>(d1.f_basis.cols());
  const Mat wfb = w2.vec_action() * d1.f_basis;
  Mat amb(rep2.space->vec_dim(), static_cast<Eigen::Index>(vsd) * rf);
  for (int w = 0; w < vsd; ++w)
    amb.block(0, static_cast<Eigen::Index>(w) * rf, amb.rows(), rf) =
        rep2.table[w].vec_action() * wfb;

  if (detail::rank_of_span(amb, tt.rank_cutoff) != rep2.space->complex_dim())
    throw Error("rank-mismatch", "second dilation is not minimal");

  return map_from_vec_action(d1.real.module, rep2.space, Mat(amb * d1.real.bwd));
}

/// Equivalence of CP maps through their minimal dilations: wrap the
/// supplied table as a witness between the two dilation representations
/// and verify it.
inline Certificate verify_cp_sme(const CPMap& phi, const CPMap& psi,
                                 const BimodulePtr& y,
                                 const std::vector<ModuleMap>& pi_y,
                                 const Tolerances& tt = {}) {
  require(same_algebra(phi.space->base(), psi.space->base()), "shape-mismatch",
          "maps must land over the same base algebra");
  auto d1 = ksgns(phi, tt);
  auto d2 = ksgns(psi, tt);
  return verify_sme_witness(SMEWitness{d1.rep, d2.rep, y, pi_y}, tt);
}

/// CP map induced across a bimodule, with the explicit unitary that
/// identifies its dilation with Y (x) F_psi and the witness extracted
/// from it.
struct InducedCP {
  CPMap phi;                      // on F (x) C^n over the same base
  KSGNSDilation dilation;         // of phi
  KSGNSDilation source_dilation;  // of the map that was induced
  InducedRepresentation induced;  // action on Y (x) F_psi
  ModuleMap w;                    // F (x) C^n -> Y (x) F_psi, dilates phi
  ModuleMap u;                    // unitary F_phi -> Y (x) F_psi
  SMEWitness witness;             // between the two dilation representations
};

inline InducedCP induce_cp_map(const CPMap& psi, const BimodulePtr& y,
                               const std::vector<ModuleElement>& basis,
                               const Tolerances& tt = {}) {
  require(same_algebra(psi.source, y->right()), "shape-mismatch",
          "induction needs a bimodule ending at the map's source");
  require(!basis.empty(), "invalid-shape", "empty generating family");
  for (const auto& x : basis)
    require(same_module(x.module(), y->carrier()), "shape-mismatch",
            "generating family must live in the bimodule");

  // The family must generate the carrier over the left algebra; that
  // span condition is exactly what makes the comparison with Y (x) F_psi
  // surjective, hence unitary.
  const auto& c = y->left();
  const int n = static_cast<int>(basis.size());
  Mat span(y->carrier()->vec_dim(), static_cast<Eigen::Index>(c->vs_dim()) * n);
  for (int u = 0; u < c->vs_dim(); ++u)
    for (int i = 0; i < n; ++i)
      span.col(static_cast<Eigen::Index>(u) * n + i) =
          y->left_act(basis_element(c, u), basis[i]).vec();
  if (detail::rank_of_span(span, tt.rank_cutoff) != y->carrier()->complex_dim())
    throw Error("not-a-left-basis",
                "the family does not generate the bimodule over its left algebra");

  const auto& f = psi.space;
  const auto& base = f->base();
  const int m = f->ambient_rank();

  // F (x) C^n as n block-diagonal copies of F, with the slot injections.
  std::vector<std::vector<AlgebraElement>> pn(
      static_cast<size_t>(n) * m,
      std::vector<AlgebraElement>(static_cast<size_t>(n) * m, zero_element(base)));
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < m; ++r)
      for (int s = 0; s < m; ++s) pn[i * m + r][i * m + s] = f->p(r, s);
  auto fn = make_module(base, n * m, std::move(pn));

  std::vector<ModuleMap> inj;
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<AlgebraElement>> e(
        static_cast<size_t>(n) * m, std::vector<AlgebraElement>(m, zero_element(base)));
    for (int r = 0; r < m; ++r)
      for (int s = 0; s < m; ++s) e[i * m + r][s] = f->p(r, s);
    inj.push_back(ModuleMap(f, fn, std::move(e)));
  }

  std::vector<ModuleMap> table;
  for (int u = 0; u < c->vs_dim(); ++u) {
    auto out = zero_map(fn, fn);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const auto mid =
            inner_product(basis[i], y->left_act(basis_element(c, u), basis[j]));
        out = out + inj[i].compose(psi.apply(mid)).compose(inj[j].adjoint());
      }
    table.push_back(std::move(out));
  }

  InducedCP out;
  out.phi = make_cp_map(c, fn, std::move(table), tt);
  out.source_dilation = ksgns(psi, tt);
  out.induced = induce_representation(out.source_dilation.rep, y, tt);

  out.w = zero_map(fn, out.induced.rep.space);
  for (int i = 0; i < n; ++i)
    out.w = out.w + out.induced.tensor.embed_map(basis[i])
                        .compose(out.source_dilation.v)
                        .compose(inj[i].adjoint());

  out.dilation = ksgns(out.phi, tt);
  out.u = ksgns_unitary(out.dilation, out.induced.rep, out.w, tt);

  std::vector<ModuleMap> maps;
  for (const auto& lemma_map : out.induced.witness.maps)
    maps.push_back(out.u.adjoint().compose(lemma_map));
  out.witness = SMEWitness{out.dilation.rep, out.source_dilation.rep, y, std::move(maps)};
  return out;
}

/// Base change of a CP map: phi^Z(c) = phi(c) (x) id_Z on F (x) Z, and
/// the already-minimal dilation obtained by tensoring the dilation of
/// phi with Z instead of dilating from scratch.
struct TensorCP {
  CPMap phi;                       // phi^Z over the new base
  InteriorTensor space;            // F (x) Z, its domain
  TensorRepresentation dilation_rep;  // dilation representation on F_phi (x) Z
  ModuleMap v;                     // V (x) id_Z
  Certificate cert;
};

inline TensorCP tensor_cp_map(const CPMap& phi, const BimodulePtr& z,
                              const Tolerances& tt = {}) {
  require(same_algebra(phi.space->base(), z->left()), "shape-mismatch",
          "base change needs a bimodule starting at the map's base");
  TensorCP out;
  out.space =
      interior_tensor(phi.space, z->left(), z->action_table(), z->carrier(), tt);
  const Mat fb = out.space.basis_left;
  const int rz = static_cast<int>(out.space.basis_right.cols());

  std::vector<ModuleMap> table;
  for (int u = 0; u < phi.source->vs_dim(); ++u) {
    const Mat al = fb.adjoint() * phi.table[u].vec_action() * fb;
    table.push_back(map_from_vec_action(
        out.space.module(), out.space.module(),
        Mat(out.space.real.fwd * detail::kron_identity_right(al, rz) *
            out.space.real.bwd)));
  }
  out.phi = make_cp_map(phi.source, out.space.module(), std::move(table), tt);

  auto dphi = ksgns(phi, tt);
  out.dilation_rep = tensor_representation(dphi.rep, z, tt);
  const Mat a = out.dilation_rep.tensor.basis_left.adjoint() * dphi.v.vec_action() * fb;
  out.v = map_from_vec_action(
      out.space.module(), out.dilation_rep.tensor.module(),
      Mat(out.dilation_rep.tensor.real.fwd * detail::kron_identity_right(a, rz) *
          out.space.real.bwd));

  Certificate cert("tensored-dilation", tt.tol);
  const auto rc = verify_representation(out.dilation_rep.rep, tt);
  cert.record("representation",
              std::max({rc.residual("unital"), rc.residual("multiplicative"),
                        rc.residual("star")}));
  cert.record("nondegenerate", rc.residual("nondegenerate"));

  double dil = 0.0;
  for (int u = 0; u < phi.source->vs_dim(); ++u) {
    const auto back =
        out.v.adjoint().compose(out.dilation_rep.rep.table[u]).compose(out.v);
    dil = std::max(dil, (out.phi.table[u] - back).norm() /
                            std::max(1.0, out.phi.table[u].norm()));
  }
  cert.record("dilation", dil);

  const Mat xb = out.space.module()->basis();
  const Mat vxb = out.v.vec_action() * xb;
  Mat span(out.dilation_rep.rep.space->vec_dim(),
           static_cast<Eigen::Index>(phi.source->vs_dim()) * xb.cols());
  for (int w = 0; w < phi.source->vs_dim(); ++w)
    span.block(0, w * xb.cols(), span.rows(), xb.cols()) =
        out.dilation_rep.rep.table[w].vec_action() * vxb;
  cert.record("minimality",
              static_cast<double>(out.dilation_rep.rep.space->complex_dim() -
                                  detail::rank_of_span(span, tt.rank_cutoff)));
  out.cert = cert;
  return out;
}

/// Two-stage transfer: induce across Y, then change base along Z.
struct TransferredCP {
  InducedCP induced;
  TensorCP tensored;
  Certificate cert;

  const CPMap& result() const { return tensored.phi; }
};

inline TransferredCP transfer_cp_class(const CPMap& psi, const BimodulePtr& y,
                                       const BimodulePtr& z,
                                       const Tolerances& tt = {}) {
  TransferredCP out{induce_cp_map(psi, y, left_basis(y, tt), tt), {}, {}};
  out.tensored = tensor_cp_map(out.induced.phi, z, tt);

  Certificate cert("transfer", tt.tol);
  cert.record("induced-witness", verify_sme_witness(out.induced.witness, tt).worst());
  cert.record("dilation", out.tensored.cert.residual("dilation"));
  cert.record("minimality", out.tensored.cert.residual("minimality"));
  out.cert = cert;
  return out;
}

/// Transfer forward along (Y, Z), back along the conjugates, and chain
/// five witnesses into one certificate that the roundtrip lands in the
/// class of the original map.
struct TransferRoundtrip {
  TransferredCP forward;
  TransferredCP back;
  SMEWitness witness;  // between ksgns(back) and ksgns(psi)
  Certificate cert;
};

inline TransferRoundtrip transfer_roundtrip(const CPMap& psi, const BimodulePtr& y,
                                            const BimodulePtr& z,
                                            const Tolerances& tt = {}) {
  TransferRoundtrip out;
  out.forward = transfer_cp_class(psi, y, z, tt);
  auto ydual = dual_bimodule(y, tt);
  auto zdual = dual_bimodule(z, tt);

  out.back.induced = induce_cp_map(out.forward.tensored.phi, ydual.dual,
                                   left_basis(ydual.dual, tt), tt);
  out.back.tensored = tensor_cp_map(out.back.induced.phi, zdual.dual, tt);
  {
    Certificate cert("transfer", tt.tol);
    cert.record("induced-witness",
                verify_sme_witness(out.back.induced.witness, tt).worst());
    cert.record("dilation", out.back.tensored.cert.residual("dilation"));
    cert.record("minimality", out.back.tensored.cert.residual("minimality"));
    out.back.cert = cert;
  }

  const auto& ind1 = out.forward.induced;  // F_phi1 ~ F_psi over Y
  const auto& t1 = out.forward.tensored;   // phi' = phi1^Z
  const auto& ind2 = out.back.induced;     // F_psi2 ~ F_phi' over Y~
  const auto& t2 = out.back.tensored;      // psi' = psi2^Z~

  // Identify the from-scratch dilations of phi' and psi' with the
  // tensored ones.
  const auto& dphi1 = ind2.source_dilation;  // ksgns(phi')
  auto u1 = ksgns_unitary(dphi1, t1.dilation_rep.rep, t1.v, tt);
  auto w_u1 = witness_from_unitary(dphi1.rep, t1.dilation_rep.rep, u1, tt);

  auto dpsi1 = ksgns(t2.phi, tt);  // ksgns(psi')
  auto u2 = ksgns_unitary(dpsi1, t2.dilation_rep.rep, t2.v, tt);
  auto w_u2 = witness_from_unitary(dpsi1.rep, t2.dilation_rep.rep, u2, tt);

  // Tensor the stage witnesses down to the original base, undo the
  // double base change, then cross back over Y.
  auto c2 = witness_tensor(ind2.witness, zdual.dual, tt).witness;
  auto c3 = witness_tensor(w_u1, zdual.dual, tt).witness;
  auto rtb = witness_roundtrip_back(ind1.dilation.rep, z, zdual, tt);
  auto c4 = witness_dual(rtb.witness, tt);

  auto s1 = witness_compose(w_u2, c2, tt);
  auto s2 = witness_compose(s1.witness, c3, tt);
  auto s3 = witness_compose(s2.witness, c4, tt);
  auto s4 = witness_compose(s3.witness, ind1.witness, tt);

  out.witness = s4.witness;
  out.cert = verify_sme_witness(out.witness, tt);
  return out;
}

}  // namespace morita
