#pragma once

// GNS correspondences of completely positive maps.  An algebra-valued
// map phi: C -> A carries a C-A correspondence E_phi (the dilation
// module of phi acting on A itself); this header builds those
// correspondences, transports maps through corner isomorphisms
// A ~ B_B(X), and certifies the explicit isomorphisms relating
// E_phi (x)_A X, Y (x)_D E_psi and E_{phi_T}.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "morita/bimodule.hpp"
#include "morita/cpmap.hpp"
#include "morita/representation.hpp"

namespace morita {

/// Right Hilbert module over the right algebra together with a left
/// action of the left algebra by adjointable maps.
struct Correspondence {
  Representation action;

  const AlgebraPtr& left() const { return action.alg; }
  const AlgebraPtr& right() const { return action.space->base(); }
  const ModuleRef& module() const { return action.space; }
};

namespace detail {

inline void require_algebra_valued(const CPMap& phi) {
  require(phi.space->ambient_rank() == 1 &&
              (phi.space->p(0, 0) - unit_element(phi.space->base())).norm() <=
                  1e-9,
          "not-algebra-valued",
          "the map must act on the free rank-one module over its target");
}

}  // namespace detail

/// Map C -> A packaged as left multiplications on the module A.  Every
/// adjointable operator on the free rank-one module is of this form, so
/// the two pictures are interchangeable.
inline CPMap make_algebra_cp_map(const AlgebraPtr& c, const AlgebraPtr& a,
                                 const std::vector<AlgebraElement>& values) {
  require(static_cast<int>(values.size()) == c->vs_dim(), "invalid-shape",
          "one value per basis element of the source");
  auto f = free_module(a, 1);
  std::vector<ModuleMap> table;
  table.reserve(values.size());
  for (const auto& v : values) {
    require(same_algebra(v.algebra(), a), "shape-mismatch",
            "value outside the target algebra");
    table.push_back(ModuleMap(f, f, {{v}}));
  }
  return make_cp_map(c, f, std::move(table));
}

/// The element phi(x) of the target algebra.
inline AlgebraElement algebra_value(const CPMap& phi, const AlgebraElement& x) {
  detail::require_algebra_valued(phi);
  return phi.apply(x).entry(0, 0);
}

/// GNS correspondence of a cp map: the dilation module with its left
/// action.  For an algebra-valued map this is the quotient of C (.) A
/// under <c (x) a, c' (x) a'> = a* phi(c*c') a'.
struct GNSCorrespondence {
  CPMap map;
  KSGNSDilation dilation;
  Correspondence corr;

  const ModuleRef& module() const { return corr.module(); }
};

inline GNSCorrespondence gns_correspondence(const CPMap& phi,
                                            const Tolerances& tt = {}) {
  auto d = ksgns(phi, tt);
  Correspondence corr{d.rep};
  return {phi, std::move(d), std::move(corr)};
}

/// Transport an algebra-valued map through the corner isomorphism
/// T: A -> B_B(X), a |-> (x |-> a.x).  The result acts on the carrier
/// of X.
inline CPMap corner_transport(const CPMap& phi, const BimodulePtr& x,
                              const Tolerances& tt = {}) {
  detail::require_algebra_valued(phi);
  require(same_algebra(phi.space->base(), x->left()), "shape-mismatch",
          "corner transport needs a bimodule starting at the target algebra");
  std::vector<ModuleMap> table;
  table.reserve(phi.table.size());
  for (const auto& t : phi.table) table.push_back(x->act(t.entry(0, 0)));
  CPMap out{phi.source, x->carrier(), std::move(table)};
  const auto cert = verify_cp_map(out, tt);
  require(cert.passed(), "not-cp", "transported map fails complete positivity");
  return out;
}

/// Conditions of a correspondence isomorphism: the left actions
/// intertwine, inner products are preserved, and the map is onto.
/// Right-module linearity is structural for a matrix over the base.
inline Certificate verify_correspondence_iso(const Correspondence& src,
                                             const Correspondence& tgt,
                                             const ModuleMap& map,
                                             const Tolerances& tt = {}) {
  require(same_algebra(src.left(), tgt.left()), "shape-mismatch",
          "correspondences with different left algebras");
  require(same_algebra(src.right(), tgt.right()), "shape-mismatch",
          "correspondences with different right algebras");
  require(same_module(map.source(), src.module()) &&
              same_module(map.target(), tgt.module()),
          "shape-mismatch", "map endpoints do not match the correspondences");

  Certificate cert{"correspondence-iso", tt.tol};
  auto rel = [](double d, double lhs, double rhs) {
    return d / std::max({1.0, lhs, rhs});
  };

  double inter = 0.0;
  for (int w = 0; w < src.left()->vs_dim(); ++w) {
    const auto lhs = map.compose(src.action.table[w]);
    const auto rhs = tgt.action.table[w].compose(map);
    inter = std::max(inter, rel((lhs - rhs).norm(), lhs.norm(), rhs.norm()));
  }
  cert.record("intertwining", inter);

  const auto gram = map.adjoint().compose(map) - identity_map(src.module());
  cert.record("inner-products", rel(gram.norm(), map.norm() * map.norm(), 1.0));

  const Mat action = map.vec_action();
  const int rank = (action.rows() == 0 || action.cols() == 0)
                       ? 0
                       : detail::rank_of_span(action, tt.rank_cutoff);
  cert.record("onto",
              static_cast<double>(tgt.module()->complex_dim() - rank));
  return cert;
}

struct CorrespondenceIso {
  Correspondence source;
  Correspondence target;
  ModuleMap map;
  Certificate cert;
};

/// The isomorphism E_phi (x)_A X -> E_{phi_T} sending [c (x) a] (x) x to
/// [c (x) a.x], together with its frame-built inverse
/// [c (x) x] |-> sum_j [c (x) <x, v_j>_left] (x) v_j.
struct PsiIso {
  CorrespondenceIso iso;
  ModuleMap inverse;
  TensorRepresentation tensored;
  GNSCorrespondence base;
  GNSCorrespondence transported;
};

inline PsiIso psi_iso(const CPMap& phi, const BimodulePtr& x,
                      const Tolerances& tt = {}) {
  detail::require_algebra_valued(phi);
  require(same_algebra(phi.space->base(), x->left()), "shape-mismatch",
          "the bimodule must start at the target algebra");

  auto base = gns_correspondence(phi, tt);
  auto tensored = tensor_representation(base.dilation.rep, x, tt);
  auto transported = gns_correspondence(corner_transport(phi, x, tt), tt);

  const auto& a_alg = phi.space->base();
  const int vsc = phi.source->vs_dim();
  const Mat& bl = tensored.tensor.basis_left;
  const Mat& br = tensored.tensor.basis_right;
  const int ll = static_cast<int>(bl.cols());
  const int rr = static_cast<int>(br.cols());
  const Mat& fb = base.dilation.f_basis;
  const int rf = static_cast<int>(fb.cols());

  // Left multiplication of each complex basis element of A on the
  // coordinates of the carrier of X.
  std::vector<Mat> lact(rf);
  std::vector<AlgebraElement> felts;
  felts.reserve(rf);
  for (int b = 0; b < rf; ++b) {
    felts.push_back(element_from_vec(a_alg, Vec(fb.col(b))));
    lact[b] = br.adjoint() * x->act(felts.back()).vec_action() * br;
  }

  const Mat eamb = base.dilation.real.bwd * bl;
  Mat fwd_amb = Mat::Zero(vsc * rr, ll * rr);
  for (int i = 0; i < ll; ++i)
    for (int w = 0; w < vsc; ++w)
      for (int b = 0; b < rf; ++b) {
        const cplx coef = eamb(w * rf + b, i);
        if (coef == cplx(0.0)) continue;
        fwd_amb.block(w * rr, i * rr, rr, rr) += coef * lact[b];
      }
  auto iso_map = map_from_vec_action(
      tensored.tensor.module(), transported.module(),
      Mat(transported.dilation.real.fwd * fwd_amb * tensored.tensor.real.bwd));

  // Inverse through a frame v_j with sum_j <v_j, v_j> = 1 over the base:
  // then sum_j <x, v_j>_left . v_j = x for every x in the carrier.
  const auto frame = right_normalized_frame(x->carrier(), tt);
  Mat inv_amb = Mat::Zero(ll * rr, vsc * rr);
  for (int c = 0; c < rr; ++c) {
    const auto xc = element_from_vec(x->carrier(), Vec(br.col(c)));
    for (const auto& vj : frame) {
      const auto coeff = x->left_inner(xc, vj);
      const Vec fc = fb.adjoint() * coeff.vec();
      const Vec cj = br.adjoint() * vj.vec();
      for (int w = 0; w < vsc; ++w) {
        Vec amb_e = Vec::Zero(vsc * rf);
        amb_e.segment(w * rf, rf) = fc;
        const Vec ci = bl.adjoint() * (base.dilation.real.fwd * amb_e);
        for (int i = 0; i < ll; ++i)
          inv_amb.col(w * rr + c).segment(i * rr, rr) += ci(i) * cj;
      }
    }
  }
  auto inverse = map_from_vec_action(
      transported.module(), tensored.tensor.module(),
      Mat(tensored.tensor.real.fwd * inv_amb * transported.dilation.real.bwd));

  Correspondence src{tensored.rep};
  Correspondence tgt{transported.corr};
  auto cert = verify_correspondence_iso(src, tgt, iso_map, tt);
  const auto left = inverse.compose(iso_map) - identity_map(iso_map.source());
  const auto right = iso_map.compose(inverse) - identity_map(iso_map.target());
  cert.record("left-inverse", left.norm());
  cert.record("right-inverse", right.norm());

  return {{std::move(src), std::move(tgt), std::move(iso_map), std::move(cert)},
          std::move(inverse),
          std::move(tensored),
          std::move(base),
          std::move(transported)};
}

/// The isomorphism Y (x)_D E_psi -> E_phi attached to a strong Morita
/// witness: y (x) xi |-> pi_Y(y) xi.
struct PhiIso {
  CorrespondenceIso iso;
  InducedRepresentation induced;
};

inline PhiIso phi_iso(const SMEWitness& w, const Tolerances& tt = {}) {
  auto wc = verify_sme_witness(w, tt);
  if (!wc.passed())
    throw Error("failing-witness", "the data is not a strong Morita witness",
                wc);

  auto ind = induce_representation(w.rep2, w.bimodule, tt);
  const Mat& br = ind.tensor.basis_right;
  const int ll = static_cast<int>(ind.tensor.basis_left.cols());
  const int rr = static_cast<int>(br.cols());

  Mat amb(w.rep1.space->vec_dim(), ll * rr);
  for (int a = 0; a < ll; ++a)
    amb.block(0, a * rr, amb.rows(), rr) = w.maps[a].vec_action() * br;
  auto map = map_from_vec_action(ind.tensor.module(), w.rep1.space,
                                 Mat(amb * ind.tensor.real.bwd));

  Correspondence src{ind.rep};
  Correspondence tgt{w.rep1};
  auto cert = verify_correspondence_iso(src, tgt, map, tt);
  return {{std::move(src), std::move(tgt), std::move(map), std::move(cert)},
          std::move(ind)};
}

/// Recover a witness from a correspondence isomorphism out of
/// Y (x)_D E_psi: the maps are the images of the embeddings of Y.
inline SMEWitness witness_from_iso(const CorrespondenceIso& iso,
                                   const BimodulePtr& y,
                                   const Representation& rep2,
                                   const Tolerances& tt = {}) {
  if (!iso.cert.passed())
    throw Error("failing-iso", "the map is not a correspondence isomorphism",
                iso.cert);
  auto ind = induce_representation(rep2, y, tt);
  require(same_module(iso.map.source(), ind.tensor.module()), "shape-mismatch",
          "iso source is not the module induced from the given data");
  std::vector<ModuleMap> maps;
  maps.reserve(ind.witness.maps.size());
  for (const auto& m : ind.witness.maps) maps.push_back(iso.map.compose(m));
  return {iso.target.action, rep2, y, std::move(maps)};
}

/// Strong Morita equivalence of GNS correspondences: a correspondence
/// isomorphism E_phi (x)_A X -> Y (x)_D E_psi across the two bimodules.
inline Certificate verify_correspondence_sme(const Correspondence& cphi,
                                             const Correspondence& cpsi,
                                             const BimodulePtr& y,
                                             const BimodulePtr& x,
                                             const ModuleMap& map,
                                             const Tolerances& tt = {}) {
  require(same_algebra(cphi.left(), y->left()) &&
              same_algebra(cpsi.left(), y->right()),
          "shape-mismatch", "the first bimodule must join the left algebras");
  require(same_algebra(cphi.right(), x->left()) &&
              same_algebra(cpsi.right(), x->right()),
          "shape-mismatch", "the second bimodule must join the right algebras");

  auto lt = tensor_representation(cphi.action, x, tt);
  auto rt = induce_representation(cpsi.action, y, tt);
  auto cert =
      verify_correspondence_iso(Correspondence{lt.rep}, Correspondence{rt.rep},
                                map, tt);
  cert.name = "correspondence-sme";
  return cert;
}

/// End-to-end comparison: induce psi across Y, realize the induced map
/// as an algebra-valued map through the column bimodule, and certify
/// that the two GNS correspondences are strongly Morita equivalent.
struct GNSPipeline {
  InducedCP induced;
  BimodulePtr x;
  CPMap phi;
  PsiIso psi;
  PhiIso phi1;
  ModuleMap equivalence;
  SMEWitness recovered;
  Certificate cert;
};

inline GNSPipeline example_gns5(const CPMap& psi, const BimodulePtr& y,
                                const std::vector<ModuleElement>& basis,
                                const Tolerances& tt = {}) {
  detail::require_algebra_valued(psi);
  require(same_algebra(psi.source, y->right()), "shape-mismatch",
          "the bimodule must end at the source of the map");
  const auto& b = psi.space->base();

  auto ind = induce_cp_map(psi, y, basis, tt);
  auto x = matrix_column_bimodule(b, static_cast<int>(basis.size()), tt);
  require(same_module(x->carrier(), ind.phi.space), "shape-mismatch",
          "column bimodule does not match the induced module");

  // Pull the induced map back through the corner: phi = T^{-1} . phi_T.
  std::vector<AlgebraElement> values;
  double transport = 0.0;
  for (const auto& t : ind.phi.table) {
    auto a = x->operator_preimage(t);
    transport = std::max(transport,
                         (x->act(a) - t).norm() / std::max(1.0, t.norm()));
    values.push_back(std::move(a));
  }
  auto phi = make_algebra_cp_map(y->left(), x->left(), values);

  auto psi_data = psi_iso(phi, x, tt);
  auto phi_data = phi_iso(ind.witness, tt);
  auto equivalence =
      phi_data.iso.map.adjoint().compose(psi_data.iso.map);

  Correspondence psi_corr{ind.source_dilation.rep};
  auto sme =
      verify_correspondence_sme(psi_data.base.corr, psi_corr, y, x,
                                equivalence, tt);

  // Recovering the witness from the composed isomorphism must return
  // the maps the induction produced.
  CorrespondenceIso full{phi_data.iso.source, psi_data.iso.target,
                         psi_data.iso.map.compose(equivalence.adjoint()),
                         Certificate{}};
  full.cert =
      verify_correspondence_iso(full.source, full.target, full.map, tt);
  auto recovered = witness_from_iso(full, y, ind.source_dilation.rep, tt);
  double agree = 0.0;
  for (size_t a = 0; a < recovered.maps.size(); ++a) {
    const auto& lhs = recovered.maps[a];
    const auto& rhs = ind.witness.maps[a];
    agree = std::max(agree, (lhs - rhs).norm() /
                                std::max({1.0, lhs.norm(), rhs.norm()}));
  }

  Certificate cert{"gns-pipeline", tt.tol};
  cert.record("transport", transport);
  cert.record("witness", verify_sme_witness(ind.witness, tt).worst());
  cert.record("psi", psi_data.iso.cert.worst());
  cert.record("phi", phi_data.iso.cert.worst());
  cert.merge(sme);
  cert.record("roundtrip",
              std::max(agree, verify_sme_witness(recovered, tt).worst()));

  return {std::move(ind),       std::move(x),
          std::move(phi),       std::move(psi_data),
          std::move(phi_data),  std::move(equivalence),
          std::move(recovered), std::move(cert)};
}

inline GNSPipeline example_gns5(const CPMap& psi, const BimodulePtr& y,
                                const Tolerances& tt = {}) {
  return example_gns5(psi, y, left_basis(y, tt), tt);
}

}  // namespace morita
