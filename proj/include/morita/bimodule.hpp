#pragma once

// Equivalence bimodules in concrete form.  The carrier is a projective
// right Hilbert D-module; the left C-action arrives as a table of
// adjointable operators and is validated to be a unital *-isomorphism
// onto the carrier's full adjointable algebra.  The left inner product
// is not an input: it is recovered from the action by least squares,
// and imprimitivity (_C<x,y> . z = x . <y,z>_D) becomes a certificate
// condition instead of an axiom we trust.

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "morita/tensor.hpp"

namespace morita {

class EquivalenceBimodule;
using BimodulePtr = std::shared_ptr<const EquivalenceBimodule>;

namespace detail {

/// Entries of a carrier endomorphism stacked into one long vector, so
/// that "solve pi(a) = T for a" is an ordinary least-squares problem.
inline Vec flatten_endomorphism(const ModuleMap& t) {
  const int m = t.source()->ambient_rank();
  const int vs = t.source()->base()->vs_dim();
  Vec out(m * m * vs);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      out.segment((i * m + j) * vs, vs) = t.entry(i, j).vec();
  return out;
}

}  // namespace detail

/// A C-D equivalence bimodule: right Hilbert D-module carrier plus a
/// left C-action table indexed by the matrix-unit basis of C.
class EquivalenceBimodule {
 public:
  EquivalenceBimodule(AlgebraPtr left, ModuleRef carrier,
                      std::vector<ModuleMap> action, Certificate cert)
      : left_(std::move(left)),
        carrier_(std::move(carrier)),
        action_(std::move(action)),
        cert_(std::move(cert)) {
    const int m = carrier_->ambient_rank();
    flat_.resize(m * m * carrier_->base()->vs_dim(), left_->vs_dim());
    for (int w = 0; w < left_->vs_dim(); ++w)
      flat_.col(w) = detail::flatten_endomorphism(action_[w]);
    solver_.compute(flat_);
  }

  const AlgebraPtr& left() const { return left_; }
  const AlgebraPtr& right() const { return carrier_->base(); }
  const ModuleRef& carrier() const { return carrier_; }
  const std::vector<ModuleMap>& action_table() const { return action_; }
  const Certificate& certificate() const { return cert_; }

  /// Left action of a as an adjointable operator on the carrier.
  ModuleMap act(const AlgebraElement& a) const {
    require(same_algebra(a.algebra(), left_), "shape-mismatch",
            "left action by an element of a different algebra");
    auto out = zero_map(carrier_, carrier_);
    const Vec v = a.vec();
    for (int w = 0; w < left_->vs_dim(); ++w)
      if (v(w) != cplx(0.0)) out = out + action_[w] * v(w);
    return out;
  }

  ModuleElement left_act(const AlgebraElement& a, const ModuleElement& x) const {
    return act(a).apply(x);
  }

  /// Preimage of a carrier endomorphism under the left action.
  AlgebraElement operator_preimage(const ModuleMap& t) const {
    require(same_module(t.source(), carrier_) && same_module(t.target(), carrier_),
            "shape-mismatch", "preimage of a map on a different module");
    return element_from_vec(left_, Vec(solver_.solve(detail::flatten_endomorphism(t))));
  }

  /// _C<x,y>: the unique a with pi(a) = theta_{x,y}.
  AlgebraElement left_inner(const ModuleElement& x, const ModuleElement& y) const {
    return operator_preimage(rank_one(x, y));
  }

 private:
  AlgebraPtr left_;
  ModuleRef carrier_;
  std::vector<ModuleMap> action_;
  Certificate cert_;
  Mat flat_;
  Eigen::ColPivHouseholderQR<Mat> solver_;
};

namespace detail {

inline Certificate check_bimodule(const AlgebraPtr& c, const ModuleRef& carrier,
                                  const std::vector<ModuleMap>& action,
                                  const Tolerances& tt) {
  Certificate cert("bimodule", tt.tol);
  const int vs = c->vs_dim();

  auto act_of = [&](const AlgebraElement& a) {
    auto out = zero_map(carrier, carrier);
    const Vec v = a.vec();
    for (int w = 0; w < vs; ++w)
      if (v(w) != cplx(0.0)) out = out + action[w] * v(w);
    return out;
  };

  cert.record("unital", (act_of(unit_element(c)) - identity_map(carrier)).norm());

  double mult = 0.0, star = 0.0;
  for (int w = 0; w < vs; ++w) {
    star = std::max(
        star, (act_of(basis_element(c, w).adjoint()) - action[w].adjoint()).norm());
    for (int v = 0; v < vs; ++v) {
      const auto prod = basis_element(c, w) * basis_element(c, v);
      mult = std::max(mult, (action[w].compose(action[v]) - act_of(prod)).norm());
    }
  }
  cert.record("multiplicative", mult);
  cert.record("star", star);

  // <a.x, y>_D = <x, a*.y>_D on generators.  Follows from the star
  // condition and adjointability, but it is cheap and the certificate
  // should say so explicitly.
  const auto gens = module_generators(carrier);
  double compat = 0.0;
  for (int w = 0; w < vs; ++w) {
    const auto star_w = act_of(basis_element(c, w).adjoint());
    for (const auto& x : gens)
      for (const auto& y : gens)
        compat = std::max(compat, (inner_product(action[w].apply(x), y) -
                                   inner_product(x, star_w.apply(y)))
                                      .norm());
  }
  cert.record("adjoint-compatible", compat);

  // The action must identify C with the whole adjointable algebra of
  // the carrier: injective (rank = vs_dim C) and surjective
  // (rank = dim of the endomorphism space).
  const int m = carrier->ambient_rank();
  Mat flat(m * m * carrier->base()->vs_dim(), vs);
  for (int w = 0; w < vs; ++w) flat.col(w) = flatten_endomorphism(action[w]);
  const int rank = rank_of_span(flat, tt.rank_cutoff);
  cert.record("left-action-bijective",
              std::abs(rank - vs) + std::abs(carrier->endo_dim() - vs));

  // Right fullness: the D-valued inner products span all of D.
  const auto& d = carrier->base();
  std::vector<ModuleElement> shifted;
  for (const auto& g : gens)
    for (int u = 0; u < d->vs_dim(); ++u) shifted.push_back(g.acted(basis_element(d, u)));
  Mat span(d->vs_dim(), static_cast<Eigen::Index>(shifted.size() * shifted.size()));
  Eigen::Index col = 0;
  for (const auto& x : shifted)
    for (const auto& y : shifted) span.col(col++) = inner_product(x, y).vec();
  cert.record("right-full",
              static_cast<double>(d->vs_dim() - rank_of_span(span, tt.rank_cutoff)));

  // Imprimitivity through the recovered left inner product, plus
  // positivity of the recovered _C<g,g>.
  Eigen::ColPivHouseholderQR<Mat> lsq(flat);
  double imp = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < gens.size(); ++i)
    for (std::size_t j = 0; j < gens.size(); ++j) {
      const auto theta = rank_one(gens[i], gens[j]);
      const auto a = element_from_vec(c, Vec(lsq.solve(flatten_endomorphism(theta))));
      imp = std::max(imp,
                     (act_of(a) - theta).norm() / std::max(1.0, theta.norm()));
      if (i == j) {
        auto [lam, u] = hermitian_eig(a.rep());
        const double top =
            lam.size() ? std::max(std::abs(lam(lam.size() - 1)), 1.0) : 1.0;
        const double neg = lam.size() ? std::max(0.0, -lam(0)) : 0.0;
        pos = std::max(pos, std::max(hermiticity_defect(a), neg) / top);
      }
    }
  cert.record("imprimitivity", imp);
  cert.record("left-positivity", pos);
  return cert;
}

}  // namespace detail

inline BimodulePtr make_bimodule(const AlgebraPtr& left, const ModuleRef& carrier,
                                 std::vector<ModuleMap> action,
                                 const Tolerances& tt = {}) {
  require(static_cast<int>(action.size()) == left->vs_dim(), "invalid-shape",
          "left action table must cover the algebra basis");
  for (const auto& t : action)
    require(same_module(t.source(), carrier) && same_module(t.target(), carrier),
            "shape-mismatch", "left action must act on the carrier");
  auto cert = detail::check_bimodule(left, carrier, action, tt);
  if (!cert.passed())
    throw Error("invalid-bimodule",
                "left action does not implement an equivalence bimodule", cert);
  return std::make_shared<const EquivalenceBimodule>(left, carrier,
                                                     std::move(action), std::move(cert));
}

/// C as a C-C equivalence bimodule over itself: carrier C^1, left
/// action by multiplication.
inline BimodulePtr trivial_bimodule(const AlgebraPtr& c, const Tolerances& tt = {}) {
  auto carrier = free_module(c, 1);
  std::vector<ModuleMap> action;
  for (int w = 0; w < c->vs_dim(); ++w)
    action.push_back(ModuleMap(carrier, carrier, {{basis_element(c, w)}}));
  return make_bimodule(c, carrier, std::move(action), tt);
}

/// The (inflation of B by M_n)-B equivalence bimodule on the columns
/// B^n.  Every block of B grows by a factor n on the left; the action
/// is plain matrix multiplication against the column structure.
inline BimodulePtr matrix_column_bimodule(const AlgebraPtr& b, int n,
                                          const Tolerances& tt = {}) {
  require(n >= 1, "invalid-shape", "column count must be positive");
  std::vector<int> dims;
  for (int t = 0; t < b->blocks(); ++t) dims.push_back(n * b->block_dim(t));
  auto a = make_algebra(std::move(dims));
  auto carrier = free_module(b, n);
  std::vector<ModuleMap> action;
  for (int w = 0; w < a->vs_dim(); ++w) {
    const auto ix = a->basis_index(w);
    const int bt = b->block_dim(ix.block);
    // Row r of inflated block t addresses column slot r / bt and base
    // matrix row r % bt.
    std::vector<std::vector<AlgebraElement>> mat(
        n, std::vector<AlgebraElement>(n, zero_element(b)));
    mat[ix.row / bt][ix.col / bt] = basis_element(
        b, b->vs_offset(ix.block) + (ix.row % bt) * bt + (ix.col % bt));
    action.push_back(ModuleMap(carrier, carrier, std::move(mat)));
  }
  return make_bimodule(a, carrier, std::move(action), tt);
}

/// Y together with its conjugate bimodule.  tilde/untilde are the
/// conjugate-linear coordinate charts between the two carriers.
struct DualBimodule {
  BimodulePtr original;  // Y : C-D
  BimodulePtr dual;      // Y~ : D-C
  Mat tilde, untilde;

  /// y -> y~ (conjugate linear).
  ModuleElement tilde_of(const ModuleElement& y) const {
    return element_from_vec(dual->carrier(), Vec(tilde * y.vec().conjugate()));
  }
  /// y~ -> y (conjugate linear).
  ModuleElement untilde_of(const ModuleElement& t) const {
    return element_from_vec(original->carrier(), Vec(untilde * t.vec().conjugate()));
  }
};

/// Conjugate D-C bimodule of Y: same underlying space with conjugated
/// coordinates, <y~, z~>_C = _C<y, z> and d . y~ = (y . d*)~.
inline DualBimodule dual_bimodule(const BimodulePtr& y, const Tolerances& tt = {}) {
  const auto& c = y->left();
  const auto& carrier = y->carrier();
  const Mat basis = carrier->basis();
  const int r = static_cast<int>(basis.cols());

  std::vector<ModuleElement> ys;
  ys.reserve(r);
  for (int a = 0; a < r; ++a) ys.push_back(element_from_vec(carrier, Vec(basis.col(a))));

  // Abstract module over C on the conjugated coordinates: the right
  // C-action y~ . c = (c* . y)~ is linear there, and the new inner
  // product is the old left one.
  AbstractModule am(c, r);
  for (int w = 0; w < c->vs_dim(); ++w)
    am.action[w] =
        (basis.adjoint() * y->action_table()[w].adjoint().vec_action() * basis)
            .conjugate();
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) am.set_sip(a, b, y->left_inner(ys[a], ys[b]));

  auto real = realize(am, tt);

  DualBimodule out;
  out.original = y;
  out.tilde = real.fwd * basis.transpose();
  out.untilde = basis * real.bwd.conjugate();

  const auto& d = y->right();
  std::vector<ModuleMap> action;
  for (int v = 0; v < d->vs_dim(); ++v) {
    const Mat ract = right_action_matrix(carrier, basis_element(d, v).adjoint());
    action.push_back(map_from_vec_action(
        real.module, real.module,
        Mat(out.tilde * ract.conjugate() * out.untilde.conjugate())));
  }
  out.dual = make_bimodule(d, real.module, std::move(action), tt);
  return out;
}

/// Y (x)_D W as a C-L equivalence bimodule, with the carrier-level
/// tensor kept around for embedding elements and maps.
struct TensorBimodule {
  BimodulePtr bimodule;
  InteriorTensor tensor;
};

inline TensorBimodule bimodule_tensor(const BimodulePtr& y, const BimodulePtr& w,
                                      const Tolerances& tt = {}) {
  require(same_algebra(y->right(), w->left()), "shape-mismatch",
          "tensor factors do not share a middle algebra");
  TensorBimodule out;
  out.tensor =
      interior_tensor(y->carrier(), y->right(), w->action_table(), w->carrier(), tt);
  const Mat& bl = out.tensor.basis_left;
  const int rr = static_cast<int>(out.tensor.basis_right.cols());
  std::vector<ModuleMap> action;
  for (int u = 0; u < y->left()->vs_dim(); ++u) {
    const Mat al = bl.adjoint() * y->action_table()[u].vec_action() * bl;
    action.push_back(map_from_vec_action(
        out.tensor.module(), out.tensor.module(),
        Mat(out.tensor.real.fwd * detail::kron_identity_right(al, rr) *
            out.tensor.real.bwd)));
  }
  out.bimodule = make_bimodule(y->left(), out.tensor.module(), std::move(action), tt);
  return out;
}

/// Frame with sum_i _C<u_i, u_i> = 1_C: the tight frame of the carrier,
/// read through imprimitivity.
inline std::vector<ModuleElement> left_unit_frame(const BimodulePtr& y,
                                                  const Tolerances& tt = {}) {
  return tight_frame(y->carrier(), tt);
}

/// Basis in the reconstruction sense x = sum_i _C<x, u_i> . u_i,
/// equivalently sum_i <u_i, u_i>_D = 1_D.  Such a set generates the
/// carrier as a left C-module, which is what the induction
/// constructions need for their isometries to be onto.
inline std::vector<ModuleElement> left_basis(const BimodulePtr& y,
                                             const Tolerances& tt = {}) {
  return right_normalized_frame(y->carrier(), tt);
}

}  // namespace morita
