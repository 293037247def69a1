#pragma once

// Interior tensor product Y (x)_D F of a right Hilbert D-module with a
// right Hilbert B-module carrying a D-action, realized concretely via
// the quotient construction.  The B-valued inner product contracts the
// middle algebra:  <y (x) f, y' (x) f'> = <f, pi(<y,y'>_D) f'>.
// Balancing (y.d (x) f = y (x) d.f) costs nothing extra: the defect
// vectors are null for this semi-inner product and die in the quotient.

#include <vector>

#include "morita/realize.hpp"

namespace morita {

struct InteriorTensor {
  ModuleRef left;    // Y, right module over the middle algebra
  ModuleRef right;   // F, right module over the base of the result
  AlgebraPtr middle; // D
  Mat basis_left, basis_right;
  Realization real;

  const ModuleRef& module() const { return real.module; }

  Vec left_coords(const ModuleElement& y) const {
    return basis_left.adjoint() * y.vec();
  }
  Vec right_coords(const ModuleElement& f) const {
    return basis_right.adjoint() * f.vec();
  }
  Vec ambient(const Vec& a, const Vec& b) const {
    Vec v(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
      v.segment(i * b.size(), b.size()) = a(i) * b;
    return v;
  }

  /// [y (x) f] as an element of the realized module.
  ModuleElement embed(const ModuleElement& y, const ModuleElement& f) const {
    return real.to_module(ambient(left_coords(y), right_coords(f)));
  }

  /// f -> [y (x) f] as an adjointable map F -> Y (x) F.
  ModuleMap embed_map(const ModuleElement& y) const {
    const Vec a = left_coords(y);
    const Eigen::Index rl = basis_left.cols(), rr = basis_right.cols();
    Mat k(rl * rr, right->vec_dim());
    for (Eigen::Index i = 0; i < rl; ++i)
      k.block(i * rr, 0, rr, right->vec_dim()) = a(i) * basis_right.adjoint();
    return map_from_vec_action(right, module(), Mat(real.fwd * k));
  }
};

/// Build Y (x)_D F.  `middle_action[w]` is the map on F implementing the
/// w-th basis element of D; callers pass a validated representation
/// table.
inline InteriorTensor interior_tensor(const ModuleRef& y_mod,
                                      const AlgebraPtr& middle,
                                      const std::vector<ModuleMap>& middle_action,
                                      const ModuleRef& f_mod,
                                      const Tolerances& tt = {}) {
  require(same_algebra(y_mod->base(), middle), "shape-mismatch",
          "tensor middle algebra must match the left factor's base");
  require(static_cast<int>(middle_action.size()) == middle->vs_dim(),
          "invalid-shape", "middle action table size");
  for (const auto& t : middle_action)
    require(same_module(t.source(), f_mod) && same_module(t.target(), f_mod),
            "shape-mismatch", "middle action must act on the right factor");

  InteriorTensor out;
  out.left = y_mod;
  out.right = f_mod;
  out.middle = middle;
  out.basis_left = y_mod->basis();
  out.basis_right = f_mod->basis();
  const int rl = static_cast<int>(out.basis_left.cols());
  const int rr = static_cast<int>(out.basis_right.cols());
  const auto& base = f_mod->base();

  std::vector<ModuleElement> ys, fs;
  for (int i = 0; i < rl; ++i)
    ys.push_back(element_from_vec(y_mod, Vec(out.basis_left.col(i))));
  for (int i = 0; i < rr; ++i)
    fs.push_back(element_from_vec(f_mod, Vec(out.basis_right.col(i))));

  AbstractModule am(base, rl * rr);

  // Right action of the result's base: acts on the F coordinates only.
  for (int w = 0; w < base->vs_dim(); ++w) {
    const Mat rhat = right_action_matrix(f_mod, basis_element(base, w));
    const Mat af = out.basis_right.adjoint() * rhat * out.basis_right;
    for (int a = 0; a < rl; ++a)
      am.action[w].block(a * rr, a * rr, rr, rr) = af;
  }

  // Inner-product kernel.
  for (int a = 0; a < rl; ++a)
    for (int c = 0; c < rl; ++c) {
      const AlgebraElement dmid = inner_product(ys[a], ys[c]);
      const Vec dv = dmid.vec();
      auto pmap = zero_map(f_mod, f_mod);
      for (int w = 0; w < middle->vs_dim(); ++w)
        if (dv(w) != cplx(0.0)) pmap = pmap + middle_action[w] * dv(w);
      for (int dd = 0; dd < rr; ++dd) {
        const ModuleElement pf = pmap.apply(fs[dd]);
        for (int b = 0; b < rr; ++b)
          am.set_sip(a * rr + b, c * rr + dd, inner_product(fs[b], pf));
      }
    }

  out.real = realize(am, tt);
  return out;
}

}  // namespace morita
