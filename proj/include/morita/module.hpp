#pragma once

// Right Hilbert C*-modules in projective form p B^n, their elements,
// and adjointable maps between them as rectangular matrices over the
// base algebra.  Two scalarizations run through this file:
//
//   vec   – module elements as complex coordinate vectors (length
//           n * vs_dim(B)); the faithful trace makes this isometric, so
//           Gram ranks and spans are plain complex linear algebra;
//   rep   – matrices over B pushed through the faithful representation
//           (size m*d x n*d); a faithful *-representation is isometric,
//           so operator norms are spectral norms there.

#include <memory>
#include <optional>
#include <vector>

#include "morita/algebra.hpp"

namespace morita {

class ProjectiveModule;
using ModuleRef = std::shared_ptr<const ProjectiveModule>;

namespace detail {

inline Mat over_algebra_vec_action(const AlgebraPtr& base,
                                   const std::vector<std::vector<AlgebraElement>>& m,
                                   int rows, int cols) {
  const int vs = base->vs_dim();
  Mat out = Mat::Zero(rows * vs, cols * vs);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out.block(i * vs, j * vs, vs, vs) = left_mult_matrix(m[i][j]);
  return out;
}

inline Mat over_algebra_rep(const AlgebraPtr& base,
                            const std::vector<std::vector<AlgebraElement>>& m,
                            int rows, int cols) {
  const int d = base->rep_dim();
  Mat out = Mat::Zero(rows * d, cols * d);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.block(i * d, j * d, d, d) = m[i][j].rep();
  return out;
}

}  // namespace detail

/// p B^n for a projection p in M_n(B).  Validated at construction; the
/// complex dimension and the per-block ranks of p are cached because
/// nearly every consumer needs them.
class ProjectiveModule : public std::enable_shared_from_this<ProjectiveModule> {
 public:
  ProjectiveModule(AlgebraPtr base, int n,
                   std::vector<std::vector<AlgebraElement>> p, double tol = 1e-9)
      : base_(std::move(base)), n_(n), p_(std::move(p)) {
    require(n_ >= 1, "invalid-shape", "module needs n >= 1 ambient columns");
    require(static_cast<int>(p_.size()) == n_, "invalid-shape", "p row count");
    for (auto& row : p_) {
      require(static_cast<int>(row.size()) == n_, "invalid-shape", "p col count");
      for (auto& e : row)
        require(same_algebra(e.algebra(), base_), "shape-mismatch",
                "p entry from wrong algebra");
    }
    validate_projection(tol);
    // Per-block ranks of p in the faithful representation; traces of a
    // verified projection are integers up to roundoff.
    complex_dim_ = 0;
    for (int t = 0; t < base_->blocks(); ++t) {
      const int bt = base_->block_dim(t);
      double tr = 0.0;
      for (int i = 0; i < n_; ++i)
        tr += p_[i][i].block(t).trace().real();
      const int r = static_cast<int>(std::llround(tr));
      block_ranks_.push_back(r);
      complex_dim_ += r * bt;
    }
  }

  const AlgebraPtr& base() const { return base_; }
  int ambient_rank() const { return n_; }
  const std::vector<std::vector<AlgebraElement>>& p() const { return p_; }
  const AlgebraElement& p(int i, int j) const { return p_[i][j]; }
  /// dim over C of p B^n; for B = sum M_{b_t} this is sum r_t * b_t.
  int complex_dim() const { return complex_dim_; }
  /// rank of p in block t of the faithful representation.
  int block_rank(int t) const { return block_ranks_[t]; }
  /// dim over C of the adjointable maps p M_n(B) p: sum r_t^2.
  int endo_dim() const {
    int s = 0;
    for (int r : block_ranks_) s += r * r;
    return s;
  }
  int vec_dim() const { return n_ * base_->vs_dim(); }

  /// Scalarized projection acting on vec coordinates.
  const Mat& vec_projection() const {
    if (!vec_proj_)
      vec_proj_ = detail::over_algebra_vec_action(base_, p_, n_, n_);
    return *vec_proj_;
  }

  /// Deterministic orthonormal complex basis of the module inside vec
  /// coordinates (columns of an isometry).
  const Mat& basis() const {
    if (!basis_) basis_ = detail::projection_range_basis(vec_projection());
    return *basis_;
  }

 private:
  void validate_projection(double tol) {
    double idem = 0.0, herm = 0.0, scale = 1.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        auto sq = zero_element(base_);
        for (int k = 0; k < n_; ++k) sq = sq + p_[i][k] * p_[k][j];
        idem = std::max(idem, (sq - p_[i][j]).norm());
        herm = std::max(herm, (p_[i][j] - p_[j][i].adjoint()).norm());
        scale = std::max(scale, p_[i][j].norm());
      }
    if (idem > tol * scale || herm > tol * scale) {
      Certificate c{"projection", tol};
      c.record("idempotent", idem);
      c.record("self-adjoint", herm);
      throw Error("projection", "p is not a projection in M_n(B)", c);
    }
  }

  AlgebraPtr base_;
  int n_;
  std::vector<std::vector<AlgebraElement>> p_;
  std::vector<int> block_ranks_;
  int complex_dim_ = 0;
  mutable std::optional<Mat> vec_proj_;
  mutable std::optional<Mat> basis_;
};

inline ModuleRef make_module(AlgebraPtr base, int n,
                             std::vector<std::vector<AlgebraElement>> p,
                             double tol = 1e-9) {
  return std::make_shared<ProjectiveModule>(std::move(base), n, std::move(p), tol);
}

/// Free module B^n (p = identity).
inline ModuleRef free_module(const AlgebraPtr& base, int n) {
  std::vector<std::vector<AlgebraElement>> p(
      n, std::vector<AlgebraElement>(n, zero_element(base)));
  for (int i = 0; i < n; ++i) p[i][i] = unit_element(base);
  return make_module(base, n, std::move(p));
}

/// Zero module, represented as 0 * B^1.
inline ModuleRef zero_module(const AlgebraPtr& base) {
  std::vector<std::vector<AlgebraElement>> p(
      1, std::vector<AlgebraElement>(1, zero_element(base)));
  return make_module(base, 1, std::move(p));
}

inline bool same_module(const ModuleRef& a, const ModuleRef& b, double tol = 1e-9) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (!same_algebra(a->base(), b->base()) || a->ambient_rank() != b->ambient_rank())
    return false;
  for (int i = 0; i < a->ambient_rank(); ++i)
    for (int j = 0; j < a->ambient_rank(); ++j)
      if ((a->p(i, j) - b->p(i, j)).norm() > tol) return false;
  return true;
}

/// Column vector over B living in (ideally) p B^n.
class ModuleElement {
 public:
  ModuleElement() = default;
  ModuleElement(ModuleRef mod, std::vector<AlgebraElement> entries)
      : mod_(std::move(mod)), entries_(std::move(entries)) {
    require(static_cast<int>(entries_.size()) == mod_->ambient_rank(),
            "invalid-shape", "module element entry count");
  }

  const ModuleRef& module() const { return mod_; }
  const AlgebraElement& entry(int i) const { return entries_[i]; }
  AlgebraElement& entry(int i) { return entries_[i]; }

  ModuleElement operator+(const ModuleElement& o) const {
    check(o);
    auto out = entries_;
    for (size_t i = 0; i < out.size(); ++i) out[i] = out[i] + o.entries_[i];
    return {mod_, std::move(out)};
  }
  ModuleElement operator-(const ModuleElement& o) const {
    check(o);
    auto out = entries_;
    for (size_t i = 0; i < out.size(); ++i) out[i] = out[i] - o.entries_[i];
    return {mod_, std::move(out)};
  }
  ModuleElement operator*(cplx s) const {
    auto out = entries_;
    for (auto& e : out) e = e * s;
    return {mod_, std::move(out)};
  }
  friend ModuleElement operator*(cplx s, const ModuleElement& x) { return x * s; }

  /// Right action x . b.
  ModuleElement acted(const AlgebraElement& b) const {
    auto out = entries_;
    for (auto& e : out) e = e * b;
    return {mod_, std::move(out)};
  }

  Vec vec() const {
    const int vs = mod_->base()->vs_dim();
    Vec v(mod_->vec_dim());
    for (int i = 0; i < mod_->ambient_rank(); ++i)
      v.segment(i * vs, vs) = entries_[i].vec();
    return v;
  }

  double norm() const {
    // Module norm ||<x,x>||^{1/2}.
    double n = 0.0;
    auto ip = zero_element(mod_->base());
    for (const auto& e : entries_) ip = ip + e.adjoint() * e;
    n = ip.norm();
    return std::sqrt(std::max(n, 0.0));
  }

 private:
  void check(const ModuleElement& o) const {
    require(same_module(mod_, o.mod_), "shape-mismatch",
            "elements of different modules");
  }

  ModuleRef mod_;
  std::vector<AlgebraElement> entries_;
};

inline ModuleElement zero_element(const ModuleRef& mod) {
  return {mod, std::vector<AlgebraElement>(mod->ambient_rank(),
                                           zero_element(mod->base()))};
}

inline ModuleElement element_from_vec(const ModuleRef& mod, const Vec& v) {
  require(v.size() == mod->vec_dim(), "invalid-shape", "vec length mismatch");
  const int vs = mod->base()->vs_dim();
  std::vector<AlgebraElement> entries;
  for (int i = 0; i < mod->ambient_rank(); ++i)
    entries.push_back(element_from_vec(mod->base(), Vec(v.segment(i * vs, vs))));
  return {mod, std::move(entries)};
}

/// B-valued inner product <x,y> = sum_i x_i* y_i (linear in y).
inline AlgebraElement inner_product(const ModuleElement& x, const ModuleElement& y) {
  require(same_module(x.module(), y.module()), "shape-mismatch",
          "inner product across modules");
  auto out = zero_element(x.module()->base());
  for (int i = 0; i < x.module()->ambient_rank(); ++i)
    out = out + x.entry(i).adjoint() * y.entry(i);
  return out;
}

/// j-th column of p as a module element; these generate p B^n.
inline ModuleElement column_generator(const ModuleRef& mod, int j) {
  std::vector<AlgebraElement> entries;
  for (int i = 0; i < mod->ambient_rank(); ++i) entries.push_back(mod->p(i, j));
  return {mod, std::move(entries)};
}

/// Matrix of the right action x -> x.b on vec coordinates.
inline Mat right_action_matrix(const ModuleRef& mod, const AlgebraElement& b) {
  require(same_algebra(mod->base(), b.algebra()), "shape-mismatch",
          "right action by an element over a different algebra");
  const int vs = mod->base()->vs_dim();
  const Mat rmul = right_mult_matrix(b);
  Mat out = Mat::Zero(mod->vec_dim(), mod->vec_dim());
  for (int i = 0; i < mod->ambient_rank(); ++i)
    out.block(i * vs, i * vs, vs, vs) = rmul;
  return out;
}

/// Adjointable map between projective modules: an m x n matrix over B
/// with T = q T p.
class ModuleMap {
 public:
  ModuleMap() = default;
  ModuleMap(ModuleRef source, ModuleRef target,
            std::vector<std::vector<AlgebraElement>> m)
      : src_(std::move(source)), tgt_(std::move(target)), m_(std::move(m)) {
    require(same_algebra(src_->base(), tgt_->base()), "shape-mismatch",
            "map between modules over different algebras");
    require(static_cast<int>(m_.size()) == tgt_->ambient_rank(), "invalid-shape",
            "map row count");
    for (auto& row : m_)
      require(static_cast<int>(row.size()) == src_->ambient_rank(),
              "invalid-shape", "map col count");
  }

  const ModuleRef& source() const { return src_; }
  const ModuleRef& target() const { return tgt_; }
  const AlgebraElement& entry(int i, int j) const { return m_[i][j]; }
  const std::vector<std::vector<AlgebraElement>>& matrix() const { return m_; }

  ModuleElement apply(const ModuleElement& x) const {
    require(same_module(x.module(), src_), "shape-mismatch", "map applied off-domain");
    std::vector<AlgebraElement> out;
    for (int i = 0; i < tgt_->ambient_rank(); ++i) {
      auto s = morita::zero_element(tgt_->base());
      for (int j = 0; j < src_->ambient_rank(); ++j) s = s + m_[i][j] * x.entry(j);
      out.push_back(std::move(s));
    }
    return {tgt_, std::move(out)};
  }

  ModuleMap adjoint() const {
    std::vector<std::vector<AlgebraElement>> a(
        src_->ambient_rank(),
        std::vector<AlgebraElement>(tgt_->ambient_rank(),
                                    morita::zero_element(src_->base())));
    for (int i = 0; i < tgt_->ambient_rank(); ++i)
      for (int j = 0; j < src_->ambient_rank(); ++j) a[j][i] = m_[i][j].adjoint();
    return {tgt_, src_, std::move(a)};
  }

  /// Composition this . o (first o, then this).
  ModuleMap compose(const ModuleMap& o) const {
    require(same_module(o.tgt_, src_), "shape-mismatch", "composition mismatch");
    std::vector<std::vector<AlgebraElement>> c(
        tgt_->ambient_rank(),
        std::vector<AlgebraElement>(o.src_->ambient_rank(),
                                    morita::zero_element(tgt_->base())));
    for (int i = 0; i < tgt_->ambient_rank(); ++i)
      for (int j = 0; j < o.src_->ambient_rank(); ++j)
        for (int k = 0; k < src_->ambient_rank(); ++k)
          c[i][j] = c[i][j] + m_[i][k] * o.m_[k][j];
    return {o.src_, tgt_, std::move(c)};
  }

  ModuleMap operator+(const ModuleMap& o) const {
    require(same_module(src_, o.src_) && same_module(tgt_, o.tgt_),
            "shape-mismatch", "map addition mismatch");
    auto c = m_;
    for (size_t i = 0; i < c.size(); ++i)
      for (size_t j = 0; j < c[i].size(); ++j) c[i][j] = c[i][j] + o.m_[i][j];
    return {src_, tgt_, std::move(c)};
  }
  ModuleMap operator-(const ModuleMap& o) const { return *this + o * cplx(-1.0); }
  ModuleMap operator*(cplx s) const {
    auto c = m_;
    for (auto& row : c)
      for (auto& e : row) e = e * s;
    return {src_, tgt_, std::move(c)};
  }
  friend ModuleMap operator*(cplx s, const ModuleMap& t) { return t * s; }

  /// Operator norm via the faithful representation.
  double norm() const {
    return detail::spectral_norm(rep_action());
  }

  /// Action on vec coordinates (used for ranks, spans, conversions).
  Mat vec_action() const {
    return detail::over_algebra_vec_action(src_->base(), m_, tgt_->ambient_rank(),
                                           src_->ambient_rank());
  }

  /// Action in the faithful representation (used for norms).
  Mat rep_action() const {
    return detail::over_algebra_rep(src_->base(), m_, tgt_->ambient_rank(),
                                    src_->ambient_rank());
  }

 private:
  ModuleRef src_, tgt_;
  std::vector<std::vector<AlgebraElement>> m_;
};

inline ModuleMap zero_map(const ModuleRef& src, const ModuleRef& tgt) {
  std::vector<std::vector<AlgebraElement>> m(
      tgt->ambient_rank(),
      std::vector<AlgebraElement>(src->ambient_rank(), zero_element(src->base())));
  return {src, tgt, std::move(m)};
}

/// Identity on p B^n is the matrix p itself.
inline ModuleMap identity_map(const ModuleRef& mod) {
  return {mod, mod, mod->p()};
}

/// Rank-one operator theta_{x,y} z = x <y,z>; matrix entries x_i y_j*.
inline ModuleMap rank_one(const ModuleElement& x, const ModuleElement& y) {
  std::vector<std::vector<AlgebraElement>> m;
  for (int i = 0; i < x.module()->ambient_rank(); ++i) {
    std::vector<AlgebraElement> row;
    for (int j = 0; j < y.module()->ambient_rank(); ++j)
      row.push_back(x.entry(i) * y.entry(j).adjoint());
    m.push_back(std::move(row));
  }
  return {y.module(), x.module(), std::move(m)};
}

/// Rebuild a matrix over B from a complex-linear action on vec
/// coordinates.  The action must be right-B-linear and supported on the
/// submodules; both hold for every construction in this toolkit, and the
/// result is projected onto q (.) p defensively.
inline ModuleMap map_from_vec_action(const ModuleRef& src, const ModuleRef& tgt,
                                     const Mat& action) {
  require(action.rows() == tgt->vec_dim() && action.cols() == src->vec_dim(),
          "invalid-shape", "vec action dimensions");
  const int n = src->ambient_rank(), m = tgt->ambient_rank();
  std::vector<std::vector<AlgebraElement>> mat(
      m, std::vector<AlgebraElement>(n, zero_element(src->base())));
  for (int j = 0; j < n; ++j) {
    const Vec col = action * column_generator(src, j).vec();
    const auto y = element_from_vec(tgt, col);
    for (int i = 0; i < m; ++i) mat[i][j] = y.entry(i);
  }
  ModuleMap raw(src, tgt, std::move(mat));
  return identity_map(tgt).compose(raw);
}

/// Functional calculus for a self-adjoint module operator, computed on
/// the complex basis of the module.  `floor_rel`, when non-negative,
/// gates against near-singular input (inverse square roots).
template <typename F>
inline ModuleMap hermitian_map_calculus(const ModuleMap& s, F&& f,
                                        double floor_rel = -1.0) {
  require(same_module(s.source(), s.target()), "shape-mismatch",
          "functional calculus needs an endomorphism");
  const Mat q = s.source()->basis();
  const Mat a = q.adjoint() * s.vec_action() * q;
  auto [lam, u] = detail::hermitian_eig(a);
  const double top = lam.size() ? std::max(lam(lam.size() - 1), 0.0) : 0.0;
  Vec flam(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (floor_rel >= 0.0 && lam(i) <= floor_rel * std::max(top, 1.0))
      throw Error("generator-deficiency",
                  "module operator eigenvalue " + std::to_string(lam(i)) +
                      " below invertibility floor");
    flam(i) = f(lam(i));
  }
  const Mat full = q * (u * flam.asDiagonal() * u.adjoint()) * q.adjoint();
  return map_from_vec_action(s.source(), s.source(), full);
}

/// Smallest eigenvalue of a self-adjoint module operator (restricted to
/// the module), used for invertibility decisions.
inline double min_module_eigenvalue(const ModuleMap& s) {
  const Mat q = s.source()->basis();
  if (q.cols() == 0) return 0.0;
  auto [lam, u] = detail::hermitian_eig(Mat(q.adjoint() * s.vec_action() * q));
  return lam(0);
}

// ---- frames ---------------------------------------------------------

/// Columns of p with near-zero columns dropped: a deterministic
/// generating set of p B^n.
inline std::vector<ModuleElement> module_generators(const ModuleRef& mod,
                                                    double drop = 1e-12) {
  std::vector<ModuleElement> gens;
  for (int j = 0; j < mod->ambient_rank(); ++j) {
    auto g = column_generator(mod, j);
    if (g.norm() > drop) gens.push_back(std::move(g));
  }
  return gens;
}

/// Tight (reconstruction) frame: u_i with sum_i theta_{u_i,u_i} = id,
/// i.e. sum_i u_i <u_i, z> = z for every z in the module.  Built by
/// normalizing the column generators with the inverse square root of the
/// frame operator.
inline std::vector<ModuleElement> tight_frame(const ModuleRef& mod,
                                              const Tolerances& tt = {}) {
  auto gens = module_generators(mod);
  require(!gens.empty() && mod->complex_dim() > 0, "empty-frame",
          "zero module has no frame");
  for (auto& g : gens) g = g * cplx(1.0 / g.norm(), 0.0);
  // Greedy reduction: drop generators whose removal keeps the frame
  // operator invertible; deterministic ascending order.
  auto frame_op = [&](const std::vector<ModuleElement>& gs) {
    auto s = zero_map(mod, mod);
    for (const auto& g : gs) s = s + rank_one(g, g);
    return s;
  };
  auto s = frame_op(gens);
  for (size_t i = 0; i < gens.size() && gens.size() > 1;) {
    auto trial = s - rank_one(gens[i], gens[i]);
    const double lo = min_module_eigenvalue(trial);
    const double hi = std::max(1.0, trial.norm());
    if (lo > tt.floor * hi) {
      s = trial;
      gens.erase(gens.begin() + static_cast<long>(i));
    } else {
      ++i;
    }
  }
  auto isq = hermitian_map_calculus(
      s, [](double x) { return 1.0 / std::sqrt(x); }, tt.floor);
  std::vector<ModuleElement> frame;
  for (const auto& g : gens) frame.push_back(isq.apply(g));
  return frame;
}

/// Frame normalized for fullness: v_j with sum_j <v_j, v_j>_B = 1_B.
/// Exists iff the module is full over B; otherwise the accumulated sum
/// is singular and this raises.
inline std::vector<ModuleElement> right_normalized_frame(const ModuleRef& mod,
                                                         const Tolerances& tt = {}) {
  // Unit-norm generators: a skewed presentation would otherwise leak
  // its scale spread into every construction consuming the frame.
  auto gens = module_generators(mod);
  for (auto& g : gens) g = g * cplx(1.0 / g.norm(), 0.0);
  auto sum_of = [&](const std::vector<ModuleElement>& xs) {
    auto h = zero_element(mod->base());
    for (const auto& x : xs) h = h + inner_product(x, x);
    return h;
  };
  AlgebraElement hins;
  try {
    hins = inv_sqrt(sum_of(gens), tt.floor);
  } catch (const Error&) {
    // A generating set can miss invertibility even on a full module
    // (single generator g with singular <g,g>).  Padding with the basis
    // translates g.e_u makes the sum blockwise tracial, so its
    // invertibility decides fullness exactly.
    std::vector<ModuleElement> shifted;
    for (const auto& g : gens)
      for (int u = 0; u < mod->base()->vs_dim(); ++u) {
        auto ge = g.acted(basis_element(mod->base(), u));
        if (ge.norm() > tt.floor) shifted.push_back(std::move(ge));
      }
    gens = std::move(shifted);
    try {
      hins = inv_sqrt(sum_of(gens), tt.floor);
    } catch (const Error&) {
      throw Error("not-full", "module is not full over its base algebra");
    }
  }
  std::vector<ModuleElement> frame;
  for (const auto& g : gens) frame.push_back(g.acted(hins));
  return frame;
}

}  // namespace morita
