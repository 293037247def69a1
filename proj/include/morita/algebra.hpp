#pragma once

// Finite-dimensional C*-algebras as direct sums of full complex matrix
// blocks, together with their elements.  The block list is the whole
// structure; everything else (trace, norm, positivity, matrix-unit
// basis) is derived from it.

#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "morita/certificate.hpp"
#include "morita/linalg.hpp"

namespace morita {

class Algebra;
using AlgebraPtr = std::shared_ptr<const Algebra>;

class Algebra {
 public:
  explicit Algebra(std::vector<int> block_dims) : dims_(std::move(block_dims)) {
    require(!dims_.empty(), "invalid-shape", "algebra needs at least one block");
    for (int n : dims_)
      require(n >= 1, "invalid-shape", "block dimensions must be >= 1");
    rep_dim_ = std::accumulate(dims_.begin(), dims_.end(), 0);
    vs_dim_ = 0;
    vs_offsets_.reserve(dims_.size());
    for (int n : dims_) {
      vs_offsets_.push_back(vs_dim_);
      vs_dim_ += n * n;
    }
  }

  int blocks() const { return static_cast<int>(dims_.size()); }
  int block_dim(int t) const { return dims_[t]; }
  const std::vector<int>& block_dims() const { return dims_; }
  /// Dimension of the faithful block-diagonal representation.
  int rep_dim() const { return rep_dim_; }
  /// Complex vector-space dimension (number of matrix units).
  int vs_dim() const { return vs_dim_; }
  int vs_offset(int t) const { return vs_offsets_[t]; }

  struct BasisIndex {
    int block, row, col;
  };
  /// Basis order: block-major, rows before columns inside a block.
  BasisIndex basis_index(int k) const {
    for (int t = 0; t < blocks(); ++t) {
      const int n = dims_[t];
      if (k < n * n) return {t, k / n, k % n};
      k -= n * n;
    }
    throw Error("invalid-shape", "basis index out of range");
  }

  bool operator==(const Algebra& o) const { return dims_ == o.dims_; }

  std::string describe() const {
    std::string s = "[";
    for (size_t i = 0; i < dims_.size(); ++i)
      s += (i ? "," : "") + std::to_string(dims_[i]);
    return s + "]";
  }

 private:
  std::vector<int> dims_;
  std::vector<int> vs_offsets_;
  int rep_dim_ = 0;
  int vs_dim_ = 0;
};

inline AlgebraPtr make_algebra(std::vector<int> block_dims) {
  return std::make_shared<Algebra>(std::move(block_dims));
}

inline bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b) {
  return a == b || (a && b && *a == *b);
}

/// Element of a finite-dimensional C*-algebra: one dense matrix per block.
class AlgebraElement {
 public:
  AlgebraElement() = default;
  AlgebraElement(AlgebraPtr alg, std::vector<Mat> blocks)
      : alg_(std::move(alg)), blocks_(std::move(blocks)) {
    require(static_cast<int>(blocks_.size()) == alg_->blocks(), "invalid-shape",
            "element block count mismatch");
    for (int t = 0; t < alg_->blocks(); ++t)
      require(blocks_[t].rows() == alg_->block_dim(t) &&
                  blocks_[t].cols() == alg_->block_dim(t),
              "invalid-shape", "element block size mismatch");
  }

  const AlgebraPtr& algebra() const { return alg_; }
  const Mat& block(int t) const { return blocks_[t]; }
  Mat& block(int t) { return blocks_[t]; }

  AlgebraElement operator+(const AlgebraElement& o) const {
    check_parent(o);
    auto out = blocks_;
    for (size_t t = 0; t < out.size(); ++t) out[t] += o.blocks_[t];
    return {alg_, std::move(out)};
  }
  AlgebraElement operator-(const AlgebraElement& o) const {
    check_parent(o);
    auto out = blocks_;
    for (size_t t = 0; t < out.size(); ++t) out[t] -= o.blocks_[t];
    return {alg_, std::move(out)};
  }
  AlgebraElement operator*(const AlgebraElement& o) const {
    check_parent(o);
    auto out = blocks_;
    for (size_t t = 0; t < out.size(); ++t) out[t] = blocks_[t] * o.blocks_[t];
    return {alg_, std::move(out)};
  }
  AlgebraElement operator*(cplx s) const {
    auto out = blocks_;
    for (auto& b : out) b *= s;
    return {alg_, std::move(out)};
  }
  friend AlgebraElement operator*(cplx s, const AlgebraElement& a) { return a * s; }

  AlgebraElement adjoint() const {
    auto out = blocks_;
    for (auto& b : out) b = b.adjoint().eval();
    return {alg_, std::move(out)};
  }

  cplx trace() const {
    cplx s = 0.0;
    for (const auto& b : blocks_) s += b.trace();
    return s;
  }

  /// Operator norm: largest singular value across blocks.
  double norm() const {
    double n = 0.0;
    for (const auto& b : blocks_) n = std::max(n, detail::spectral_norm(b));
    return n;
  }

  /// Coordinates against the matrix-unit basis (block-major, row-major).
  Vec vec() const {
    Vec v(alg_->vs_dim());
    int k = 0;
    for (const auto& b : blocks_)
      for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) v(k++) = b(i, j);
    return v;
  }

  /// Faithful representation: one block-diagonal rep_dim x rep_dim matrix.
  Mat rep() const {
    Mat m = Mat::Zero(alg_->rep_dim(), alg_->rep_dim());
    int off = 0;
    for (const auto& b : blocks_) {
      m.block(off, off, b.rows(), b.cols()) = b;
      off += static_cast<int>(b.rows());
    }
    return m;
  }

 private:
  void check_parent(const AlgebraElement& o) const {
    require(same_algebra(alg_, o.alg_), "shape-mismatch",
            "elements of different algebras");
  }

  AlgebraPtr alg_;
  std::vector<Mat> blocks_;
};

inline AlgebraElement zero_element(const AlgebraPtr& alg) {
  std::vector<Mat> b;
  for (int t = 0; t < alg->blocks(); ++t)
    b.push_back(Mat::Zero(alg->block_dim(t), alg->block_dim(t)));
  return {alg, std::move(b)};
}

inline AlgebraElement unit_element(const AlgebraPtr& alg) {
  std::vector<Mat> b;
  for (int t = 0; t < alg->blocks(); ++t)
    b.push_back(Mat::Identity(alg->block_dim(t), alg->block_dim(t)));
  return {alg, std::move(b)};
}

/// k-th matrix unit in the basis order of Algebra::basis_index.
inline AlgebraElement basis_element(const AlgebraPtr& alg, int k) {
  auto e = zero_element(alg);
  const auto ix = alg->basis_index(k);
  e.block(ix.block)(ix.row, ix.col) = 1.0;
  return e;
}

inline AlgebraElement element_from_vec(const AlgebraPtr& alg, const Vec& v) {
  require(v.size() == alg->vs_dim(), "invalid-shape", "coordinate length mismatch");
  auto e = zero_element(alg);
  int k = 0;
  for (int t = 0; t < alg->blocks(); ++t) {
    const int n = alg->block_dim(t);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) e.block(t)(i, j) = v(k++);
  }
  return e;
}

/// Faithful trace tau(a) = sum of block traces.  tau(a* a) equals the
/// squared Euclidean length of vec(a), which is what makes the
/// coordinate scalarization isometric.
inline cplx faithful_trace(const AlgebraElement& a) { return a.trace(); }

inline double hermiticity_defect(const AlgebraElement& a) {
  return (a - a.adjoint()).norm();
}

/// Positivity in the C*-sense.  Throws on a non-Hermitian input: the
/// question is not meaningful there and silently answering would mask
/// caller bugs.
inline bool is_positive(const AlgebraElement& a, double tol = 1e-9) {
  const double scale = 1.0 + a.norm();
  const double herm = hermiticity_defect(a);
  if (herm > tol * scale)
    throw Error("hermiticity",
                "element is not self-adjoint (defect " + std::to_string(herm) + ")");
  for (int t = 0; t < a.algebra()->blocks(); ++t) {
    auto [lam, u] = detail::hermitian_eig(a.block(t));
    if (lam.size() && lam(0) < -tol * scale) return false;
  }
  return true;
}

/// Matrix of left multiplication b -> a b on coordinate vectors.
inline Mat left_mult_matrix(const AlgebraElement& a) {
  const auto& alg = a.algebra();
  Mat m = Mat::Zero(alg->vs_dim(), alg->vs_dim());
  for (int t = 0; t < alg->blocks(); ++t) {
    const int n = alg->block_dim(t);
    m.block(alg->vs_offset(t), alg->vs_offset(t), n * n, n * n) =
        detail::kron_identity_right(a.block(t), n);
  }
  return m;
}

/// Matrix of right multiplication b -> b a on coordinate vectors.
inline Mat right_mult_matrix(const AlgebraElement& a) {
  const auto& alg = a.algebra();
  Mat m = Mat::Zero(alg->vs_dim(), alg->vs_dim());
  for (int t = 0; t < alg->blocks(); ++t) {
    const int n = alg->block_dim(t);
    // (x a)_{ij} = sum_k x_{ik} a_{kj}: I (x) a^T in row-major coords.
    Mat blk = Mat::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) blk(i * n + j, i * n + k) = a.block(t)(k, j);
    m.block(alg->vs_offset(t), alg->vs_offset(t), n * n, n * n) = blk;
  }
  return m;
}

/// f applied blockwise through Hermitian functional calculus.  `floor`
/// guards functions that blow up at 0 (callers pass the inverse-sqrt
/// floor); eigenvalues at or below floor * max(lambda_max, 1) raise.
template <typename F>
inline AlgebraElement hermitian_calculus(const AlgebraElement& a, F&& f,
                                         double floor_rel = -1.0) {
  double top = 0.0;
  std::vector<std::pair<RVec, Mat>> eigs;
  for (int t = 0; t < a.algebra()->blocks(); ++t) {
    eigs.push_back(detail::hermitian_eig(a.block(t)));
    if (eigs.back().first.size())
      top = std::max(top, eigs.back().first(eigs.back().first.size() - 1));
  }
  auto out = zero_element(a.algebra());
  for (int t = 0; t < a.algebra()->blocks(); ++t) {
    auto& [lam, u] = eigs[t];
    Vec flam(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (floor_rel >= 0.0 && lam(i) <= floor_rel * std::max(top, 1.0))
        throw Error("generator-deficiency",
                    "eigenvalue " + std::to_string(lam(i)) +
                        " below invertibility floor");
      flam(i) = f(lam(i));
    }
    out.block(t) = u * flam.asDiagonal() * u.adjoint();
  }
  return out;
}

/// h^{-1/2} for positive invertible h; refuses near-singular input.
inline AlgebraElement inv_sqrt(const AlgebraElement& h, double floor_rel = 1e-12) {
  return hermitian_calculus(
      h, [](double x) { return 1.0 / std::sqrt(x); }, floor_rel);
}

}  // namespace morita
