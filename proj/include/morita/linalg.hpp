#pragma once

// Dense complex linear algebra helpers shared by every layer of the
// toolkit: Hermitian eigensolves with relative cutoffs, rank decisions,
// spectral norms.  Everything downstream funnels its numerics through
// these few routines so that tolerance semantics stay in one place.

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

namespace morita {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

/// Numerical knobs used across the toolkit.  `tol` gates certificate
/// residuals, `rank_cutoff` gates Gram-eigenvalue rank decisions, and
/// `floor` gates inverse square roots (below it we refuse to invert).
struct Tolerances {
  double tol = 1e-9;
  double rank_cutoff = 1e-10;
  double floor = 1e-12;
};

namespace detail {

inline Mat hermitize(const Mat& a) { return 0.5 * (a + a.adjoint()); }

/// Eigendecomposition of the Hermitian part of `a`; ascending eigenvalues.
inline std::pair<RVec, Mat> hermitian_eig(const Mat& a) {
  if (a.rows() == 0) return {RVec(0), Mat(0, 0)};
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(a));
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double spectral_norm(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  // ||a|| = sqrt(lambda_max(a* a)); the Gram form keeps us on the
  // self-adjoint solver, which is cheap and deterministic.
  const Mat g = (a.rows() <= a.cols()) ? Mat(a * a.adjoint()) : Mat(a.adjoint() * a);
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(g));
  const double top = es.eigenvalues().tail(1)(0);
  return top > 0.0 ? std::sqrt(top) : 0.0;
}

/// Rank of the span of the columns of `m`: eigenvalues of the smaller
/// Gram form above cutoff * max(lambda_max, 1).
inline int rank_of_span(const Mat& m, double cutoff) {
  if (m.cols() == 0 || m.rows() == 0) return 0;
  auto [lam, u] = hermitian_eig(
      (m.rows() <= m.cols()) ? Mat(m * m.adjoint()) : Mat(m.adjoint() * m));
  const double top = lam.size() ? lam(lam.size() - 1) : 0.0;
  const double gate = cutoff * std::max(top, 1.0);
  int r = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > gate) ++r;
  return r;
}

/// Orthonormal basis of the column space of a (numerical) orthogonal
/// projection: deterministic column-pivoted QR, pivots gated at 1/2.
inline Mat projection_range_basis(const Mat& p) {
  if (p.rows() == 0) return Mat(0, 0);
  Eigen::ColPivHouseholderQR<Mat> qr(p);
  qr.setThreshold(0.5);
  const Eigen::Index r = qr.rank();
  Mat q = qr.householderQ() * Mat::Identity(p.rows(), r);
  return q;
}

inline Mat kron_identity_right(const Mat& a, int n) {
  // a (x) I_n
  Mat out = Mat::Zero(a.rows() * n, a.cols() * n);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (int k = 0; k < n; ++k) out(i * n + k, j * n + k) = a(i, j);
  return out;
}

}  // namespace detail
}  // namespace morita
