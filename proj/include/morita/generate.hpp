#pragma once

// Seeded random instances for property sweeps.  Everything here is a
// pure function of the generator state, so a fixed seed reproduces the
// same algebras, maps and bimodules bit for bit.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "morita/bimodule.hpp"
#include "morita/cpmap.hpp"

namespace morita {

/// Desk-scale limits for generated instances.
struct GenCaps {
  int rep_dim = 16;
  int module_dim = 32;
};

namespace genutil {

inline double gauss(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) / 9007199254740993.0;
  const double u2 = static_cast<double>(rng() >> 11) / 9007199254740992.0;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Mat ginibre(int rows, int cols, std::mt19937_64& rng) {
  Mat g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = cplx(gauss(rng), gauss(rng));
  return g;
}

inline Mat haar_unitary(int n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Mat> qr(ginibre(n, n, rng));
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    q.col(j) *= (std::abs(d) > 0.0) ? d / std::abs(d) : cplx(1.0);
  }
  return q;
}

inline int uniform_int(int lo, int hi, std::mt19937_64& rng) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline void check_rep_cap(const std::vector<int>& dims, const GenCaps& caps,
                          const std::string& what) {
  int total = 0;
  for (int d : dims) {
    require(d >= 1, "invalid-shape", what + " block dimensions must be positive");
    total += d;
  }
  require(total >= 1, "invalid-shape", what + " needs at least one block");
  require(total <= caps.rep_dim, "cap-exceeded",
          "cap exceeded: " + what + " representation dimension " +
              std::to_string(total) + " > " + std::to_string(caps.rep_dim));
}

}  // namespace genutil

inline AlgebraElement random_element(const AlgebraPtr& alg,
                                     std::mt19937_64& rng) {
  auto e = zero_element(alg);
  for (int t = 0; t < alg->blocks(); ++t)
    e.block(t) = genutil::ginibre(alg->block_dim(t), alg->block_dim(t), rng);
  return e;
}

/// Random module map between projective modules, compressed so its
/// matrix satisfies m = q m p.
inline ModuleMap random_module_map(const ModuleRef& src, const ModuleRef& tgt,
                                   std::mt19937_64& rng) {
  std::vector<std::vector<AlgebraElement>> entries;
  for (int i = 0; i < tgt->ambient_rank(); ++i) {
    std::vector<AlgebraElement> row;
    for (int j = 0; j < src->ambient_rank(); ++j)
      row.push_back(random_element(src->base(), rng));
    entries.push_back(std::move(row));
  }
  ModuleMap raw(src, tgt, std::move(entries));
  return identity_map(tgt).compose(raw).compose(identity_map(src));
}

/// Multiplicity-one block-diagonal representation of d on a free module
/// over base, conjugated by a scalar Haar unitary.
inline Representation random_representation(const AlgebraPtr& d,
                                            const AlgebraPtr& base,
                                            const std::vector<int>& mults,
                                            std::mt19937_64& rng) {
  int n = 0;
  for (int t = 0; t < d->blocks(); ++t) n += d->block_dim(t) * mults[t];
  const Mat u = genutil::haar_unitary(n, rng);
  auto mod = free_module(base, n);
  const auto one = unit_element(base);

  std::vector<ModuleMap> table;
  for (int w = 0; w < d->vs_dim(); ++w) {
    const auto ix = d->basis_index(w);
    Mat r = Mat::Zero(n, n);
    int off = 0;
    for (int t = 0; t < ix.block; ++t) off += d->block_dim(t) * mults[t];
    const int m = mults[ix.block];
    for (int k = 0; k < m; ++k)
      r(off + ix.row * m + k, off + ix.col * m + k) = 1.0;
    const Mat scalar = u * r * u.adjoint();
    std::vector<std::vector<AlgebraElement>> entries;
    for (int i = 0; i < n; ++i) {
      std::vector<AlgebraElement> row;
      for (int j = 0; j < n; ++j) row.push_back(one * scalar(i, j));
      entries.push_back(std::move(row));
    }
    table.push_back(ModuleMap(mod, mod, std::move(entries)));
  }
  return make_representation(d, mod, std::move(table));
}

/// Random CP map d -> B_B(F) with F = free(B, f_rank), built as a
/// compression psi(x) = W* pi(x) W of a random representation.  CP by
/// construction; validated anyway.
inline CPMap gen_cp_map(const std::vector<int>& d_dims,
                        const std::vector<int>& b_dims, int f_rank,
                        std::mt19937_64& rng, const GenCaps& caps = {},
                        const Tolerances& tt = {}) {
  genutil::check_rep_cap(d_dims, caps, "source algebra");
  genutil::check_rep_cap(b_dims, caps, "base algebra");
  require(f_rank >= 1, "invalid-shape", "module rank must be positive");
  auto d = make_algebra(d_dims);
  auto b = make_algebra(b_dims);
  require(f_rank * b->rep_dim() <= caps.module_dim, "cap-exceeded",
          "cap exceeded: module dimension " +
              std::to_string(f_rank * b->rep_dim()) + " > " +
              std::to_string(caps.module_dim));

  std::vector<int> mults;
  for (int t = 0; t < d->blocks(); ++t)
    mults.push_back(genutil::uniform_int(1, 2, rng));
  auto rep = random_representation(d, b, mults, rng);
  auto f = free_module(b, f_rank);
  auto w = random_module_map(f, rep.space, rng);
  std::vector<ModuleMap> table;
  for (int u = 0; u < d->vs_dim(); ++u)
    table.push_back(w.adjoint().compose(rep.table[u]).compose(w));
  return make_cp_map(d, f, std::move(table), tt);
}

/// Random equivalence bimodule over b: the carrier is p B^n for a random
/// full projection p in M_n(B), and the left algebra is the corner
/// p M_n(B) p, isomorphic to one matrix block per block of B.  The left
/// action table lists the corner's matrix units v_k v_l* over an
/// orthonormal basis of each range.
inline BimodulePtr gen_bimodule(const std::vector<int>& b_dims, int n,
                                std::mt19937_64& rng, const GenCaps& caps = {},
                                const Tolerances& tt = {}) {
  genutil::check_rep_cap(b_dims, caps, "base algebra");
  require(n >= 1, "invalid-shape", "ambient rank must be positive");
  auto b = make_algebra(b_dims);
  require(n * b->rep_dim() <= caps.module_dim, "cap-exceeded",
          "cap exceeded: module dimension " + std::to_string(n * b->rep_dim()) +
              " > " + std::to_string(caps.module_dim));

  const int blocks = b->blocks();
  const int budget = std::max(1, caps.rep_dim / blocks);

  std::vector<int> ranks;
  std::vector<Mat> frames;  // first r_t columns of the Haar unitary
  std::vector<std::vector<AlgebraElement>> p(
      n, std::vector<AlgebraElement>(n, zero_element(b)));
  for (int t = 0; t < blocks; ++t) {
    const int bt = b->block_dim(t);
    const int nt = n * bt;
    const int rt = genutil::uniform_int(1, std::min(nt, budget), rng);
    const Mat u = genutil::haar_unitary(nt, rng);
    const Mat frame = u.leftCols(rt);
    const Mat proj = frame * frame.adjoint();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        p[i][j].block(t) = proj.block(i * bt, j * bt, bt, bt);
    ranks.push_back(rt);
    frames.push_back(frame);
  }
  auto carrier = make_module(b, n, std::move(p));
  auto left = make_algebra(ranks);

  std::vector<ModuleMap> action;
  for (int w = 0; w < left->vs_dim(); ++w) {
    const auto ix = left->basis_index(w);
    const int bt = b->block_dim(ix.block);
    const Mat unit =
        frames[ix.block].col(ix.row) * frames[ix.block].col(ix.col).adjoint();
    std::vector<std::vector<AlgebraElement>> entries(
        n, std::vector<AlgebraElement>(n, zero_element(b)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        entries[i][j].block(ix.block) = unit.block(i * bt, j * bt, bt, bt);
    action.push_back(ModuleMap(carrier, carrier, std::move(entries)));
  }
  return make_bimodule(left, carrier, std::move(action), tt);
}

}  // namespace morita
