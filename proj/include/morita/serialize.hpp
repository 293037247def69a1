#pragma once

// JSON encoding of the toolkit's objects.  Complex numbers are [re, im]
// pairs, matrices are row-major nested arrays, and every decoder
// validates through the same factories the library uses, so a file that
// loads is a file the algorithms accept.

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "morita/algebra.hpp"
#include "morita/certificate.hpp"
#include "morita/module.hpp"

namespace morita {

using json = nlohmann::ordered_json;

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(),
          "parse", "complex numbers are [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const json& j, int rows, int cols) {
  require(j.is_array() && static_cast<int>(j.size()) == rows, "parse",
          "matrix row count mismatch");
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    require(j[i].is_array() && static_cast<int>(j[i].size()) == cols, "parse",
            "matrix column count mismatch");
    for (int c = 0; c < cols; ++c) m(i, c) = complex_from_json(j[i][c]);
  }
  return m;
}

inline json to_json(const AlgebraPtr& alg) {
  return json{{"blocks", alg->block_dims()}};
}

inline json to_json(const AlgebraElement& a) {
  json blocks = json::array();
  for (int t = 0; t < a.algebra()->blocks(); ++t)
    blocks.push_back(to_json(a.block(t)));
  return blocks;
}

inline AlgebraElement element_from_json(const AlgebraPtr& alg, const json& j) {
  require(j.is_array() && static_cast<int>(j.size()) == alg->blocks(),
          "parse", "algebra element needs one matrix per block");
  auto e = zero_element(alg);
  for (int t = 0; t < alg->blocks(); ++t) {
    const int n = alg->block_dim(t);
    e.block(t) = mat_from_json(j[t], n, n);
  }
  return e;
}

/// Matrix over the base algebra: rows of columns of elements.  Used for
/// module projections, module maps and left action tables.
inline json entries_to_json(const std::vector<std::vector<AlgebraElement>>& m) {
  json rows = json::array();
  for (const auto& row : m) {
    json out = json::array();
    for (const auto& e : row) out.push_back(to_json(e));
    rows.push_back(std::move(out));
  }
  return rows;
}

inline std::vector<std::vector<AlgebraElement>> entries_from_json(
    const AlgebraPtr& base, const json& j, int rows, int cols) {
  require(j.is_array() && static_cast<int>(j.size()) == rows, "parse",
          "element matrix row count mismatch");
  std::vector<std::vector<AlgebraElement>> m;
  m.reserve(rows);
  for (int i = 0; i < rows; ++i) {
    require(j[i].is_array() && static_cast<int>(j[i].size()) == cols, "parse",
            "element matrix column count mismatch");
    std::vector<AlgebraElement> row;
    row.reserve(cols);
    for (int c = 0; c < cols; ++c)
      row.push_back(element_from_json(base, j[i][c]));
    m.push_back(std::move(row));
  }
  return m;
}

inline json to_json(const ModuleMap& m) {
  std::vector<std::vector<AlgebraElement>> entries;
  for (int i = 0; i < m.target()->ambient_rank(); ++i) {
    std::vector<AlgebraElement> row;
    for (int j = 0; j < m.source()->ambient_rank(); ++j)
      row.push_back(m.entry(i, j));
    entries.push_back(std::move(row));
  }
  return entries_to_json(entries);
}

inline ModuleMap map_from_json(const ModuleRef& src, const ModuleRef& tgt,
                               const json& j) {
  return {src, tgt,
          entries_from_json(src->base(), j, tgt->ambient_rank(),
                            src->ambient_rank())};
}

inline json to_json(const ModuleElement& x) {
  json out = json::array();
  for (int i = 0; i < x.module()->ambient_rank(); ++i)
    out.push_back(to_json(x.entry(i)));
  return out;
}

inline ModuleElement module_element_from_json(const ModuleRef& mod,
                                              const json& j) {
  require(j.is_array() &&
              static_cast<int>(j.size()) == mod->ambient_rank(),
          "parse", "module element entry count mismatch");
  std::vector<AlgebraElement> entries;
  entries.reserve(j.size());
  for (const auto& e : j) entries.push_back(element_from_json(mod->base(), e));
  return {mod, std::move(entries)};
}

inline json to_json(const ModuleRef& mod, const std::string& base_name) {
  std::vector<std::vector<AlgebraElement>> p;
  bool free = true;
  const auto one = unit_element(mod->base());
  for (int i = 0; i < mod->ambient_rank(); ++i) {
    std::vector<AlgebraElement> row;
    for (int j = 0; j < mod->ambient_rank(); ++j) {
      row.push_back(mod->p(i, j));
      const auto& expect = (i == j) ? one : zero_element(mod->base());
      if ((row.back() - expect).norm() > 1e-12) free = false;
    }
    p.push_back(std::move(row));
  }
  json out{{"base", base_name}};
  if (free) {
    out["free_rank"] = mod->ambient_rank();
  } else {
    out["p"] = entries_to_json(p);
  }
  return out;
}

inline json to_json(const Certificate& cert) {
  json conditions = json::array();
  for (const auto& [name, residual] : cert.conditions)
    conditions.push_back(json{{"condition", name}, {"residual", residual}});
  return json{{"name", cert.name},
              {"tol", cert.tol},
              {"passed", cert.passed()},
              {"conditions", std::move(conditions)}};
}

inline json to_json(const Tolerances& tt) {
  return json{{"tol", tt.tol},
              {"rank_cutoff", tt.rank_cutoff},
              {"floor", tt.floor}};
}

}  // namespace morita
