#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "morita/cpmap.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace morita;
using testsupport::inflated_representation;
using testsupport::left_regular;
using testsupport::random_cp_map;
using testsupport::random_element;
using testsupport::random_map;
using testsupport::random_module_element;
using testsupport::scalar_map;

namespace {

/// Scalar value of a map on a free rank-one module over the scalars.
cplx scalar_of(const ModuleMap& m, int i, int j) {
  return m.entry(i, j).block(0)(0, 0);
}

/// psi(d) = d_22 on M_2, a compression onto the second basis vector.
CPMap corner_compression(const AlgebraPtr& m2, const AlgebraPtr& scalars) {
  auto f = free_module(scalars, 1);
  std::vector<ModuleMap> table(4, zero_map(f, f));
  table[3] = scalar_map(f, Mat::Ones(1, 1));
  return make_cp_map(m2, f, std::move(table));
}

/// Rank-one projective carrier over the scalars as a C-C bimodule.
BimodulePtr line_bimodule(const AlgebraPtr& scalars) {
  const auto half = unit_element(scalars) * cplx(0.5);
  auto carrier = make_module(scalars, 2, {{half, half}, {half, half}});
  return make_bimodule(scalars, carrier, {identity_map(carrier)});
}

}  // namespace

TEST_CASE("complete positivity is decided by the block Gram") {
  auto scalars = make_algebra({1});
  auto m2 = make_algebra({2});
  std::mt19937_64 rng(83);

  SECTION("the identity on the scalars") {
    auto f = free_module(scalars, 1);
    auto phi = make_cp_map(scalars, f, {identity_map(f)});
    CHECK(verify_cp_map(phi).worst() <= 1e-12);
  }

  SECTION("the normalized trace of M2") {
    auto f = free_module(scalars, 1);
    std::vector<ModuleMap> table(4, zero_map(f, f));
    table[0] = scalar_map(f, Mat(0.5 * Mat::Ones(1, 1)));
    table[3] = scalar_map(f, Mat(0.5 * Mat::Ones(1, 1)));
    auto phi = make_cp_map(m2, f, std::move(table));
    const auto cert = verify_cp_map(phi);
    CHECK(cert.residual("hermitian") <= 1e-12);
    CHECK(cert.residual("completely-positive") <= 1e-12);
  }

  SECTION("the transpose map is positive but not completely positive") {
    auto f = free_module(scalars, 2);
    std::vector<ModuleMap> table;
    for (int w = 0; w < 4; ++w) {
      const auto ix = m2->basis_index(w);
      Mat r = Mat::Zero(2, 2);
      r(ix.col, ix.row) = 1.0;
      table.push_back(scalar_map(f, r));
    }
    try {
      make_cp_map(m2, f, std::move(table));
      FAIL("transpose should not validate");
    } catch (const Error& e) {
      CHECK(e.kind() == "not-cp");
      CHECK(e.certificate().residual("completely-positive") > 0.4);
      CHECK(e.certificate().residual("hermitian") <= 1e-12);
    }
  }

  SECTION("a non-hermitian table is reported") {
    auto f = free_module(scalars, 2);
    std::vector<ModuleMap> table;
    for (int w = 0; w < 4; ++w) {
      const auto ix = m2->basis_index(w);
      Mat r = Mat::Zero(2, 2);
      if (w != 2) r(ix.row, ix.col) = 1.0;  // drop e21, keep e12
      table.push_back(scalar_map(f, r));
    }
    const auto cert = verify_cp_map({m2, f, std::move(table)});
    CHECK(cert.residual("hermitian") > 0.1);
  }

  SECTION("compressions of representations are completely positive") {
    for (auto dims : {std::vector<int>{2}, std::vector<int>{1, 1}, std::vector<int>{2, 1}}) {
      auto d = make_algebra(dims);
      auto f = free_module(m2, 2);
      auto psi = random_cp_map(d, f, std::vector<int>(dims.size(), 1), rng);
      CHECK(verify_cp_map(psi).passed());
    }
  }
}

TEST_CASE("ksgns dilations compress back to the map") {
  auto scalars = make_algebra({1});
  auto m2 = make_algebra({2});
  std::mt19937_64 rng(89);

  SECTION("the identity on the scalars dilates to itself") {
    auto f = free_module(scalars, 1);
    auto d = ksgns(make_cp_map(scalars, f, {identity_map(f)}));
    CHECK(d.module()->complex_dim() == 1);
    CHECK(d.cert.worst() <= 1e-12);
    CHECK((d.v.adjoint().compose(d.v) - identity_map(f)).norm() <= 1e-12);
  }

  SECTION("the normalized trace needs all four dimensions") {
    auto f = free_module(scalars, 1);
    std::vector<ModuleMap> table(4, zero_map(f, f));
    table[0] = scalar_map(f, Mat(0.5 * Mat::Ones(1, 1)));
    table[3] = scalar_map(f, Mat(0.5 * Mat::Ones(1, 1)));
    auto d = ksgns(make_cp_map(m2, f, std::move(table)));
    CHECK(d.module()->complex_dim() == 4);
    CHECK(d.cert.passed());
  }

  SECTION("the zero map dilates to the zero module") {
    auto f = free_module(scalars, 1);
    std::vector<ModuleMap> table(4, zero_map(f, f));
    auto d = ksgns(make_cp_map(m2, f, std::move(table)));
    CHECK(d.module()->complex_dim() == 0);
    CHECK(d.v.norm() <= 1e-12);
    CHECK(d.cert.passed());
  }

  SECTION("generators are the representation applied to the embedding") {
    for (auto dims : {std::vector<int>{2}, std::vector<int>{2, 1}}) {
      auto d_alg = make_algebra(dims);
      auto f = free_module(m2, 1);
      auto psi = random_cp_map(d_alg, f, std::vector<int>(dims.size(), 1), rng);
      auto d = ksgns(psi);
      CHECK(d.cert.passed());

      const auto a = random_element(d_alg, rng);
      const auto x = random_module_element(f, rng);
      CHECK((d.embed(a, x) - d.rep.act(a).apply(d.v.apply(x))).norm() < 1e-9);

      const auto back = d.v.adjoint().compose(d.rep.act(a)).compose(d.v);
      CHECK((back - psi.apply(a)).norm() < 1e-8 * (1.0 + psi.apply(a).norm()));
    }
  }

  SECTION("dimension agrees with the brute-force oracle over the scalars") {
    for (auto dims : {std::vector<int>{2}, std::vector<int>{2, 1}}) {
      auto d_alg = make_algebra(dims);
      auto f = free_module(scalars, 2);
      for (int trial = 0; trial < 4; ++trial) {
        auto psi = random_cp_map(d_alg, f, std::vector<int>(dims.size(), 1), rng);
        auto dil = ksgns(psi);

        auto apply_block = [&](int s, const Mat& x) {
          auto a = zero_element(d_alg);
          a.block(s) = x;
          const auto val = psi.apply(a);
          Mat out(2, 2);
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out(i, j) = scalar_of(val, i, j);
          return out;
        };
        CHECK(dil.module()->complex_dim() ==
              oracle::minimal_dilation_dim(dims, 2, apply_block));
      }
    }
  }

  SECTION("the block Gram test agrees with the Choi matrix") {
    auto f = free_module(scalars, 2);
    auto rep = inflated_representation(m2, scalars, {2}, rng);
    auto w1 = random_map(f, rep.space, rng);
    auto w2 = random_map(f, rep.space, rng);
    for (double eps : {0.0, 0.05, 0.4, 2.0}) {
      std::vector<ModuleMap> table;
      for (int u = 0; u < 4; ++u)
        table.push_back(w1.adjoint().compose(rep.table[u]).compose(w1) -
                        w2.adjoint().compose(rep.table[u]).compose(w2) * cplx(eps));
      CPMap phi{m2, f, table};

      auto apply = [&](const Mat& x) {
        auto a = zero_element(m2);
        a.block(0) = x;
        const auto val = phi.apply(a);
        Mat out(2, 2);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) out(i, j) = scalar_of(val, i, j);
        return out;
      };
      const Mat choi = oracle::choi(2, 2, apply);
      Eigen::SelfAdjointEigenSolver<Mat> es(choi);
      const double low = es.eigenvalues()(0);
      const double top = es.eigenvalues()(es.eigenvalues().size() - 1);
      const bool choi_psd = low >= -1e-9 * std::max(top, 1.0);
      CHECK(verify_cp_map(phi).passed() == choi_psd);
    }
  }
}

TEST_CASE("the uniqueness unitary identifies minimal dilations") {
  auto scalars = make_algebra({1});
  auto m2 = make_algebra({2});
  std::mt19937_64 rng(97);

  auto f = free_module(m2, 1);
  auto psi = random_cp_map(make_algebra({2, 1}), f, {1, 1}, rng);
  auto d1 = ksgns(psi);
  REQUIRE(d1.cert.passed());

  SECTION("against itself it is the identity") {
    auto u = ksgns_unitary(d1, d1.rep, d1.v);
    CHECK((u - identity_map(d1.module())).norm() <= 1e-9);
  }

  SECTION("a conjugated dilation recovers the conjugating unitary") {
    auto a = random_map(d1.module(), d1.module(), rng);
    auto h = (a + a.adjoint()) * cplx(0.5);
    auto q = hermitian_map_calculus(
        h, [](double l) { return std::exp(cplx(0.0, 1.0) * l); });
    REQUIRE((q.adjoint().compose(q) - identity_map(d1.module())).norm() < 1e-9);

    std::vector<ModuleMap> table;
    for (const auto& t : d1.rep.table)
      table.push_back(q.compose(t).compose(q.adjoint()));
    Representation rep2{psi.source, d1.module(), std::move(table)};
    auto w2 = q.compose(d1.v);

    auto u = ksgns_unitary(d1, rep2, w2);
    CHECK((u - q).norm() <= 1e-8);
    CHECK((u.adjoint().compose(u) - identity_map(d1.module())).norm() <= 1e-8);
    double inter = 0.0;
    for (int w = 0; w < psi.source->vs_dim(); ++w)
      inter = std::max(inter, (rep2.table[w] -
                               u.compose(d1.rep.table[w]).compose(u.adjoint()))
                                  .norm());
    CHECK(inter <= 1e-8);
  }

  SECTION("a padded dilation is rejected for non-minimality") {
    const auto& mod = d1.module();
    const int m = mod->ambient_rank();
    const auto& base = mod->base();
    std::vector<std::vector<AlgebraElement>> p2(
        2 * m, std::vector<AlgebraElement>(2 * m, zero_element(base)));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        p2[i][j] = mod->p(i, j);
        p2[m + i][m + j] = mod->p(i, j);
      }
    auto big = make_module(base, 2 * m, std::move(p2));

    std::vector<ModuleMap> table;
    for (const auto& t : d1.rep.table) {
      std::vector<std::vector<AlgebraElement>> e(
          2 * m, std::vector<AlgebraElement>(2 * m, zero_element(base)));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          e[i][j] = t.entry(i, j);
          e[m + i][m + j] = t.entry(i, j);
        }
      table.push_back(ModuleMap(big, big, std::move(e)));
    }
    Representation rep2{psi.source, big, std::move(table)};

    std::vector<std::vector<AlgebraElement>> we(
        2 * m, std::vector<AlgebraElement>(f->ambient_rank(), zero_element(base)));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < f->ambient_rank(); ++j) we[i][j] = d1.v.entry(i, j);
    auto w2 = ModuleMap(f, big, std::move(we));

    try {
      ksgns_unitary(d1, rep2, w2);
      FAIL("padded dilation should be rejected");
    } catch (const Error& e) {
      CHECK(e.kind() == "rank-mismatch");
    }
  }

  SECTION("wrong compression data is rejected") {
    try {
      ksgns_unitary(d1, d1.rep, d1.v * cplx(2.0));
      FAIL("scaled V does not dilate the same map");
    } catch (const Error& e) {
      CHECK(e.kind() == "not-a-dilation");
    }
  }
}

TEST_CASE("inducing a cp map across a bimodule") {
  auto scalars = make_algebra({1});
  auto m2 = make_algebra({2});
  std::mt19937_64 rng(101);

  SECTION("columns turn the identity into matrix entries") {
    auto f = free_module(scalars, 1);
    auto psi = make_cp_map(scalars, f, {identity_map(f)});
    auto y = matrix_column_bimodule(scalars, 2);
    const Mat cb = y->carrier()->basis();
    std::vector<ModuleElement> u;
    for (int i = 0; i < 2; ++i)
      u.push_back(element_from_vec(y->carrier(), Vec(cb.col(i))));

    // This family is normalized on the left: sum _C<u_i, u_i> = 1_C.
    auto s = y->left_inner(u[0], u[0]) + y->left_inner(u[1], u[1]);
    CHECK((s - unit_element(y->left())).norm() <= 1e-12);

    auto ind = induce_cp_map(psi, y, u);
    for (int w = 0; w < 4; ++w) {
      const auto ix = m2->basis_index(w);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const cplx expect = (i == ix.row && j == ix.col) ? 1.0 : 0.0;
          CHECK(std::abs(scalar_of(ind.phi.table[w], i, j) - expect) <= 1e-12);
        }
    }

    CHECK((ind.u.adjoint().compose(ind.u) - identity_map(ind.dilation.module()))
              .norm() <= 1e-10);
    CHECK((ind.u.compose(ind.u.adjoint()) - identity_map(ind.induced.rep.space))
              .norm() <= 1e-10);
    double inter = 0.0;
    for (int w = 0; w < 4; ++w)
      inter = std::max(
          inter, (ind.dilation.rep.table[w] - ind.u.adjoint()
                                                  .compose(ind.induced.rep.table[w])
                                                  .compose(ind.u))
                     .norm());
    CHECK(inter <= 1e-9);

    CHECK(verify_sme_witness(ind.witness).worst() <= 1e-9);
    CHECK(verify_cp_sme(ind.phi, psi, y, ind.witness.maps).passed());
  }

  SECTION("the trivial bimodule with the unit frame returns the map") {
    auto f = free_module(m2, 1);
    auto psi = random_cp_map(m2, f, {1}, rng);
    auto y0 = trivial_bimodule(m2);
    auto ind = induce_cp_map(psi, y0, {testsupport::unit_of(y0)});
    for (int w = 0; w < 4; ++w)
      CHECK((ind.phi.table[w] - psi.table[w]).norm() <= 1e-12);
    CHECK(verify_sme_witness(ind.witness).worst() <= 1e-8);
  }

  SECTION("the zero map induces the zero map") {
    auto f = free_module(scalars, 1);
    auto psi = make_cp_map(scalars, f, {zero_map(f, f)});
    auto y = matrix_column_bimodule(scalars, 2);
    auto ind = induce_cp_map(psi, y, left_basis(y));
    for (const auto& t : ind.phi.table) CHECK(t.norm() <= 1e-12);
    CHECK(ind.dilation.module()->complex_dim() == 0);
    CHECK(verify_sme_witness(ind.witness).passed());
  }

  SECTION("families that do not generate on the left are rejected") {
    auto c2 = make_algebra({1, 1});
    auto f = free_module(c2, 1);
    auto psi = random_cp_map(c2, f, {1, 1}, rng);
    auto y0 = trivial_bimodule(c2);
    const auto first_block_unit =
        ModuleElement(y0->carrier(), {basis_element(c2, 0)});
    try {
      induce_cp_map(psi, y0, {first_block_unit});
      FAIL("a one-block family cannot generate");
    } catch (const Error& e) {
      CHECK(e.kind() == "not-a-left-basis");
    }
  }

  SECTION("a row bimodule with a scalar left algebra") {
    // Left algebra C = scalars: the complex span of the family must be
    // the whole carrier, so a single generator cannot work even though
    // it generates over the right algebra.
    auto rows = dual_bimodule(matrix_column_bimodule(scalars, 2)).dual;
    auto psi = corner_compression(m2, scalars);

    auto gens = module_generators(rows->carrier());
    try {
      induce_cp_map(psi, rows, {gens.front()});
      FAIL("one row cannot span over the scalars");
    } catch (const Error& e) {
      CHECK(e.kind() == "not-a-left-basis");
    }

    auto ind = induce_cp_map(psi, rows, left_basis(rows));
    CHECK((ind.u.adjoint().compose(ind.u) - identity_map(ind.dilation.module()))
              .norm() <= 1e-8);
    CHECK((ind.u.compose(ind.u.adjoint()) - identity_map(ind.induced.rep.space))
              .norm() <= 1e-8);
    CHECK(verify_sme_witness(ind.witness).worst() <= 1e-8);
  }

  SECTION("random instances") {
    for (auto dims : {std::vector<int>{1}, std::vector<int>{2}, std::vector<int>{1, 1}}) {
      auto d = make_algebra(dims);
      auto f = free_module(scalars, 2);
      auto psi = random_cp_map(d, f, std::vector<int>(dims.size(), 1), rng);
      auto y = matrix_column_bimodule(d, 2);
      auto ind = induce_cp_map(psi, y, left_basis(y));
      CHECK((ind.u.adjoint().compose(ind.u) - identity_map(ind.dilation.module()))
                .norm() <= 1e-8);
      CHECK(verify_sme_witness(ind.witness).worst() <= 1e-8);
      CHECK(verify_cp_sme(ind.phi, psi, y, ind.witness.maps).passed());
    }
  }
}

TEST_CASE("base change of a cp map") {
  auto scalars = make_algebra({1});
  auto m2 = make_algebra({2});
  std::mt19937_64 rng(103);

  SECTION("the trivial bimodule changes nothing") {
    auto f = free_module(m2, 1);
    auto phi = random_cp_map(make_algebra({1, 1}), f, {1, 1}, rng);
    auto t = tensor_cp_map(phi, trivial_bimodule(m2));
    CHECK(t.phi.space->complex_dim() == f->complex_dim());
    CHECK(t.cert.passed());

    const auto one = testsupport::unit_of(trivial_bimodule(m2));
    const auto x = random_module_element(f, rng);
    const auto a = random_element(phi.source, rng);
    CHECK((t.phi.apply(a).apply(t.space.embed(x, one)) -
           t.space.embed(phi.apply(a).apply(x), one))
              .norm() < 1e-9);
  }

  SECTION("a rank-one line preserves dimensions") {
    auto f = free_module(scalars, 1);
    auto phi = make_cp_map(scalars, f, {identity_map(f)});
    auto t = tensor_cp_map(phi, line_bimodule(scalars));
    CHECK(t.phi.space->complex_dim() == 1);
    CHECK(t.cert.passed());
  }

  SECTION("columns halve the dimension of a module over M2") {
    auto f = free_module(m2, 1);
    auto phi = random_cp_map(make_algebra({2}), f, {1}, rng);
    auto d = ksgns(phi);
    auto z = matrix_column_bimodule(scalars, 2);  // left algebra is M2
    auto t = tensor_cp_map(phi, z);
    CHECK(same_algebra(t.phi.space->base(), scalars));
    CHECK(2 * t.dilation_rep.tensor.module()->complex_dim() ==
          d.module()->complex_dim());
    CHECK(t.cert.passed());
  }

  SECTION("the tensored dilation matches a fresh dilation") {
    for (int trial = 0; trial < 2; ++trial) {
      auto f = free_module(m2, 1);
      auto phi = random_cp_map(make_algebra({2, 1}), f, {1, 1}, rng);
      auto z = matrix_column_bimodule(scalars, 2);
      auto t = tensor_cp_map(phi, z);
      REQUIRE(t.cert.passed());

      auto fresh = ksgns(t.phi);
      auto u = ksgns_unitary(fresh, t.dilation_rep.rep, t.v);
      CHECK((u.adjoint().compose(u) - identity_map(fresh.module())).norm() <= 1e-8);
      CHECK((u.compose(u.adjoint()) - identity_map(t.dilation_rep.rep.space))
                .norm() <= 1e-8);
      double inter = 0.0;
      for (int w = 0; w < phi.source->vs_dim(); ++w)
        inter = std::max(
            inter,
            (t.dilation_rep.rep.table[w] -
             u.compose(fresh.rep.table[w]).compose(u.adjoint()))
                .norm());
      CHECK(inter <= 1e-8);
    }
  }
}

TEST_CASE("inducing along a bimodule and back lands in the same class") {
  auto scalars = make_algebra({1});
  std::mt19937_64 rng(107);

  for (auto dims : {std::vector<int>{1}, std::vector<int>{1, 1}}) {
    auto d = make_algebra(dims);
    auto f = free_module(scalars, 2);
    auto psi = random_cp_map(d, f, std::vector<int>(dims.size(), 1), rng);
    auto y = matrix_column_bimodule(d, 2);
    auto ydual = dual_bimodule(y).dual;

    auto ind1 = induce_cp_map(psi, y, left_basis(y));
    auto ind2 = induce_cp_map(ind1.phi, ydual, left_basis(ydual));
    auto comp = witness_compose(ind2.witness, ind1.witness);
    CHECK(verify_sme_witness(comp.witness).worst() <= 1e-8);
    CHECK(same_representation(comp.witness.rep2, ksgns(psi).rep));
  }
}

TEST_CASE("transferring a cp map across two bimodules") {
  auto scalars = make_algebra({1});
  auto m2 = make_algebra({2});
  std::mt19937_64 rng(109);

  SECTION("trivial bimodules return the map") {
    auto f = free_module(scalars, 2);
    auto psi = random_cp_map(scalars, f, {2}, rng);
    auto tr = transfer_cp_class(psi, trivial_bimodule(scalars),
                                trivial_bimodule(scalars));
    CHECK(tr.cert.passed());
    CHECK(tr.result().space->complex_dim() == f->complex_dim());
  }

  SECTION("roundtrips along the conjugates certify the class") {
    struct Instance {
      std::vector<int> d_dims;
      int f_rank;
      int y_cols;
      bool line_z;
    };
    const Instance instances[] = {
        {{1}, 1, 2, true},  {{1}, 2, 2, false}, {{1, 1}, 1, 2, true},
        {{1}, 1, 3, false}, {{1, 1}, 2, 2, false},
    };
    int seed = 113;
    for (const auto& inst : instances) {
      std::mt19937_64 local(seed++);
      auto d = make_algebra(inst.d_dims);
      auto f = free_module(scalars, inst.f_rank);
      auto psi =
          random_cp_map(d, f, std::vector<int>(inst.d_dims.size(), 1), local);
      auto y = matrix_column_bimodule(d, inst.y_cols);
      auto z = inst.line_z ? line_bimodule(scalars)
                           : dual_bimodule(matrix_column_bimodule(scalars, 2)).dual;

      auto rt = transfer_roundtrip(psi, y, z);
      CHECK(rt.forward.cert.passed());
      CHECK(rt.back.cert.passed());
      CHECK(rt.cert.worst() <= 1e-8);
      CHECK(same_representation(rt.witness.rep2, ksgns(psi).rep));
    }
  }

  SECTION("a matrix base on the original side") {
    auto f = free_module(m2, 1);
    auto psi = random_cp_map(scalars, f, {2}, rng);
    auto y = matrix_column_bimodule(scalars, 2);
    auto z = matrix_column_bimodule(scalars, 2);  // left algebra is M2

    auto rt = transfer_roundtrip(psi, y, z);
    CHECK(rt.forward.cert.passed());
    CHECK(rt.back.cert.passed());
    CHECK(rt.cert.worst() <= 1e-8);
  }
}
