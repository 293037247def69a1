#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "morita/algebra.hpp"

using namespace morita;

namespace {

// Deterministic pseudo-random elements for property checks.
AlgebraElement random_element(const AlgebraPtr& alg, std::mt19937_64& rng) {
  auto gauss = [&rng]() {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) / 9007199254740993.0;
    const double u2 = static_cast<double>(rng() >> 11) / 9007199254740992.0;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  auto e = zero_element(alg);
  for (int t = 0; t < alg->blocks(); ++t)
    for (int i = 0; i < alg->block_dim(t); ++i)
      for (int j = 0; j < alg->block_dim(t); ++j)
        e.block(t)(i, j) = cplx(gauss(), gauss());
  return e;
}

}  // namespace

TEST_CASE("algebra construction and shape data", "[algebra]") {
  auto c1 = make_algebra({1});
  CHECK(c1->rep_dim() == 1);
  CHECK(c1->vs_dim() == 1);

  auto m2 = make_algebra({2});
  CHECK(m2->rep_dim() == 2);
  CHECK(m2->vs_dim() == 4);

  auto sum = make_algebra({1, 2});
  CHECK(sum->rep_dim() == 3);
  CHECK(sum->vs_dim() == 5);
  CHECK(sum->blocks() == 2);

  CHECK_THROWS_AS(make_algebra({}), Error);
  CHECK_THROWS_AS(make_algebra({0}), Error);
  CHECK_THROWS_AS(make_algebra({2, -1}), Error);
}

TEST_CASE("trace of units and matrix units", "[algebra]") {
  auto m2 = make_algebra({2});
  CHECK(unit_element(m2).trace().real() == Catch::Approx(2.0));
  CHECK(std::abs(basis_element(m2, 1).trace()) == Catch::Approx(0.0));  // e_12

  auto sum = make_algebra({1, 2});
  CHECK(unit_element(sum).trace().real() == Catch::Approx(3.0));
}

TEST_CASE("positivity decisions", "[algebra]") {
  auto m2 = make_algebra({2});
  auto x = zero_element(m2);
  x.block(0) << 0, 1, 1, 0;  // Pauli X: eigenvalues -1, +1
  CHECK_FALSE(is_positive(x));

  auto d = zero_element(m2);
  d.block(0) << 1, 0, 0, 0.25;
  CHECK(is_positive(d));

  auto nh = zero_element(m2);
  nh.block(0) << 0, 1, 0, 0;  // e_12 is not self-adjoint
  CHECK_THROWS_AS(is_positive(nh), Error);
  try {
    is_positive(nh);
  } catch (const Error& e) {
    CHECK(e.kind() == "hermiticity");
  }
}

TEST_CASE("operator norm across blocks", "[algebra]") {
  auto sum = make_algebra({1, 2});
  auto a = zero_element(sum);
  a.block(0)(0, 0) = 3.0;
  a.block(1) << 0, 2, 0, 0;
  CHECK(a.norm() == Catch::Approx(3.0));
  a.block(0)(0, 0) = 0.5;
  CHECK(a.norm() == Catch::Approx(2.0));
}

TEST_CASE("coordinates are the matrix-unit expansion", "[algebra]") {
  auto alg = make_algebra({2, 1});
  // Assembling vec(basis_k) columnwise must give the identity.
  Mat m(alg->vs_dim(), alg->vs_dim());
  for (int k = 0; k < alg->vs_dim(); ++k) m.col(k) = basis_element(alg, k).vec();
  CHECK((m - Mat::Identity(alg->vs_dim(), alg->vs_dim())).norm() == Catch::Approx(0.0));

  std::mt19937_64 rng(11);
  auto a = random_element(alg, rng);
  CHECK((element_from_vec(alg, a.vec()) - a).norm() < 1e-14);
}

TEST_CASE("star-algebra identities on random elements", "[algebra]") {
  for (auto dims : std::vector<std::vector<int>>{{1}, {2}, {1, 2}, {3, 1}}) {
    auto alg = make_algebra(dims);
    std::mt19937_64 rng(7 + dims.size());
    for (int trial = 0; trial < 25; ++trial) {
      auto a = random_element(alg, rng);
      auto b = random_element(alg, rng);
      const double scale = 1.0 + a.norm() * b.norm();

      CHECK(((a * b).adjoint() - b.adjoint() * a.adjoint()).norm() / scale < 1e-12);
      CHECK(std::abs((a * b).trace() - (b * a).trace()) / scale < 1e-12);

      // C* identity ||a* a|| = ||a||^2.
      CHECK((a.adjoint() * a).norm() ==
            Catch::Approx(a.norm() * a.norm()).margin(1e-10 * scale));
      CHECK(is_positive(a.adjoint() * a, 1e-9));

      // Multiplication scalarizations act as advertised.
      CHECK((left_mult_matrix(a) * b.vec() - (a * b).vec()).norm() / scale < 1e-12);
      CHECK((right_mult_matrix(a) * b.vec() - (b * a).vec()).norm() / scale < 1e-12);

      // tau(a* a) = |vec(a)|^2 (the scalarization is isometric).
      CHECK(std::abs((a.adjoint() * a).trace().real() - a.vec().squaredNorm()) /
                scale <
            1e-12);
    }
  }
}

TEST_CASE("functional calculus inverse square root", "[algebra]") {
  auto alg = make_algebra({2, 1});
  std::mt19937_64 rng(23);
  auto a = random_element(alg, rng);
  auto h = a.adjoint() * a + unit_element(alg) * 0.1;
  auto r = inv_sqrt(h);
  CHECK((r * h * r - unit_element(alg)).norm() < 1e-10);

  // Singular input must refuse rather than regularize.
  auto sing = zero_element(alg);
  sing.block(0)(0, 0) = 1.0;
  CHECK_THROWS_AS(inv_sqrt(sing), Error);
}
