#include <doctest.h>

#include <cmath>
#include <random>

#include "lgcn/error.hpp"
#include "lgcn/graph.hpp"
#include "oracles.hpp"

#ifdef LGCN_TEST_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace lgcn;

namespace {

InteractionDataset make(std::size_t m, std::size_t n, ItemLists train) {
  InteractionDataset ds;
  ds.num_users = m;
  ds.num_items = n;
  ds.train = std::move(train);
  ds.validation.assign(m, {});
  ds.test.assign(m, {});
  for (const auto& l : ds.train) ds.num_train_interactions += l.size();
  return ds;
}

oracle::Norm to_oracle(NormScheme s) {
  switch (s) {
    case NormScheme::SymSqrt: return oracle::Norm::SymSqrt;
    case NormScheme::SqrtLeft: return oracle::Norm::SqrtLeft;
    case NormScheme::SqrtRight: return oracle::Norm::SqrtRight;
    case NormScheme::L1Both: return oracle::Norm::L1Both;
    case NormScheme::L1Left: return oracle::Norm::L1Left;
    case NormScheme::L1Right: return oracle::Norm::L1Right;
  }
  return oracle::Norm::SymSqrt;
}

}  // namespace

TEST_CASE("single interaction adjacency") {
  auto a = build_adjacency(make(1, 1, {{0}}));
  CHECK(a.size == 2);
  CHECK(a.nnz() == 2);
  CHECK(a.weight(0, 1) == 1.0);
  CHECK(a.weight(1, 0) == 1.0);
  CHECK(a.weight(0, 0) == 0.0);
  CHECK(a.weight(1, 1) == 0.0);
}

TEST_CASE("degrees list users then items") {
  auto a = build_adjacency(make(2, 2, {{0, 1}, {1}}));
  CHECK(a.degrees == std::vector<std::size_t>{2, 1, 1, 2});
}

TEST_CASE("adjacency matches the dense definition") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto ds = oracle::random_dataset(4 + seed % 5, 3 + seed % 7, seed, 0.35, true);
    auto a = build_adjacency(ds);
    CHECK_NOTHROW(a.validate());
    CHECK(a.nnz() == 2 * ds.num_train_interactions);
    auto dense = oracle::adjacency(ds);
    for (Index p = 0; p < a.size; ++p)
      for (Index q = 0; q < a.size; ++q) CHECK(a.weight(p, q) == dense[p][q]);
  }
}

TEST_CASE("symmetric sqrt weights") {
  auto single = normalize(build_adjacency(make(1, 1, {{0}})), NormScheme::SymSqrt);
  CHECK(single.weight(0, 1) == 1.0);

  auto star = normalize(build_adjacency(make(1, 4, {{0, 1, 2, 3}})), NormScheme::SymSqrt);
  for (Index i = 1; i <= 4; ++i) {
    CHECK(star.weight(0, i) == 0.5);
    CHECK(star.weight(i, 0) == 0.5);
  }
}

TEST_CASE("every scheme matches the dense normalization") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto ds = oracle::random_dataset(5, 6, seed * 13, 0.4, true);
    auto raw = build_adjacency(ds);
    auto dense = oracle::adjacency(ds);
    for (NormScheme s : kAllNormSchemes) {
      auto a = normalize(raw, s);
      auto want = oracle::normalized(dense, to_oracle(s));
      for (Index p = 0; p < a.size; ++p)
        for (Index q = 0; q < a.size; ++q)
          CHECK(a.weight(p, q) == doctest::Approx(want[p][q]).epsilon(1e-15));
    }
  }
}

TEST_CASE("l1-left rows sum to one") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto ds = oracle::random_dataset(7, 9, seed, 0.3, true);
    auto a = normalize(build_adjacency(ds), NormScheme::L1Left);
    for (std::size_t p = 0; p < a.size; ++p) {
      if (a.degrees[p] == 0) continue;
      double s = 0.0;
      for (std::size_t e = a.row_offsets[p]; e < a.row_offsets[p + 1]; ++e) s += a.values[e];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("symmetric schemes store bitwise-symmetric values") {
  auto ds = oracle::random_dataset(12, 15, 3, 0.3);
  for (NormScheme s : {NormScheme::SymSqrt, NormScheme::L1Both}) {
    auto a = normalize(build_adjacency(ds), s);
    CHECK(a.symmetric_values);
    for (Index p = 0; p < a.size; ++p)
      for (std::size_t e = a.row_offsets[p]; e < a.row_offsets[p + 1]; ++e)
        CHECK(a.weight(a.column_indices[e], p) == a.values[e]);
  }
  CHECK_FALSE(normalize(build_adjacency(ds), NormScheme::L1Left).symmetric_values);
}

TEST_CASE("isolated nodes get zero rows and columns") {
  auto ds = make(2, 3, {{0}, {}});
  for (NormScheme s : kAllNormSchemes) {
    auto a = normalize(build_adjacency(ds), s);
    CHECK(a.row_offsets[1] == a.row_offsets[2]);
    for (double v : a.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("transpose swaps entries") {
  auto ds = oracle::random_dataset(5, 7, 21, 0.4);
  auto a = normalize(build_adjacency(ds), NormScheme::SqrtLeft);
  auto at = transpose(a);
  for (Index p = 0; p < a.size; ++p)
    for (Index q = 0; q < a.size; ++q) CHECK(at.weight(p, q) == a.weight(q, p));
}

TEST_CASE("spmm on a single edge swaps rows") {
  auto a = normalize(build_adjacency(make(1, 1, {{0}})), NormScheme::SymSqrt);
  DenseMatrix x(2, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    x(0, c) = 1.0 + c;
    x(1, c) = -2.0 * c;
  }
  auto y = spmm(a, x);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(y(0, c) == x(1, c));
    CHECK(y(1, c) == x(0, c));
  }
  DenseMatrix z(2, 3);
  CHECK(spmm(a, z) == z);
}

TEST_CASE("spmm matches a dense triple loop") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto ds = oracle::random_dataset(2 + seed % 4, 2 + seed % 5, seed, 0.5);
    auto raw = build_adjacency(ds);
    for (NormScheme s : kAllNormSchemes) {
      auto a = normalize(raw, s);
      auto x = oracle::random_matrix(a.size, 3, seed + 100);
      auto want = oracle::matmul(oracle::normalized(oracle::adjacency(ds), to_oracle(s)),
                                 oracle::from_dense(x));
      CHECK(oracle::max_scaled_error(spmm(a, x), want) <= 1e-12);
      CHECK(spmm(a, x, 3) == spmm(a, x, 1));
    }
  }
}

TEST_CASE("spmm rejects a mismatched operand and resizes its output") {
  auto a = build_adjacency(make(1, 1, {{0}}));
  CHECK_THROWS_AS(spmm(a, DenseMatrix(3, 2)), DimensionMismatch);
  DenseMatrix out(1, 2);
  spmm_into(a, DenseMatrix(2, 3, 1.0), out);
  CHECK(out.rows() == 2);
  CHECK(out.cols() == 3);
}

TEST_CASE("symmetric normalization does not expand") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto ds = oracle::random_dataset(6 + seed, 8 + seed, seed, 0.3);
    auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
    CHECK(spectral_norm_estimate(a, 200) <= 1.0 + 1e-9);
  }
  auto single = normalize(build_adjacency(make(1, 1, {{0}})), NormScheme::SymSqrt);
  CHECK(spectral_norm_estimate(single, 10) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("spectral estimate is monotone in iterations") {
  auto ds = oracle::random_dataset(9, 11, 5, 0.3);
  auto a = normalize(build_adjacency(ds), NormScheme::L1Right);
  double prev = 0.0;
  for (std::size_t it = 1; it <= 30; ++it) {
    const double est = spectral_norm_estimate(a, it);
    CHECK(est >= prev - 1e-14);
    prev = est;
  }
}

#ifdef LGCN_TEST_HAVE_EIGEN
TEST_CASE("spectral estimate matches a dense eigensolver on a 3x4 graph") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto ds = oracle::random_dataset(3, 4, seed * 7, 0.5);
    for (NormScheme s : kAllNormSchemes) {
      auto a = normalize(build_adjacency(ds), s);
      auto dense = oracle::normalized(oracle::adjacency(ds), to_oracle(s));
      Eigen::MatrixXd m(a.size, a.size);
      for (std::size_t p = 0; p < a.size; ++p)
        for (std::size_t q = 0; q < a.size; ++q) m(p, q) = dense[p][q];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.transpose() * m);
      const double want = std::sqrt(eig.eigenvalues().maxCoeff());
      CHECK(spectral_norm_estimate(a, 2000) == doctest::Approx(want).epsilon(1e-6));
    }
  }
}
#endif

TEST_CASE("scheme names round-trip") {
  for (NormScheme s : kAllNormSchemes) CHECK(parse_norm_scheme(to_string(s)) == s);
  CHECK_FALSE(parse_norm_scheme("bogus").has_value());
}
