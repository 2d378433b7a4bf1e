#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "lgcn/checkpoint.hpp"
#include "lgcn/error.hpp"
#include "lgcn/evaluation.hpp"
#include "lgcn/model.hpp"
#include "oracles.hpp"

using namespace lgcn;

namespace {

// Dense layer combination sum_k alpha_k A^k E0.
oracle::Mat dense_combination(const oracle::Mat& a, const std::vector<double>& alphas,
                              const oracle::Mat& e0) {
  oracle::Mat layer = e0;
  oracle::Mat out = oracle::scaled(e0, alphas[0]);
  for (std::size_t k = 1; k < alphas.size(); ++k) {
    layer = oracle::matmul(a, layer);
    out = oracle::add(out, layer, alphas[k]);
  }
  return out;
}

}  // namespace

TEST_CASE("xavier bound for T=64") {
  auto s = init_embeddings(50, 70, 64, 1);
  const double bound = std::sqrt(6.0 / 128.0);
  CHECK(bound == doctest::Approx(0.2165).epsilon(1e-3));
  for (double v : s.e0().values()) {
    CHECK(v >= -bound);
    CHECK(v <= bound);
  }
  CHECK(s.num_parameters() == 120 * 64);
}

TEST_CASE("same seed gives the same initialisation") {
  CHECK(init_embeddings(5, 7, 8, 3).e0() == init_embeddings(5, 7, 8, 3).e0());
  CHECK_FALSE(init_embeddings(5, 7, 8, 3).e0() == init_embeddings(5, 7, 8, 4).e0());
}

TEST_CASE("initialisation mean is within three standard errors of zero") {
  auto s = init_embeddings(1000, 563, 64, 17);  // 100032 entries
  const double bound = std::sqrt(6.0 / 128.0);
  const double sigma = bound / std::sqrt(3.0);
  double mean = 0.0;
  for (double v : s.e0().values()) mean += v;
  const double n = static_cast<double>(s.e0().size());
  mean /= n;
  CHECK(std::abs(mean) <= 3.0 * sigma / std::sqrt(n));
}

TEST_CASE("layer weight constructors") {
  CHECK(LayerWeights::uniform(3).alphas == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK(LayerWeights::single_last(2).alphas == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(LayerWeights::uniform(0).alphas == std::vector<double>{1.0});
  CHECK_THROWS_AS(LayerWeights::custom({}), InvalidArgument);
  CHECK_THROWS_AS(LayerWeights::custom({1.0, -0.5}), InvalidArgument);
  CHECK_THROWS_AS(LayerWeights::custom({1.0, NAN}), InvalidArgument);
}

TEST_CASE("K=0 combines to alpha_0 e0") {
  auto ds = oracle::random_dataset(4, 5, 2);
  auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
  auto s = init_embeddings(4, 5, 3, 9);
  forward(s, a, LayerWeights::uniform(0));
  CHECK(s.combined() == s.e0());
  forward(s, a, LayerWeights::custom({2.5}));
  for (std::size_t k = 0; k < s.e0().size(); ++k)
    CHECK(s.combined().values()[k] == 2.5 * s.e0().values()[k]);
}

TEST_CASE("one user one item, K=1 uniform averages the pair") {
  InteractionDataset ds;
  ds.num_users = 1;
  ds.num_items = 1;
  ds.train = {{0}};
  ds.validation = ds.test = {{}};
  ds.num_train_interactions = 1;
  auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
  DenseMatrix e0(2, 2);
  e0(0, 0) = 1.0;
  e0(0, 1) = 3.0;
  e0(1, 0) = -2.0;
  e0(1, 1) = 0.5;
  EmbeddingState s(1, 1, e0);
  forward(s, a, LayerWeights::uniform(1));
  auto u = s.user_embedding(0);
  CHECK(u[0] == (1.0 - 2.0) / 2.0);
  CHECK(u[1] == (3.0 + 0.5) / 2.0);
}

TEST_CASE("binomial weights on raw A equal (A+I)^2") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto ds = oracle::random_dataset(4, 6, seed, 0.4);
    auto raw = build_adjacency(ds);
    auto e0 = oracle::random_matrix(raw.size, 3, seed);
    EmbeddingState s(ds.num_users, ds.num_items, e0);
    forward(s, raw, LayerWeights::custom({1, 2, 1}));
    auto dense = oracle::adjacency(ds);
    auto api = oracle::add(dense, oracle::identity(raw.size));
    auto want = oracle::matmul(api, oracle::matmul(api, oracle::from_dense(e0)));
    CHECK(oracle::max_scaled_error(s.combined(), want) <= 1e-12);
  }
}

TEST_CASE("forward matches the dense layer combination") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto ds = oracle::random_dataset(5, 4, seed + 40, 0.5);
    for (NormScheme scheme : kAllNormSchemes) {
      auto a = normalize(build_adjacency(ds), scheme);
      auto e0 = oracle::random_matrix(a.size, 4, seed);
      EmbeddingState s(ds.num_users, ds.num_items, e0);
      const std::vector<double> alphas{0.1, 0.4, 0.3, 0.2};
      forward(s, a, LayerWeights::custom(alphas));
      auto dense_a = oracle::zeros(a.size, a.size);
      for (Index p = 0; p < a.size; ++p)
        for (Index q = 0; q < a.size; ++q) dense_a[p][q] = a.weight(p, q);
      auto want = dense_combination(dense_a, alphas, oracle::from_dense(e0));
      CHECK(oracle::max_scaled_error(s.combined(), want) <= 1e-12);
      CHECK(s.layers().size() == 3);
      CHECK(s.layer(0) == e0);
    }
  }
}

TEST_CASE("propagation is linear in e0") {
  auto ds = oracle::random_dataset(6, 5, 8);
  auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
  auto x = oracle::random_matrix(a.size, 3, 1);
  auto y = oracle::random_matrix(a.size, 3, 2);
  const double p = 0.7, q = -1.3;
  DenseMatrix mix(a.size, 3);
  axpy(p, x, mix);
  axpy(q, y, mix);
  auto w = LayerWeights::uniform(3);
  EmbeddingState sx(6, 5, x), sy(6, 5, y), sm(6, 5, mix);
  forward(sx, a, w);
  forward(sy, a, w);
  forward(sm, a, w);
  for (std::size_t k = 0; k < mix.size(); ++k)
    CHECK(sm.combined().values()[k] ==
          doctest::Approx(p * sx.combined().values()[k] + q * sy.combined().values()[k])
              .epsilon(1e-12));
}

TEST_CASE("stale or missing propagation is refused") {
  auto ds = oracle::random_dataset(3, 3, 1);
  auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
  auto s = init_embeddings(3, 3, 2, 1);
  CHECK_THROWS_AS(s.combined(), ContractViolation);
  forward(s, a, LayerWeights::uniform(2));
  CHECK(s.is_current());
  CHECK_NOTHROW(score(s, 0, 0));
  s.mutable_e0()(0, 0) += 1.0;
  CHECK_FALSE(s.is_current());
  CHECK_THROWS_AS(s.combined(), ContractViolation);
  CHECK_THROWS_AS(score(s, 0, 0), ContractViolation);
}

TEST_CASE("score is the inner product") {
  DenseMatrix e0(2, 2);
  e0(0, 0) = 1.0;
  e0(1, 1) = 1.0;
  InteractionDataset ds;
  ds.num_users = ds.num_items = 1;
  ds.train = {{0}};
  ds.validation = ds.test = {{}};
  ds.num_train_interactions = 1;
  auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
  EmbeddingState s(1, 1, e0);
  forward(s, a, LayerWeights::uniform(0));
  CHECK(score(s, 0, 0) == 0.0);
  s.mutable_e0().fill(1.0);
  forward(s, a, LayerWeights::uniform(0));
  CHECK(score(s, 0, 0) == 2.0);

  auto r = oracle::random_matrix(2, 5, 33);
  EmbeddingState t(1, 1, r);
  forward(t, a, LayerWeights::uniform(0));
  double want = 0.0;
  for (std::size_t c = 0; c < 5; ++c) want += r(0, c) * r(1, c);
  CHECK(std::abs(score(t, 0, 0) - want) <= 1e-15);
}

TEST_CASE("score_all_items masking and top-20 against per-item scoring") {
  const std::size_t items = 100;
  auto ds = oracle::random_dataset(3, items, 4, 0.05);
  auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
  auto s = init_embeddings(3, items, 8, 12);
  forward(s, a, LayerWeights::uniform(2));

  std::vector<Index> everything(items);
  for (Index i = 0; i < items; ++i) everything[i] = i;
  for (double v : score_all_items(s, 0, everything)) CHECK(v == -INFINITY);

  auto scores = score_all_items(s, 1);
  REQUIRE(scores.size() == items);
  std::vector<std::pair<double, Index>> ranked;
  for (Index i = 0; i < items; ++i) {
    CHECK(scores[i] == score(s, 1, i));
    ranked.push_back({-score(s, 1, i), i});
  }
  std::sort(ranked.begin(), ranked.end());
  auto top = top_k_items(scores, 20);
  REQUIRE(top.size() == 20);
  for (std::size_t r = 0; r < 20; ++r) CHECK(top[r] == ranked[r].second);
}

TEST_CASE("single item catalog") {
  InteractionDataset ds;
  ds.num_users = 1;
  ds.num_items = 1;
  ds.train = {{}};
  ds.validation = ds.test = {{0}};
  auto a = normalize(build_adjacency(ds), NormScheme::SymSqrt);
  auto s = init_embeddings(1, 1, 4, 2);
  forward(s, a, LayerWeights::uniform(1));
  auto v = score_all_items(s, 0);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == score(s, 0, 0));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Checkpoint c;
  c.num_users = 3;
  c.num_items = 4;
  c.scheme = NormScheme::L1Left;
  c.weights = LayerWeights::custom({0.1, 0.7, 1.0 / 3.0});
  c.e0 = oracle::random_matrix(7, 5, 77);
  std::stringstream io;
  write_checkpoint(io, c);
  auto back = read_checkpoint(io);
  CHECK(back.num_users == 3);
  CHECK(back.num_items == 4);
  CHECK(back.scheme == NormScheme::L1Left);
  CHECK(back.weights.alphas == c.weights.alphas);
  CHECK(back.weights.mode == LayerMode::Custom);
  CHECK(back.e0 == c.e0);

  c.scheme.reset();
  c.weights = LayerWeights::single_last(2);
  std::stringstream io2;
  write_checkpoint(io2, c);
  back = read_checkpoint(io2);
  CHECK_FALSE(back.scheme.has_value());
  CHECK(back.weights.mode == LayerMode::SingleLast);
}

TEST_CASE("truncated checkpoint is rejected") {
  Checkpoint c;
  c.num_users = 1;
  c.num_items = 1;
  c.e0 = DenseMatrix(2, 2, 1.0);
  std::stringstream io;
  write_checkpoint(io, c);
  std::string bytes = io.str();
  std::stringstream cut(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(cut), Error);
}
