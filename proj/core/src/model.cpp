#include "lgcn/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lgcn/error.hpp"
#include "lgcn/rng.hpp"

namespace lgcn {

std::string_view to_string(LayerMode mode) {
  switch (mode) {
    case LayerMode::Uniform: return "uniform";
    case LayerMode::SingleLast: return "single-last";
    case LayerMode::Custom: return "custom";
  }
  return "unknown";
}

LayerWeights LayerWeights::uniform(std::size_t layers) {
  return {std::vector<double>(layers + 1, 1.0 / static_cast<double>(layers + 1)),
          LayerMode::Uniform};
}

LayerWeights LayerWeights::single_last(std::size_t layers) {
  std::vector<double> a(layers + 1, 0.0);
  a.back() = 1.0;
  return {std::move(a), LayerMode::SingleLast};
}

LayerWeights LayerWeights::custom(std::vector<double> alphas) {
  if (alphas.empty()) throw InvalidArgument("layer weights need at least alpha_0");
  for (double a : alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw InvalidArgument("layer weights must be finite and nonnegative");
    }
  }
  return {std::move(alphas), LayerMode::Custom};
}

EmbeddingState::EmbeddingState(std::size_t num_users, std::size_t num_items, DenseMatrix e0)
    : num_users_(num_users), num_items_(num_items), e0_(std::move(e0)) {
  if (e0_.rows() != num_users + num_items) {
    throw DimensionMismatch("embedding table has " + std::to_string(e0_.rows()) +
                            " rows, expected " + std::to_string(num_users + num_items));
  }
}

DenseMatrix& EmbeddingState::mutable_e0() {
  ++version_;
  return e0_;
}

void EmbeddingState::require_current() const {
  if (!propagated_) throw ContractViolation("forward() has not been run");
  if (forward_version_ != version_) {
    throw ContractViolation("embeddings changed since the last forward()");
  }
}

const std::vector<DenseMatrix>& EmbeddingState::layers() const {
  require_current();
  return layers_;
}

const DenseMatrix& EmbeddingState::layer(std::size_t k) const {
  if (k == 0) return e0_;
  require_current();
  if (k > layers_.size()) throw InvalidArgument("layer index beyond K");
  return layers_[k - 1];
}

const DenseMatrix& EmbeddingState::combined() const {
  require_current();
  return combined_;
}

std::span<const double> EmbeddingState::user_embedding(Index u) const {
  if (u >= num_users_) throw InvalidArgument("user id out of range");
  return combined().row(u);
}

std::span<const double> EmbeddingState::item_embedding(Index i) const {
  if (i >= num_items_) throw InvalidArgument("item id out of range");
  return combined().row(num_users_ + i);
}

EmbeddingState init_embeddings(std::size_t num_users, std::size_t num_items, std::size_t dim,
                               std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("embedding dimension must be >= 1");
  const double fan = static_cast<double>(dim);
  const double bound = std::sqrt(6.0 / (fan + fan));
  DenseMatrix e0(num_users + num_items, dim);
  Rng rng(seed);
  for (double& v : e0.values()) v = rng.uniform(-bound, bound);
  return EmbeddingState(num_users, num_items, std::move(e0));
}

void forward(EmbeddingState& state, const SparseAdjacency& adjacency, const LayerWeights& weights,
             int threads) {
  if (adjacency.size != state.num_nodes()) {
    throw DimensionMismatch("adjacency size does not match the embedding table");
  }
  const std::size_t k_layers = weights.layers();
  state.layers_.resize(k_layers);
  const DenseMatrix* prev = &state.e0_;
  for (std::size_t k = 0; k < k_layers; ++k) {
    spmm_into(adjacency, *prev, state.layers_[k], threads);
    prev = &state.layers_[k];
  }
  DenseMatrix combined(state.e0_.rows(), state.e0_.cols());
  axpy(weights.alphas[0], state.e0_, combined);
  for (std::size_t k = 0; k < k_layers; ++k) axpy(weights.alphas[k + 1], state.layers_[k], combined);
  state.combined_ = std::move(combined);
  state.forward_version_ = state.version_;
  state.propagated_ = true;
}

double score(const EmbeddingState& state, Index user, Index item) {
  return dot(state.user_embedding(user), state.item_embedding(item));
}

std::vector<double> score_all_items(const EmbeddingState& state, Index user,
                                    std::span<const Index> exclude) {
  const auto eu = state.user_embedding(user);
  const DenseMatrix& e = state.combined();
  std::vector<double> scores(state.num_items());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = dot(eu, e.row(state.num_users() + i));
  for (Index i : exclude) {
    if (i < scores.size()) scores[i] = -std::numeric_limits<double>::infinity();
  }
  return scores;
}

}  // namespace lgcn
