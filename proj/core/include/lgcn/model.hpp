#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lgcn/dataset.hpp"
#include "lgcn/dense.hpp"
#include "lgcn/graph.hpp"

namespace lgcn {

enum class LayerMode { Uniform, SingleLast, Custom };

std::string_view to_string(LayerMode mode);

// Coefficients alpha_0..alpha_K of the layer combination.
struct LayerWeights {
  std::vector<double> alphas;
  LayerMode mode = LayerMode::Uniform;

  static LayerWeights uniform(std::size_t layers);
  static LayerWeights single_last(std::size_t layers);
  // Throws InvalidArgument on an empty list or a negative/non-finite entry.
  static LayerWeights custom(std::vector<double> alphas);

  std::size_t layers() const { return alphas.size() - 1; }
};

// Trainable 0-th layer embeddings plus the propagated layers and their
// combination from the most recent forward pass.
class EmbeddingState {
 public:
  EmbeddingState() = default;
  EmbeddingState(std::size_t num_users, std::size_t num_items, DenseMatrix e0);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t num_nodes() const { return num_users_ + num_items_; }
  std::size_t dim() const { return e0_.cols(); }
  std::size_t num_parameters() const { return e0_.size(); }

  const DenseMatrix& e0() const { return e0_; }
  // Mutable access invalidates everything derived by forward().
  DenseMatrix& mutable_e0();

  std::uint64_t version() const { return version_; }
  bool is_current() const { return propagated_ && forward_version_ == version_; }

  // E^(1..K) from the last forward pass.
  const std::vector<DenseMatrix>& layers() const;
  // E^(k); k = 0 is e0.
  const DenseMatrix& layer(std::size_t k) const;
  const DenseMatrix& combined() const;

  std::span<const double> user_embedding(Index u) const;
  std::span<const double> item_embedding(Index i) const;

 private:
  friend void forward(EmbeddingState&, const SparseAdjacency&, const LayerWeights&, int);
  void require_current() const;

  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  DenseMatrix e0_;
  std::vector<DenseMatrix> layers_;
  DenseMatrix combined_;
  std::uint64_t version_ = 0;
  std::uint64_t forward_version_ = 0;
  bool propagated_ = false;
};

// Xavier-uniform initialisation with fan_in = fan_out = dim.
EmbeddingState init_embeddings(std::size_t num_users, std::size_t num_items, std::size_t dim,
                               std::uint64_t seed);

// layers[k+1] = adjacency * layers[k]; combined = sum_k alpha_k layers[k].
void forward(EmbeddingState& state, const SparseAdjacency& adjacency, const LayerWeights& weights,
             int threads = 1);

double score(const EmbeddingState& state, Index user, Index item);

// Scores of every item for `user`; items in `exclude` get -infinity.
std::vector<double> score_all_items(const EmbeddingState& state, Index user,
                                    std::span<const Index> exclude = {});

}  // namespace lgcn
