#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lgcn/dataset.hpp"
#include "lgcn/dense.hpp"
#include "lgcn/model.hpp"

namespace lgcn {

// Binomial row [C(K,0), ..., C(K,K)]: with these weights the layer
// combination over the unnormalized adjacency A equals (A + I)^K E0.
std::vector<double> sgcn_equivalent_alphas(std::size_t layers);

// alpha_k = beta (1-beta)^k for k < K and alpha_K = (1-beta)^K: the layer
// combination equals K steps of E <- beta E0 + (1-beta) A~ E.
// Requires 0 < beta < 1 and K >= 1.
std::vector<double> appnp_equivalent_alphas(double beta, std::size_t layers);

enum class Side { User, Item };

// Second-order smoothing strengths over the train graph. On the user side
// c(v -> u) = sum_{i in N_u ∩ N_v} (1/|N_i|) / sqrt(|N_u| |N_v|), which is
// entry (u, v) of the square of the symmetrically normalized adjacency.
// The item side swaps the roles of users and items.
class CoInteractionIndex {
 public:
  explicit CoInteractionIndex(const InteractionDataset& ds);

  std::size_t count(Side side) const;
  double coefficient(Side side, Index target, Index other) const;

  // Calls fn(other, c) for every `other` with c(other -> target) != 0,
  // in ascending order of `other`.
  template <typename Fn>
  void for_each(Side side, Index target, Fn&& fn) const;

 private:
  const ItemLists& neighbours(Side side) const { return side == Side::User ? by_user_ : by_item_; }

  ItemLists by_user_;
  ItemLists by_item_;
  // Accumulator reused by for_each; one index per thread.
  mutable std::vector<double> scratch_;
  mutable std::vector<Index> touched_;
};

double second_order_coefficient(const InteractionDataset& ds, Index u, Index v);

enum class SmoothnessNorm {
  L2,         // e / ||e||   (scale invariant)
  SquaredL2,  // e / ||e||^2 (literal reading of the divisor)
};

// S = sum_u sum_v c(v -> u) ||n(e_u) - n(e_v)||^2 over pairs with c != 0,
// where n() is the chosen normalization; zero-norm rows contribute 0.
double embedding_smoothness(const DenseMatrix& embeddings, const InteractionDataset& ds,
                            Side side, SmoothnessNorm norm = SmoothnessNorm::L2);

struct SmoothnessReport {
  double s_user = 0.0;
  double s_item = 0.0;
  std::string model_tag;
};

// Smoothness of the prediction embeddings (the combined matrix).
SmoothnessReport smoothness_report(const EmbeddingState& state, const InteractionDataset& ds,
                                   std::string model_tag,
                                   SmoothnessNorm norm = SmoothnessNorm::L2);
std::string to_json_line(const SmoothnessReport& report);

struct IdentityCheck {
  std::string name;
  double max_error = 0.0;  // max |got - want| / max(1, |want|)
  double tolerance = 0.0;
  bool passed = false;
};

// Builds the subgraph induced by up to `max_users` sampled users (and their
// train items), then checks the SGCN and APPNP layer-combination identities
// on it against dense matrix computations, using the matching rows of e0.
std::vector<IdentityCheck> check_propagation_identities(const InteractionDataset& ds,
                                                        const DenseMatrix& e0,
                                                        std::size_t max_users,
                                                        std::size_t max_items,
                                                        std::uint64_t seed);

template <typename Fn>
void CoInteractionIndex::for_each(Side side, Index target, Fn&& fn) const {
  const ItemLists& own = neighbours(side);
  const ItemLists& across = neighbours(side == Side::User ? Side::Item : Side::User);
  const auto& mine = own.at(target);
  if (mine.empty()) return;
  if (scratch_.size() < own.size()) scratch_.assign(own.size(), 0.0);
  touched_.clear();
  for (Index mid : mine) {
    const auto& back = across[mid];
    const double w = 1.0 / static_cast<double>(back.size());
    for (Index other : back) {
      if (scratch_[other] == 0.0) touched_.push_back(other);
      scratch_[other] += w;
    }
  }
  std::sort(touched_.begin(), touched_.end());
  const double d_target = static_cast<double>(mine.size());
  for (Index other : touched_) {
    const double c =
        scratch_[other] / std::sqrt(d_target * static_cast<double>(own[other].size()));
    scratch_[other] = 0.0;
    fn(other, c);
  }
}

}  // namespace lgcn
