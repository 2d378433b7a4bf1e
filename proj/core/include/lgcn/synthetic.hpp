#pragma once

#include <cstddef>
#include <cstdint>

#include "lgcn/dataset.hpp"

namespace lgcn {

// Users and items are split into contiguous, equally sized clusters. Each
// user draws `interactions_per_user` distinct items: with probability
// `in_cluster_probability` from its own cluster, otherwise uniformly from the
// whole catalog. A `test_fraction` share of each user's items is held out.
struct BlockDatasetConfig {
  std::size_t users = 200;
  std::size_t items = 300;
  std::size_t clusters = 10;
  std::size_t interactions_per_user = 20;
  double in_cluster_probability = 0.8;
  double test_fraction = 0.2;
  std::uint64_t seed = 7;
};

struct BlockDataset {
  InteractionFile train;
  InteractionFile test;
  std::vector<std::size_t> user_cluster;
  std::vector<std::size_t> item_cluster;
};

BlockDataset make_block_dataset(const BlockDatasetConfig& config);

}  // namespace lgcn
