#include "lgcn/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "lgcn/error.hpp"
#include "lgcn/rng.hpp"

namespace lgcn {

BlockDataset make_block_dataset(const BlockDatasetConfig& config) {
  if (config.clusters == 0 || config.users < config.clusters || config.items < config.clusters) {
    throw InvalidArgument("block dataset needs at least one user and item per cluster");
  }
  if (config.interactions_per_user > config.items) {
    throw InvalidArgument("more interactions per user than items");
  }
  if (!(config.test_fraction >= 0.0 && config.test_fraction < 1.0)) {
    throw InvalidArgument("test_fraction must lie in [0, 1)");
  }

  BlockDataset out;
  out.user_cluster.resize(config.users);
  out.item_cluster.resize(config.items);
  for (std::size_t u = 0; u < config.users; ++u) out.user_cluster[u] = u * config.clusters / config.users;
  for (std::size_t i = 0; i < config.items; ++i) out.item_cluster[i] = i * config.clusters / config.items;

  std::vector<std::vector<RawId>> members(config.clusters);
  for (std::size_t i = 0; i < config.items; ++i) {
    members[out.item_cluster[i]].push_back(static_cast<RawId>(i));
  }

  Rng rng(config.seed);
  for (std::size_t u = 0; u < config.users; ++u) {
    const auto& own = members[out.user_cluster[u]];
    std::vector<RawId> chosen;
    std::size_t guard = 0;
    while (chosen.size() < config.interactions_per_user) {
      if (++guard > 1000 * config.items) throw InvalidArgument("block dataset: cannot draw items");
      RawId item = 0;
      if (rng.uniform01() < config.in_cluster_probability) {
        item = own[rng.uniform_index(own.size())];
      } else {
        item = static_cast<RawId>(rng.uniform_index(config.items));
      }
      if (std::find(chosen.begin(), chosen.end(), item) == chosen.end()) chosen.push_back(item);
    }
    // The draw order is already random, so the tail is a uniform held-out set.
    const auto held = static_cast<std::size_t>(
        std::llround(config.test_fraction * static_cast<double>(chosen.size())));
    std::vector<RawId> train(chosen.begin(), chosen.end() - static_cast<std::ptrdiff_t>(held));
    std::vector<RawId> test(chosen.end() - static_cast<std::ptrdiff_t>(held), chosen.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    out.train.users.push_back({static_cast<RawId>(u), std::move(train)});
    out.test.users.push_back({static_cast<RawId>(u), std::move(test)});
  }
  return out;
}

}  // namespace lgcn
