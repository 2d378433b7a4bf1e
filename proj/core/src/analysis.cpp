#include "lgcn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "lgcn/error.hpp"
#include "lgcn/graph.hpp"
#include "lgcn/rng.hpp"

namespace lgcn {

std::vector<double> sgcn_equivalent_alphas(std::size_t layers) {
  std::vector<double> row(layers + 1, 1.0);
  for (std::size_t k = 1; k < layers; ++k) {
    row[k] = row[k - 1] * static_cast<double>(layers - k + 1) / static_cast<double>(k);
  }
  return row;
}

std::vector<double> appnp_equivalent_alphas(double beta, std::size_t layers) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("teleport probability must be in (0, 1)");
  if (layers == 0) throw InvalidArgument("APPNP weights need K >= 1");
  std::vector<double> alphas(layers + 1);
  double keep = 1.0;
  for (std::size_t k = 0; k < layers; ++k) {
    alphas[k] = beta * keep;
    keep *= 1.0 - beta;
  }
  alphas[layers] = keep;
  return alphas;
}

CoInteractionIndex::CoInteractionIndex(const InteractionDataset& ds)
    : by_user_(ds.train), by_item_(ds.num_items) {
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    for (Index i : ds.train[u]) by_item_[i].push_back(static_cast<Index>(u));
  }
}

std::size_t CoInteractionIndex::count(Side side) const { return neighbours(side).size(); }

double CoInteractionIndex::coefficient(Side side, Index target, Index other) const {
  const ItemLists& own = neighbours(side);
  const ItemLists& across = neighbours(side == Side::User ? Side::Item : Side::User);
  const auto& a = own.at(target);
  const auto& b = own.at(other);
  if (a.empty() || b.empty()) return 0.0;
  double sum = 0.0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) {
      sum += 1.0 / static_cast<double>(across[*i].size());
      ++i;
      ++j;
    } else if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return sum / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double second_order_coefficient(const InteractionDataset& ds, Index u, Index v) {
  if (u >= ds.num_users || v >= ds.num_users) throw InvalidArgument("user id out of range");
  return CoInteractionIndex(ds).coefficient(Side::User, u, v);
}

double embedding_smoothness(const DenseMatrix& embeddings, const InteractionDataset& ds,
                            Side side, SmoothnessNorm norm) {
  if (embeddings.rows() != ds.num_users + ds.num_items) {
    throw DimensionMismatch("embedding rows do not match M + N");
  }
  const std::size_t offset = side == Side::User ? 0 : ds.num_users;
  const std::size_t count = side == Side::User ? ds.num_users : ds.num_items;
  const std::size_t dim = embeddings.cols();

  DenseMatrix normalized(count, dim);
  std::vector<char> usable(count, 0);
  for (std::size_t r = 0; r < count; ++r) {
    const auto src = embeddings.row(offset + r);
    const double sq = squared_norm(src);
    if (sq == 0.0) continue;
    const double divisor = norm == SmoothnessNorm::L2 ? std::sqrt(sq) : sq;
    auto dst = normalized.row(r);
    for (std::size_t c = 0; c < dim; ++c) dst[c] = src[c] / divisor;
    usable[r] = 1;
  }

  const CoInteractionIndex index(ds);
  double total = 0.0;
  for (std::size_t t = 0; t < count; ++t) {
    if (!usable[t]) continue;
    const auto et = normalized.row(t);
    index.for_each(side, static_cast<Index>(t), [&](Index other, double c) {
      if (!usable[other] || other == t) return;
      const auto eo = normalized.row(other);
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = et[k] - eo[k];
        d2 += d * d;
      }
      total += c * d2;
    });
  }
  return total;
}

SmoothnessReport smoothness_report(const EmbeddingState& state, const InteractionDataset& ds,
                                   std::string model_tag, SmoothnessNorm norm) {
  const DenseMatrix& e = state.combined();
  return {embedding_smoothness(e, ds, Side::User, norm),
          embedding_smoothness(e, ds, Side::Item, norm), std::move(model_tag)};
}

std::string to_json_line(const SmoothnessReport& report) {
  nlohmann::ordered_json j;
  j["model_tag"] = report.model_tag;
  j["s_user"] = report.s_user;
  j["s_item"] = report.s_item;
  return j.dump();
}

namespace {

using Dense = std::vector<std::vector<double>>;

Dense dense_product(const Dense& a, const Dense& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.empty() ? 0 : b[0].size();
  Dense out(n, std::vector<double>(m, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (a[r][k] == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) out[r][c] += a[r][k] * b[k][c];
    }
  }
  return out;
}

Dense to_dense(const SparseAdjacency& a) {
  Dense d(a.size, std::vector<double>(a.size, 0.0));
  for (std::size_t p = 0; p < a.size; ++p) {
    for (std::size_t e = a.row_offsets[p]; e < a.row_offsets[p + 1]; ++e) {
      d[p][a.column_indices[e]] = a.values[e];
    }
  }
  return d;
}

Dense to_dense(const DenseMatrix& x) {
  Dense d(x.rows(), std::vector<double>(x.cols()));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) d[r][c] = x(r, c);
  }
  return d;
}

double max_scaled_error(const DenseMatrix& got, const Dense& want) {
  double worst = 0.0;
  for (std::size_t r = 0; r < got.rows(); ++r) {
    for (std::size_t c = 0; c < got.cols(); ++c) {
      const double scale = std::max(1.0, std::abs(want[r][c]));
      worst = std::max(worst, std::abs(got(r, c) - want[r][c]) / scale);
    }
  }
  return worst;
}

}  // namespace

std::vector<IdentityCheck> check_propagation_identities(const InteractionDataset& ds,
                                                        const DenseMatrix& e0,
                                                        std::size_t max_users,
                                                        std::size_t max_items,
                                                        std::uint64_t seed) {
  if (e0.rows() != ds.num_users + ds.num_items) {
    throw DimensionMismatch("embedding rows do not match M + N");
  }
  // Sample users, keep up to max_items of their items, and re-index.
  std::vector<Index> users(ds.num_users);
  std::iota(users.begin(), users.end(), Index{0});
  Rng rng(derive_seed(seed, 0xd1a9));
  const std::size_t take = std::min(max_users, users.size());
  for (std::size_t k = 0; k < take; ++k) {
    std::swap(users[k], users[k + rng.uniform_index(users.size() - k)]);
  }
  users.resize(take);
  std::sort(users.begin(), users.end());

  std::vector<Index> items;
  for (Index u : users) items.insert(items.end(), ds.train[u].begin(), ds.train[u].end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  if (items.size() > max_items) items.resize(max_items);

  InteractionDataset sub;
  sub.num_users = users.size();
  sub.num_items = items.size();
  sub.train.assign(sub.num_users, {});
  sub.validation.assign(sub.num_users, {});
  sub.test.assign(sub.num_users, {});
  for (std::size_t r = 0; r < users.size(); ++r) {
    for (Index i : ds.train[users[r]]) {
      auto it = std::lower_bound(items.begin(), items.end(), i);
      if (it != items.end() && *it == i) {
        sub.train[r].push_back(static_cast<Index>(it - items.begin()));
      }
    }
    sub.num_train_interactions += sub.train[r].size();
  }

  DenseMatrix sub_e0(sub.num_users + sub.num_items, e0.cols());
  for (std::size_t r = 0; r < users.size(); ++r) {
    std::copy_n(e0.row(users[r]).begin(), e0.cols(), sub_e0.row(r).begin());
  }
  for (std::size_t r = 0; r < items.size(); ++r) {
    std::copy_n(e0.row(ds.num_users + items[r]).begin(), e0.cols(),
                sub_e0.row(sub.num_users + r).begin());
  }

  const SparseAdjacency a = build_adjacency(sub);
  const Dense x0 = to_dense(sub_e0);
  std::vector<IdentityCheck> checks;

  {
    constexpr std::size_t kLayers = 3;
    Dense a_plus_i = to_dense(a);
    for (std::size_t p = 0; p < a.size; ++p) a_plus_i[p][p] += 1.0;
    Dense want = x0;
    for (std::size_t k = 0; k < kLayers; ++k) want = dense_product(a_plus_i, want);
    EmbeddingState state(sub.num_users, sub.num_items, sub_e0);
    forward(state, a, LayerWeights::custom(sgcn_equivalent_alphas(kLayers)));
    const double err = max_scaled_error(state.combined(), want);
    checks.push_back({"sgcn", err, 1e-12, err <= 1e-12});
  }
  {
    constexpr std::size_t kLayers = 4;
    constexpr double kBeta = 0.1;
    const SparseAdjacency norm = normalize(a, NormScheme::SymSqrt);
    const Dense dense_norm = to_dense(norm);
    Dense want = x0;
    for (std::size_t k = 0; k < kLayers; ++k) {
      Dense next = dense_product(dense_norm, want);
      for (std::size_t r = 0; r < next.size(); ++r) {
        for (std::size_t c = 0; c < next[r].size(); ++c) {
          next[r][c] = kBeta * x0[r][c] + (1.0 - kBeta) * next[r][c];
        }
      }
      want = std::move(next);
    }
    EmbeddingState state(sub.num_users, sub.num_items, sub_e0);
    forward(state, norm, LayerWeights::custom(appnp_equivalent_alphas(kBeta, kLayers)));
    const double err = max_scaled_error(state.combined(), want);
    checks.push_back({"appnp", err, 1e-12, err <= 1e-12});
  }
  return checks;
}

}  // namespace lgcn
