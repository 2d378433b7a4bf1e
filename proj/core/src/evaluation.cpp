#include "lgcn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "lgcn/error.hpp"
#include "lgcn/parallel.hpp"

namespace lgcn {
namespace {

std::size_t count_hits(std::span<const Index> ranked, std::span<const Index> relevant,
                       std::size_t k) {
  std::size_t hits = 0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[r])) ++hits;
  }
  return hits;
}

}  // namespace

double recall_at_k(std::span<const Index> ranked, std::span<const Index> relevant, std::size_t k) {
  if (relevant.empty()) throw InvalidArgument("recall_at_k: empty relevant set");
  return static_cast<double>(count_hits(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> relevant, std::size_t k) {
  if (relevant.empty()) throw InvalidArgument("ndcg_at_k: empty relevant set");
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::vector<Index> top_k_items(std::span<const double> scores, std::size_t k) {
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  constexpr double kMasked = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] != kMasked) candidates.push_back(static_cast<Index>(i));
  }
  const std::size_t n = std::min(k, candidates.size());
  auto better = [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  candidates.resize(n);
  return candidates;
}

EvalReport evaluate_all_ranking(const EmbeddingState& state, const InteractionDataset& ds,
                                std::size_t k, EvalTarget target, bool keep_per_user,
                                int threads) {
  if (state.num_users() != ds.num_users || state.num_items() != ds.num_items) {
    throw DimensionMismatch("model and dataset disagree on M or N");
  }
  const ItemLists& truth = target == EvalTarget::Test ? ds.test : ds.validation;
  (void)state.combined();  // fail fast on stale embeddings

  std::vector<UserMetrics> rows(ds.num_users);
  std::vector<char> evaluated(ds.num_users, 0);
  parallel_for(ds.num_users, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Index> mask;
    for (std::size_t u = begin; u < end; ++u) {
      if (truth[u].empty()) continue;
      mask = ds.train[u];
      if (target == EvalTarget::Test) {
        mask.insert(mask.end(), ds.validation[u].begin(), ds.validation[u].end());
      }
      const auto user = static_cast<Index>(u);
      const auto scores = score_all_items(state, user, mask);
      const auto ranked = top_k_items(scores, k);
      rows[u] = {user, recall_at_k(ranked, truth[u], k), ndcg_at_k(ranked, truth[u], k)};
      evaluated[u] = 1;
    }
  });

  EvalReport report;
  report.k = k;
  double recall_sum = 0.0;
  double ndcg_sum = 0.0;
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    if (!evaluated[u]) {
      ++report.num_skipped_users;
      continue;
    }
    ++report.num_evaluated_users;
    recall_sum += rows[u].recall;
    ndcg_sum += rows[u].ndcg;
    if (keep_per_user) report.per_user.push_back(rows[u]);
  }
  if (report.num_evaluated_users > 0) {
    report.recall = recall_sum / static_cast<double>(report.num_evaluated_users);
    report.ndcg = ndcg_sum / static_cast<double>(report.num_evaluated_users);
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["k"] = report.k;
  j["recall"] = report.recall;
  j["ndcg"] = report.ndcg;
  j["num_evaluated_users"] = report.num_evaluated_users;
  return j.dump();
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << report_json(report) << '\n';
}

void write_per_user_csv(std::ostream& out, const EvalReport& report) {
  out << "user,recall,ndcg\n";
  char buf[96];
  for (const auto& r : report.per_user) {
    std::snprintf(buf, sizeof(buf), "%u,%.17g,%.17g\n", static_cast<unsigned>(r.user), r.recall,
                  r.ndcg);
    out << buf;
  }
}

void write_per_user_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_per_user_csv(out, report);
}

}  // namespace lgcn
