#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lgcn/dataset.hpp"
#include "lgcn/model.hpp"

namespace lgcn {

// |top-k ∩ relevant| / |relevant|. `relevant` must be sorted and nonempty.
double recall_at_k(std::span<const Index> ranked, std::span<const Index> relevant, std::size_t k);

// Binary-relevance NDCG: DCG = sum over hits at rank r < k of 1/log2(r+2),
// IDCG = sum_{r < min(|relevant|, k)} 1/log2(r+2). `relevant` sorted, nonempty.
double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> relevant, std::size_t k);

// Indices of the k highest scores, best first, ties broken by ascending
// index. Entries equal to -infinity are never returned.
std::vector<Index> top_k_items(std::span<const double> scores, std::size_t k);

enum class EvalTarget {
  Test,        // candidates exclude train and validation items
  Validation,  // candidates exclude train items
};

struct UserMetrics {
  Index user = 0;
  double recall = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::size_t k = 20;
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t num_evaluated_users = 0;
  std::size_t num_skipped_users = 0;  // empty target list
  std::vector<UserMetrics> per_user;  // filled on request, ascending user id
};

// All-ranking protocol: every non-masked item is a candidate; metrics are
// macro-averaged over users with a nonempty target list.
EvalReport evaluate_all_ranking(const EmbeddingState& state, const InteractionDataset& ds,
                                std::size_t k, EvalTarget target = EvalTarget::Test,
                                bool keep_per_user = false, int threads = 1);

// {"k":..,"recall":..,"ndcg":..,"num_evaluated_users":..}
std::string report_json(const EvalReport& report);
void write_report_json(const std::filesystem::path& path, const EvalReport& report);
// user,recall,ndcg
void write_per_user_csv(std::ostream& out, const EvalReport& report);
void write_per_user_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace lgcn
