#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "lgcn/dataset.hpp"
#include "lgcn/dense.hpp"

namespace lgcn {

// Edge weighting applied to the bipartite adjacency. "Left" refers to the
// target node p of entry (p, q), "right" to the neighbour q.
enum class NormScheme {
  SymSqrt,    // 1 / (sqrt(d_p) sqrt(d_q))
  SqrtLeft,   // 1 / sqrt(d_p)
  SqrtRight,  // 1 / sqrt(d_q)
  L1Both,     // 1 / (d_p d_q)
  L1Left,     // 1 / d_p        (row-stochastic)
  L1Right,    // 1 / d_q
};

inline constexpr NormScheme kAllNormSchemes[] = {
    NormScheme::SymSqrt, NormScheme::SqrtLeft, NormScheme::SqrtRight,
    NormScheme::L1Both,  NormScheme::L1Left,   NormScheme::L1Right,
};

std::string_view to_string(NormScheme scheme);
std::optional<NormScheme> parse_norm_scheme(std::string_view name);

// Compressed sparse row storage of the (M+N) x (M+N) user-item graph.
// Nodes [0, M) are users, [M, M+N) are items.
struct SparseAdjacency {
  std::size_t size = 0;
  std::size_t num_users = 0;
  std::vector<std::size_t> row_offsets;  // size + 1 entries
  std::vector<Index> column_indices;     // ascending within each row
  std::vector<double> values;
  std::vector<std::size_t> degrees;      // entries per row of the unweighted graph
  // weight(p, q) == weight(q, p) bitwise for every stored entry.
  bool symmetric_values = true;

  std::size_t nnz() const { return column_indices.size(); }
  std::size_t num_items() const { return size - num_users; }

  // Stored weight of (p, q), 0 when absent.
  double weight(Index p, Index q) const;

  // Throws InvalidArgument on a broken structural invariant.
  void validate() const;
};

// Unweighted adjacency built from train interactions only.
SparseAdjacency build_adjacency(const InteractionDataset& ds);

// Rows and columns of degree-0 nodes get coefficient 0.
SparseAdjacency normalize(const SparseAdjacency& a, NormScheme scheme);

SparseAdjacency transpose(const SparseAdjacency& a);

// out = a * x; `out` is reallocated when its shape is wrong. Rows are split
// across threads; each row accumulates its entries sequentially in column
// order, so the result is bit-reproducible.
void spmm_into(const SparseAdjacency& a, const DenseMatrix& x, DenseMatrix& out, int threads = 1);
DenseMatrix spmm(const SparseAdjacency& a, const DenseMatrix& x, int threads = 1);

// Power-iteration estimate of the largest singular value.
double spectral_norm_estimate(const SparseAdjacency& a, std::size_t iterations);

}  // namespace lgcn
