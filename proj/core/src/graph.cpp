#include "lgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lgcn/error.hpp"
#include "lgcn/parallel.hpp"

namespace lgcn {

std::string_view to_string(NormScheme scheme) {
  switch (scheme) {
    case NormScheme::SymSqrt: return "sym-sqrt";
    case NormScheme::SqrtLeft: return "sqrt-left";
    case NormScheme::SqrtRight: return "sqrt-right";
    case NormScheme::L1Both: return "l1-both";
    case NormScheme::L1Left: return "l1-left";
    case NormScheme::L1Right: return "l1-right";
  }
  return "unknown";
}

std::optional<NormScheme> parse_norm_scheme(std::string_view name) {
  for (NormScheme s : kAllNormSchemes) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

double SparseAdjacency::weight(Index p, Index q) const {
  const auto first = column_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[p]);
  const auto last = column_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[p + 1]);
  const auto it = std::lower_bound(first, last, q);
  if (it == last || *it != q) return 0.0;
  return values[static_cast<std::size_t>(it - column_indices.begin())];
}

void SparseAdjacency::validate() const {
  if (row_offsets.size() != size + 1 || degrees.size() != size) {
    throw InvalidArgument("adjacency: offset/degree array size mismatch");
  }
  if (values.size() != column_indices.size() || row_offsets.back() != nnz()) {
    throw InvalidArgument("adjacency: entry arrays inconsistent");
  }
  for (std::size_t p = 0; p < size; ++p) {
    const std::size_t begin = row_offsets[p];
    const std::size_t end = row_offsets[p + 1];
    if (degrees[p] != end - begin) throw InvalidArgument("adjacency: degree mismatch");
    const bool user_row = p < num_users;
    for (std::size_t e = begin; e < end; ++e) {
      const Index q = column_indices[e];
      if (q >= size) throw InvalidArgument("adjacency: column out of range");
      if (e > begin && column_indices[e - 1] >= q) {
        throw InvalidArgument("adjacency: columns not strictly ascending");
      }
      if (user_row == (q < num_users)) throw InvalidArgument("adjacency: non-bipartite edge");
      const auto qb = column_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[q]);
      const auto qe = column_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[q + 1]);
      if (!std::binary_search(qb, qe, static_cast<Index>(p))) {
        throw InvalidArgument("adjacency: not structurally symmetric");
      }
    }
  }
}

SparseAdjacency build_adjacency(const InteractionDataset& ds) {
  SparseAdjacency a;
  a.num_users = ds.num_users;
  a.size = ds.num_users + ds.num_items;
  a.degrees.assign(a.size, 0);
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    a.degrees[u] = ds.train[u].size();
    for (Index i : ds.train[u]) ++a.degrees[ds.num_users + i];
  }
  a.row_offsets.assign(a.size + 1, 0);
  for (std::size_t p = 0; p < a.size; ++p) a.row_offsets[p + 1] = a.row_offsets[p] + a.degrees[p];
  a.column_indices.resize(a.row_offsets.back());
  a.values.assign(a.row_offsets.back(), 1.0);

  std::vector<std::size_t> cursor(a.row_offsets.begin(), a.row_offsets.end() - 1);
  // Users in ascending order keep every item row sorted without a sort pass.
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    for (Index i : ds.train[u]) {
      const std::size_t item_node = ds.num_users + i;
      a.column_indices[cursor[u]++] = static_cast<Index>(item_node);
      a.column_indices[cursor[item_node]++] = static_cast<Index>(u);
    }
  }
  return a;
}

SparseAdjacency normalize(const SparseAdjacency& a, NormScheme scheme) {
  SparseAdjacency out = a;
  std::vector<double> inv_sqrt(a.size, 0.0);
  std::vector<double> inv(a.size, 0.0);
  for (std::size_t p = 0; p < a.size; ++p) {
    if (a.degrees[p] == 0) continue;
    const auto d = static_cast<double>(a.degrees[p]);
    inv_sqrt[p] = 1.0 / std::sqrt(d);
    inv[p] = 1.0 / d;
  }
  for (std::size_t p = 0; p < a.size; ++p) {
    for (std::size_t e = a.row_offsets[p]; e < a.row_offsets[p + 1]; ++e) {
      const Index q = a.column_indices[e];
      double coef = 0.0;
      // Products are commutative in IEEE arithmetic, so the symmetric
      // schemes store bitwise-identical weights for (p, q) and (q, p).
      switch (scheme) {
        case NormScheme::SymSqrt: coef = inv_sqrt[p] * inv_sqrt[q]; break;
        case NormScheme::SqrtLeft: coef = inv_sqrt[p]; break;
        case NormScheme::SqrtRight: coef = inv_sqrt[q]; break;
        case NormScheme::L1Both: coef = inv[p] * inv[q]; break;
        case NormScheme::L1Left: coef = inv[p]; break;
        case NormScheme::L1Right: coef = inv[q]; break;
      }
      out.values[e] = a.values[e] * coef;
    }
  }
  out.symmetric_values =
      a.symmetric_values && (scheme == NormScheme::SymSqrt || scheme == NormScheme::L1Both);
  return out;
}

SparseAdjacency transpose(const SparseAdjacency& a) {
  // The structure is symmetric, so the transpose shares offsets and columns;
  // only the value of (p, q) is replaced by the value stored at (q, p).
  SparseAdjacency t = a;
  if (a.symmetric_values) return t;
  for (std::size_t p = 0; p < a.size; ++p) {
    for (std::size_t e = a.row_offsets[p]; e < a.row_offsets[p + 1]; ++e) {
      t.values[e] = a.weight(a.column_indices[e], static_cast<Index>(p));
    }
  }
  return t;
}

void spmm_into(const SparseAdjacency& a, const DenseMatrix& x, DenseMatrix& out, int threads) {
  if (x.rows() != a.size) {
    throw DimensionMismatch("spmm: matrix has " + std::to_string(a.size) +
                            " columns, operand has " + std::to_string(x.rows()) + " rows");
  }
  if (out.rows() != a.size || out.cols() != x.cols()) out = DenseMatrix(a.size, x.cols());
  const std::size_t dim = x.cols();
  parallel_for(a.size, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      auto dst = out.row(p);
      std::fill(dst.begin(), dst.end(), 0.0);
      for (std::size_t e = a.row_offsets[p]; e < a.row_offsets[p + 1]; ++e) {
        const double w = a.values[e];
        const auto src = x.row(a.column_indices[e]);
        for (std::size_t c = 0; c < dim; ++c) dst[c] += w * src[c];
      }
    }
  });
}

DenseMatrix spmm(const SparseAdjacency& a, const DenseMatrix& x, int threads) {
  DenseMatrix out(a.size, x.cols());
  spmm_into(a, x, out, threads);
  return out;
}

double spectral_norm_estimate(const SparseAdjacency& a, std::size_t iterations) {
  if (iterations == 0) throw InvalidArgument("spectral_norm_estimate: iterations must be >= 1");
  if (a.size == 0) return 0.0;
  const SparseAdjacency at = transpose(a);
  // The leading singular vector of a nonnegative matrix is nonnegative, so
  // the all-ones start always overlaps it.
  DenseMatrix v(a.size, 1, 1.0 / std::sqrt(static_cast<double>(a.size)));
  DenseMatrix av;
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    av = spmm(a, v);
    estimate = frobenius_norm(av);
    if (estimate == 0.0) return 0.0;
    v = spmm(at, av);
    const double n = frobenius_norm(v);
    if (n == 0.0) break;
    scale(v, 1.0 / n);
  }
  return estimate;
}

}  // namespace lgcn
