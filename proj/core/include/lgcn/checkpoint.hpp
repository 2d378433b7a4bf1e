#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "lgcn/graph.hpp"
#include "lgcn/model.hpp"

namespace lgcn {

// On-disk layout:
//   LGCN v1 <M> <N> <T> <K> <scheme>\n
//   (M+N)*T little-endian IEEE-754 doubles, row-major e0
//   alpha <a_0> ... <a_K>\n
// `scheme` is a NormScheme name or "none" for the unnormalized adjacency.
struct Checkpoint {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::optional<NormScheme> scheme = NormScheme::SymSqrt;
  LayerWeights weights = LayerWeights::uniform(0);
  DenseMatrix e0;

  std::size_t dim() const { return e0.cols(); }
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& source = "checkpoint");
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace lgcn
