#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lgcn/dataset.hpp"
#include "lgcn/dense.hpp"
#include "lgcn/graph.hpp"
#include "lgcn/model.hpp"
#include "lgcn/rng.hpp"

namespace lgcn {

struct BprTriplet {
  Index user = 0;
  Index positive = 0;  // in train_u
  Index negative = 0;  // not in train_u

  bool operator==(const BprTriplet&) const = default;
};

// Draws (u, i) uniformly over train pairs and j uniformly over items not in
// train_u. Users who interacted with every item cannot yield a negative and
// are excluded up front, with a warning.
class TripletSampler {
 public:
  explicit TripletSampler(const InteractionDataset& ds);

  std::vector<BprTriplet> sample(std::size_t batch_size, Rng& rng) const;

  std::size_t num_pairs() const { return pairs_.size(); }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  const InteractionDataset* ds_;
  std::vector<std::pair<Index, Index>> pairs_;
  std::vector<std::string> warnings_;
};

std::vector<BprTriplet> sample_triplets(const InteractionDataset& ds, std::size_t batch_size,
                                        Rng& rng);

enum class RegularizationMode {
  PerBatch,  // (lambda / B) * sum over batch rows of ||e0_row||^2
  Global,    // lambda * ||E0||_F^2
};

enum class LaplacianMode {
  Plain,             // ||e_u - e_i||^2
  DegreeNormalized,  // ||e_u / sqrt|N_u| - e_i / sqrt|N_i|||^2
};

struct LossConfig {
  double lambda = 1e-4;
  double lambda_g = 0.0;
  RegularizationMode regularization = RegularizationMode::PerBatch;
  LaplacianMode laplacian = LaplacianMode::Plain;
};

// Mean of softplus(-(y_ui - y_uj)) over the batch, plus the L2 term on e0
// and (lambda_g / B) * sum of the Laplacian penalty over positive pairs.
// `graph` supplies node degrees for the degree-normalized Laplacian.
double bpr_loss(std::span<const BprTriplet> batch, const EmbeddingState& state,
                const SparseAdjacency& graph, const LossConfig& config);

// Gradient of bpr_loss with respect to e0. The combined-embedding gradient g
// is pulled back through the propagation as sum_k alpha_k (A^T)^k g.
// `adjacency_transpose` may be null only for adjacencies with symmetric
// values; otherwise Unimplemented is thrown.
DenseMatrix backward(std::span<const BprTriplet> batch, const EmbeddingState& state,
                     const SparseAdjacency& adjacency, const SparseAdjacency* adjacency_transpose,
                     const LayerWeights& weights, const LossConfig& config, int threads = 1);

// Propagation operator shared by forward and backward passes.
struct Propagation {
  SparseAdjacency adjacency;
  std::optional<SparseAdjacency> adjoint;  // set when values are not symmetric
  LayerWeights weights;
  int threads = 1;

  static Propagation create(SparseAdjacency adjacency, LayerWeights weights, int threads = 1);
  const SparseAdjacency* adjoint_or_null() const { return adjoint ? &*adjoint : nullptr; }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Only rows with a nonzero gradient update their moments and parameters.
  bool sparse_rows = true;
};

struct AdamState {
  DenseMatrix m;
  DenseMatrix v;
  std::uint64_t step = 0;
  AdamConfig config;

  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols, AdamConfig cfg = {})
      : m(rows, cols), v(rows, cols), config(cfg) {}
};

// Bias-corrected Adam update. A non-finite gradient throws NumericError and
// leaves both the state and the parameters untouched.
void adam_step(AdamState& state, const DenseMatrix& grad, DenseMatrix& params,
               double learning_rate);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 1024;
  LossConfig loss;
  std::size_t epochs = 1000;
  std::size_t eval_every = 20;  // 0: evaluate after the last epoch only
  std::size_t patience = 10;    // non-improving evaluations before stopping; 0 disables
  std::size_t topk = 20;
  std::uint64_t seed = 2020;
  AdamConfig adam;
  int threads = 1;
};

struct CurveRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_recall = 0.0;
  double val_ndcg = 0.0;
};

struct FitResult {
  EmbeddingState model;  // best-validation parameters, forward already applied
  std::vector<CurveRow> curve;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  bool diverged = false;
  std::string failure;
  std::vector<std::string> warnings;
};

// Mini-batch BPR training with Adam. Evaluates validation recall@topk every
// eval_every epochs, keeps the best parameters and stops after `patience`
// evaluations without improvement. Without validation users the final
// parameters are kept. A non-finite loss or gradient ends the run with
// `diverged` set and the last good parameters returned.
FitResult fit(const InteractionDataset& ds, const TrainConfig& config,
              const Propagation& propagation, EmbeddingState initial);

// Header: epoch,loss,val_recall@<k>,val_ndcg@<k>
void write_curve_csv(std::ostream& out, std::span<const CurveRow> curve, std::size_t k = 20);
void write_curve_csv(const std::filesystem::path& path, std::span<const CurveRow> curve,
                     std::size_t k = 20);

}  // namespace lgcn
