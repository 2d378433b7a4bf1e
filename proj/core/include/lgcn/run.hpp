#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lgcn/analysis.hpp"
#include "lgcn/evaluation.hpp"
#include "lgcn/graph.hpp"
#include "lgcn/model.hpp"
#include "lgcn/training.hpp"

namespace lgcn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

std::string_view engine_version();

enum class ModelKind { LightGcn, LightGcnSingle, Mf, Grmf, GrmfNorm };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

// Fully resolved settings of one command invocation.
struct RunConfig {
  std::filesystem::path dataset_dir;
  ModelKind model = ModelKind::LightGcn;
  std::size_t layers = 3;
  std::size_t dim = 64;
  std::optional<NormScheme> norm = NormScheme::SymSqrt;  // nullopt: raw adjacency
  bool unsafe_unnormalized = false;
  LayerMode alpha_mode = LayerMode::Uniform;
  std::vector<double> alphas;  // Custom mode only
  double learning_rate = 1e-3;
  double lambda = 1e-4;
  double lambda_g = 0.0;
  RegularizationMode regularization = RegularizationMode::PerBatch;
  std::size_t epochs = 1000;
  std::size_t batch_size = 1024;
  std::size_t eval_every = 20;
  std::size_t patience = 10;
  std::size_t topk = 20;
  std::uint64_t seed = 2020;
  double validation_fraction = 0.1;
  std::filesystem::path output_dir = "out";
  int threads = 1;
  bool per_user = false;
  SmoothnessNorm smoothness_norm = SmoothnessNorm::L2;
  std::vector<std::size_t> k_range = {1, 2, 3, 4};
  std::vector<NormScheme> schemes = {std::begin(kAllNormSchemes), std::end(kAllNormSchemes)};
  std::filesystem::path checkpoint;
  std::string tag;
  std::size_t identity_users = 8;

  // Keys set explicitly by flag or config file.
  std::set<std::string> explicit_keys;

  LayerWeights layer_weights() const;
  TrainConfig train_config() const;
  LaplacianMode laplacian() const;
};

using Setting = std::pair<std::string, std::string>;

// Keys accepted by apply_setting, in documentation order.
const std::vector<std::string>& setting_keys();

// Parses `value` into the field named by `key`; throws ConfigError.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Flat `key=value` lines; blank lines and lines starting with '#' ignored.
std::vector<Setting> read_config_file(const std::filesystem::path& path);

struct ResolvedConfig {
  RunConfig config;
  std::vector<std::string> warnings;
};

// Applies command-line settings, then file settings for keys not given on
// the command line, then model constraints (mf/grmf force K = 0,
// lightgcn-single forces single-last weights) and range checks.
ResolvedConfig resolve_config(const std::vector<Setting>& flags,
                              const std::vector<Setting>& file_settings = {});

// Resolved configuration plus engine version, as written to run.json.
std::string config_json(const RunConfig& config);

// Each command returns an exit code and writes its artifacts under
// config.output_dir. Progress and warnings go to `log`.
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_ablate_layers(const RunConfig& config, std::ostream& log);
int cmd_ablate_norm(const RunConfig& config, std::ostream& log);
int cmd_diagnose(const RunConfig& config, std::ostream& log);

struct TrainOutcome {
  FitResult fit;
  EvalReport test;
};

// Builds the graph for the configured model, trains and evaluates on test.
TrainOutcome train_and_evaluate(const InteractionDataset& ds, const RunConfig& config);

}  // namespace lgcn
