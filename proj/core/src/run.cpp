#include "lgcn/run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lgcn/checkpoint.hpp"
#include "lgcn/dataset.hpp"
#include "lgcn/error.hpp"

#ifndef LGCN_VERSION
#define LGCN_VERSION "0.0.0"
#endif

namespace lgcn {
namespace {

constexpr std::size_t kMaxLayers = 16;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    auto item = trim(s.substr(pos, end - pos));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError("--" + std::string(key) + "=" + std::string(value) + ": " + std::string(why));
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T v{};
  const auto s = trim(value);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    bad_value(key, value, "expected a non-negative integer");
  }
  return v;
}

double parse_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto s = trim(value);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    bad_value(key, value, "expected a finite number");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const auto s = trim(value);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, value, "expected true or false");
}

NormScheme parse_scheme(std::string_view key, std::string_view value) {
  if (auto s = parse_norm_scheme(trim(value))) return *s;
  bad_value(key, value,
            "expected one of sym-sqrt, sqrt-left, sqrt-right, l1-both, l1-left, l1-right");
}

std::string format_real(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failure on " + path.string());
}

BuildResult load_for_run(const RunConfig& config, std::ostream& log) {
  if (config.dataset_dir.empty()) throw ConfigError("--dataset is required");
  auto built = load_dataset(config.dataset_dir, config.validation_fraction, config.seed);
  for (const auto& w : built.report.warnings) log << "warning: " << w << '\n';
  const auto& ds = built.dataset;
  log << "dataset: users=" << ds.num_users << " items=" << ds.num_items
      << " train=" << ds.num_train_interactions
      << " validation=" << ds.num_validation_interactions()
      << " test=" << ds.num_test_interactions() << '\n';
  return built;
}

std::string scheme_name(const std::optional<NormScheme>& s) {
  return s ? std::string(to_string(*s)) : std::string("none");
}

SparseAdjacency make_graph(const InteractionDataset& ds, const std::optional<NormScheme>& scheme) {
  const SparseAdjacency raw = build_adjacency(ds);
  return scheme ? normalize(raw, *scheme) : raw;
}

template <typename Body>
int guarded(std::ostream& log, const RunConfig& config, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    try {
      ensure_dir(config.output_dir);
      write_text(config.output_dir / "error.txt", std::string(e.what()) + '\n');
    } catch (...) {
    }
    return kExitRuntimeError;
  }
}

}  // namespace

std::string_view engine_version() { return LGCN_VERSION; }

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LightGcn: return "lightgcn";
    case ModelKind::LightGcnSingle: return "lightgcn-single";
    case ModelKind::Mf: return "mf";
    case ModelKind::Grmf: return "grmf";
    case ModelKind::GrmfNorm: return "grmf-norm";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::LightGcn, ModelKind::LightGcnSingle, ModelKind::Mf, ModelKind::Grmf,
                 ModelKind::GrmfNorm}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

LayerWeights RunConfig::layer_weights() const {
  switch (alpha_mode) {
    case LayerMode::Uniform: return LayerWeights::uniform(layers);
    case LayerMode::SingleLast: return LayerWeights::single_last(layers);
    case LayerMode::Custom: return LayerWeights::custom(alphas);
  }
  return LayerWeights::uniform(layers);
}

LaplacianMode RunConfig::laplacian() const {
  return model == ModelKind::GrmfNorm ? LaplacianMode::DegreeNormalized : LaplacianMode::Plain;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.loss.lambda = lambda;
  t.loss.lambda_g = lambda_g;
  t.loss.regularization = regularization;
  t.loss.laplacian = laplacian();
  t.epochs = epochs;
  t.eval_every = eval_every;
  t.patience = patience;
  t.topk = topk;
  t.seed = seed;
  t.threads = threads;
  return t;
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = {
      "dataset",   "model",      "layers",     "dim",
      "norm",      "unsafe-unnormalized",      "alpha-mode", "alphas",
      "lr",        "lambda",     "lambda-g",   "reg-mode",
      "epochs",    "batch-size", "eval-every", "patience",
      "topk",      "seed",       "validation-fraction",      "output",
      "threads",   "per-user",   "smoothness-norm",          "k-range",
      "schemes",   "checkpoint", "tag",        "identity-users",
  };
  return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  const std::string k(key);
  const std::string v = trim(value);
  if (k == "dataset") {
    c.dataset_dir = v;
  } else if (k == "model") {
    auto m = parse_model_kind(v);
    if (!m) bad_value(key, value, "expected lightgcn, lightgcn-single, mf, grmf or grmf-norm");
    c.model = *m;
  } else if (k == "layers") {
    c.layers = parse_integer<std::size_t>(key, v);
  } else if (k == "dim") {
    c.dim = parse_integer<std::size_t>(key, v);
  } else if (k == "norm") {
    c.norm = v == "none" ? std::nullopt : std::optional<NormScheme>(parse_scheme(key, v));
  } else if (k == "unsafe-unnormalized") {
    c.unsafe_unnormalized = parse_bool(key, v);
  } else if (k == "alpha-mode") {
    if (v == "uniform") c.alpha_mode = LayerMode::Uniform;
    else if (v == "single-last") c.alpha_mode = LayerMode::SingleLast;
    else if (v == "custom") c.alpha_mode = LayerMode::Custom;
    else bad_value(key, value, "expected uniform, single-last or custom");
  } else if (k == "alphas") {
    c.alphas.clear();
    for (const auto& item : split_list(v)) c.alphas.push_back(parse_real(key, item));
  } else if (k == "lr") {
    c.learning_rate = parse_real(key, v);
  } else if (k == "lambda") {
    c.lambda = parse_real(key, v);
  } else if (k == "lambda-g") {
    c.lambda_g = parse_real(key, v);
  } else if (k == "reg-mode") {
    if (v == "per-batch") c.regularization = RegularizationMode::PerBatch;
    else if (v == "global") c.regularization = RegularizationMode::Global;
    else bad_value(key, value, "expected per-batch or global");
  } else if (k == "epochs") {
    c.epochs = parse_integer<std::size_t>(key, v);
  } else if (k == "batch-size") {
    c.batch_size = parse_integer<std::size_t>(key, v);
  } else if (k == "eval-every") {
    c.eval_every = parse_integer<std::size_t>(key, v);
  } else if (k == "patience") {
    c.patience = parse_integer<std::size_t>(key, v);
  } else if (k == "topk") {
    c.topk = parse_integer<std::size_t>(key, v);
  } else if (k == "seed") {
    c.seed = parse_integer<std::uint64_t>(key, v);
  } else if (k == "validation-fraction") {
    c.validation_fraction = parse_real(key, v);
  } else if (k == "output") {
    c.output_dir = v;
  } else if (k == "threads") {
    c.threads = parse_integer<int>(key, v);
  } else if (k == "per-user") {
    c.per_user = parse_bool(key, v);
  } else if (k == "smoothness-norm") {
    if (v == "l2") c.smoothness_norm = SmoothnessNorm::L2;
    else if (v == "squared-l2") c.smoothness_norm = SmoothnessNorm::SquaredL2;
    else bad_value(key, value, "expected l2 or squared-l2");
  } else if (k == "k-range") {
    c.k_range.clear();
    for (const auto& item : split_list(v)) c.k_range.push_back(parse_integer<std::size_t>(key, item));
  } else if (k == "schemes") {
    c.schemes.clear();
    for (const auto& item : split_list(v)) c.schemes.push_back(parse_scheme(key, item));
  } else if (k == "checkpoint") {
    c.checkpoint = v;
  } else if (k == "tag") {
    c.tag = v;
  } else if (k == "identity-users") {
    c.identity_users = parse_integer<std::size_t>(key, v);
  } else {
    throw ConfigError("unknown setting '" + k + "'");
  }
  c.explicit_keys.insert(k);
}

std::vector<Setting> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::vector<Setting> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(trim(std::string_view(t).substr(0, eq)),
                     trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

ResolvedConfig resolve_config(const std::vector<Setting>& flags,
                              const std::vector<Setting>& file_settings) {
  ResolvedConfig r;
  RunConfig& c = r.config;
  for (const auto& [k, v] : flags) apply_setting(c, k, v);
  const std::set<std::string> from_flags = c.explicit_keys;
  for (const auto& [k, v] : file_settings) {
    if (!from_flags.contains(k)) apply_setting(c, k, v);
  }
  const auto given = [&](const char* key) { return c.explicit_keys.contains(key); };

  if (given("alphas") && !given("alpha-mode")) c.alpha_mode = LayerMode::Custom;

  switch (c.model) {
    case ModelKind::Mf:
    case ModelKind::Grmf:
    case ModelKind::GrmfNorm:
      if (given("layers") && c.layers != 0) {
        r.warnings.push_back("--model " + std::string(to_string(c.model)) +
                             " ignores --layers; using K=0");
      }
      c.layers = 0;
      c.alpha_mode = LayerMode::Uniform;
      c.alphas.clear();
      if (c.model != ModelKind::Mf && !given("lambda-g")) c.lambda_g = 1e-4;
      if (c.model != ModelKind::Mf && !(c.lambda_g > 0.0)) {
        throw ConfigError("--model " + std::string(to_string(c.model)) + " needs --lambda-g > 0");
      }
      break;
    case ModelKind::LightGcnSingle:
      if (given("alpha-mode") && c.alpha_mode != LayerMode::SingleLast) {
        r.warnings.push_back("--model lightgcn-single forces --alpha-mode single-last");
      }
      c.alpha_mode = LayerMode::SingleLast;
      c.alphas.clear();
      break;
    case ModelKind::LightGcn:
      break;
  }

  if (c.alpha_mode == LayerMode::Custom) {
    if (c.alphas.size() != c.layers + 1) {
      throw ConfigError("--alphas needs " + std::to_string(c.layers + 1) + " values for K=" +
                        std::to_string(c.layers));
    }
    if (std::any_of(c.alphas.begin(), c.alphas.end(), [](double a) { return a < 0.0; })) {
      throw ConfigError("--alphas must be nonnegative");
    }
  } else {
    c.alphas.clear();
  }
  if (!c.norm && !c.unsafe_unnormalized) {
    throw ConfigError("--norm none is numerically unstable; pass --unsafe-unnormalized to allow it");
  }
  if (c.layers > kMaxLayers) throw ConfigError("--layers must be at most 16");
  if (c.dim == 0) throw ConfigError("--dim must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("--lr must be > 0");
  if (c.lambda < 0.0 || c.lambda_g < 0.0) throw ConfigError("--lambda and --lambda-g must be >= 0");
  if (c.batch_size == 0) throw ConfigError("--batch-size must be >= 1");
  if (c.topk == 0) throw ConfigError("--topk must be >= 1");
  if (c.threads < 1) throw ConfigError("--threads must be >= 1");
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
    throw ConfigError("--validation-fraction must lie in [0, 1)");
  }
  if (c.k_range.empty()) throw ConfigError("--k-range must not be empty");
  for (auto k : c.k_range) {
    if (k == 0 || k > kMaxLayers) throw ConfigError("--k-range values must lie in [1, 16]");
  }
  if (c.schemes.empty()) throw ConfigError("--schemes must not be empty");
  return r;
}

std::string config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["engine"] = "lightgcn";
  j["version"] = std::string(engine_version());
  j["dataset"] = c.dataset_dir.string();
  j["model"] = std::string(to_string(c.model));
  j["layers"] = c.layers;
  j["dim"] = c.dim;
  j["norm"] = scheme_name(c.norm);
  j["alpha_mode"] = std::string(to_string(c.alpha_mode));
  j["alphas"] = c.layer_weights().alphas;
  j["lr"] = c.learning_rate;
  j["lambda"] = c.lambda;
  j["lambda_g"] = c.lambda_g;
  j["reg_mode"] = c.regularization == RegularizationMode::PerBatch ? "per-batch" : "global";
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["eval_every"] = c.eval_every;
  j["patience"] = c.patience;
  j["topk"] = c.topk;
  j["seed"] = c.seed;
  j["validation_fraction"] = c.validation_fraction;
  j["output"] = c.output_dir.string();
  j["threads"] = c.threads;
  j["per_user"] = c.per_user;
  j["smoothness_norm"] = c.smoothness_norm == SmoothnessNorm::L2 ? "l2" : "squared-l2";
  j["k_range"] = c.k_range;
  std::vector<std::string> schemes;
  for (auto s : c.schemes) schemes.emplace_back(to_string(s));
  j["schemes"] = schemes;
  j["checkpoint"] = c.checkpoint.string();
  j["tag"] = c.tag;
  j["identity_users"] = c.identity_users;
  return j.dump(2);
}

TrainOutcome train_and_evaluate(const InteractionDataset& ds, const RunConfig& config) {
  const auto propagation =
      Propagation::create(make_graph(ds, config.norm), config.layer_weights(), config.threads);
  auto initial = init_embeddings(ds.num_users, ds.num_items, config.dim,
                                 derive_seed(config.seed, 0x1417));
  TrainOutcome out{fit(ds, config.train_config(), propagation, std::move(initial)), {}};
  out.test = evaluate_all_ranking(out.fit.model, ds, config.topk, EvalTarget::Test,
                                  config.per_user, config.threads);
  return out;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  return guarded(log, config, [&] {
    ensure_dir(config.output_dir);
    const std::string resolved = config_json(config);
    write_text(config.output_dir / "run.json", resolved + '\n');
    log << resolved << '\n';

    const auto built = load_for_run(config, log);
    const auto& ds = built.dataset;
    write_id_map(config.output_dir / "mapping.json", ds.ids);

    const auto outcome = train_and_evaluate(ds, config);
    const auto& fitted = outcome.fit;
    for (const auto& w : fitted.warnings) log << "warning: " << w << '\n';
    write_curve_csv(config.output_dir / "curve.csv", fitted.curve, config.topk);
    write_checkpoint(config.output_dir / "checkpoint.lgcn",
                     Checkpoint{ds.num_users, ds.num_items, config.norm, config.layer_weights(),
                                fitted.model.e0()});
    if (fitted.diverged) {
      log << "error: training diverged: " << fitted.failure << '\n';
      write_text(config.output_dir / "error.txt",
                 "training diverged: " + fitted.failure + "\nbest checkpoint from epoch " +
                     std::to_string(fitted.best_epoch) + "\n");
      return kExitRuntimeError;
    }
    write_report_json(config.output_dir / "report.json", outcome.test);
    if (config.per_user) write_per_user_csv(config.output_dir / "per_user.csv", outcome.test);
    log << "epochs run: " << fitted.epochs_run << " best epoch: " << fitted.best_epoch
        << (fitted.stopped_early ? " (early stop)" : "") << '\n';
    log << "test " << report_json(outcome.test) << '\n';
    return kExitOk;
  });
}

int cmd_ablate_layers(const RunConfig& config, std::ostream& log) {
  return guarded(log, config, [&] {
    ensure_dir(config.output_dir);
    write_text(config.output_dir / "run.json", config_json(config) + '\n');
    const auto built = load_for_run(config, log);
    std::ostringstream csv;
    csv << "model,layers,recall@" << config.topk << ",ndcg@" << config.topk << '\n';
    for (std::size_t k : config.k_range) {
      for (auto kind : {ModelKind::LightGcn, ModelKind::LightGcnSingle}) {
        RunConfig run = config;
        run.model = kind;
        run.layers = k;
        run.alpha_mode = kind == ModelKind::LightGcn ? LayerMode::Uniform : LayerMode::SingleLast;
        run.alphas.clear();
        const auto outcome = train_and_evaluate(built.dataset, run);
        if (outcome.fit.diverged) throw NumericError(outcome.fit.failure);
        csv << to_string(kind) << ',' << k << ',' << format_real(outcome.test.recall) << ','
            << format_real(outcome.test.ndcg) << '\n';
        log << to_string(kind) << " K=" << k << " recall=" << outcome.test.recall
            << " ndcg=" << outcome.test.ndcg << '\n';
      }
    }
    write_text(config.output_dir / "ablate_layers.csv", csv.str());
    return kExitOk;
  });
}

int cmd_ablate_norm(const RunConfig& config, std::ostream& log) {
  return guarded(log, config, [&] {
    ensure_dir(config.output_dir);
    write_text(config.output_dir / "run.json", config_json(config) + '\n');
    const auto built = load_for_run(config, log);
    std::ostringstream csv;
    csv << "scheme,recall@" << config.topk << ",ndcg@" << config.topk << '\n';
    for (NormScheme scheme : config.schemes) {
      RunConfig run = config;
      run.model = ModelKind::LightGcn;
      run.layers = 3;
      run.alpha_mode = LayerMode::Uniform;
      run.alphas.clear();
      run.norm = scheme;
      const auto outcome = train_and_evaluate(built.dataset, run);
      if (outcome.fit.diverged) throw NumericError(outcome.fit.failure);
      csv << to_string(scheme) << ',' << format_real(outcome.test.recall) << ','
          << format_real(outcome.test.ndcg) << '\n';
      log << to_string(scheme) << " recall=" << outcome.test.recall
          << " ndcg=" << outcome.test.ndcg << '\n';
    }
    write_text(config.output_dir / "ablate_norm.csv", csv.str());
    return kExitOk;
  });
}

int cmd_diagnose(const RunConfig& config, std::ostream& log) {
  return guarded(log, config, [&] {
    if (config.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    ensure_dir(config.output_dir);
    const Checkpoint ckpt = read_checkpoint(config.checkpoint);
    const auto built = load_for_run(config, log);
    const auto& ds = built.dataset;
    if (ckpt.num_users != ds.num_users || ckpt.num_items != ds.num_items) {
      throw ConfigError("checkpoint has M=" + std::to_string(ckpt.num_users) +
                        " N=" + std::to_string(ckpt.num_items) + ", dataset has M=" +
                        std::to_string(ds.num_users) + " N=" + std::to_string(ds.num_items));
    }
    if (config.explicit_keys.contains("dim") && ckpt.dim() != config.dim) {
      throw ConfigError("checkpoint has T=" + std::to_string(ckpt.dim()) +
                        ", --dim is " + std::to_string(config.dim));
    }
    EmbeddingState state(ckpt.num_users, ckpt.num_items, ckpt.e0);
    forward(state, make_graph(ds, ckpt.scheme), ckpt.weights, config.threads);

    std::string tag = config.tag;
    if (tag.empty()) {
      tag = "K=" + std::to_string(ckpt.weights.layers()) + " " +
            std::string(to_string(ckpt.weights.mode)) + " " + scheme_name(ckpt.scheme);
    }
    const auto report = smoothness_report(state, ds, tag, config.smoothness_norm);
    const auto checks =
        check_propagation_identities(ds, ckpt.e0, config.identity_users, 64, config.seed);

    std::ofstream diag(config.output_dir / "diagnostics.jsonl", std::ios::app);
    if (!diag) throw IoError("cannot append to diagnostics.jsonl");
    diag << to_json_line(report) << '\n';
    bool ok = true;
    for (const auto& c : checks) {
      nlohmann::ordered_json j;
      j["identity"] = c.name;
      j["max_error"] = c.max_error;
      j["tolerance"] = c.tolerance;
      j["passed"] = c.passed;
      diag << j.dump() << '\n';
      ok = ok && c.passed;
    }

    log << "S_U=" << format_real(report.s_user) << " S_I=" << format_real(report.s_item)
        << " (" << report.model_tag << ")\n";
    for (const auto& c : checks) {
      log << c.name << " identity: " << (c.passed ? "pass" : "FAIL")
          << " (max error " << c.max_error << ")\n";
    }
    return ok ? kExitOk : kExitRuntimeError;
  });
}

}  // namespace lgcn
