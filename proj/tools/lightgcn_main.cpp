// lightgcn: train, ablate and diagnose LightGCN models from the command line.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgcn/dataset.hpp"
#include "lgcn/error.hpp"
#include "lgcn/run.hpp"
#include "lgcn/synthetic.hpp"

namespace {

struct FlagHelp {
  const char* key;
  const char* help;
  bool is_flag = false;
};

const FlagHelp kFlags[] = {
    {"dataset", "Directory holding train.txt and test.txt"},
    {"model", "lightgcn | lightgcn-single | mf | grmf | grmf-norm (default lightgcn)"},
    {"layers", "Propagation layers K (default 3; forced to 0 for mf/grmf)"},
    {"dim", "Embedding size T (default 64)"},
    {"norm", "sym-sqrt | sqrt-left | sqrt-right | l1-both | l1-left | l1-right | none "
             "(default sym-sqrt)"},
    {"unsafe-unnormalized", "Allow --norm none", true},
    {"alpha-mode", "uniform | single-last | custom (default uniform)"},
    {"alphas", "Comma-separated alpha_0..alpha_K for custom mode"},
    {"lr", "Adam learning rate (default 0.001)"},
    {"lambda", "L2 coefficient on e0 (default 1e-4)"},
    {"lambda-g", "Graph Laplacian coefficient (default 0; 1e-4 for grmf models)"},
    {"reg-mode", "per-batch | global (default per-batch)"},
    {"epochs", "Training epochs (default 1000)"},
    {"batch-size", "Mini-batch size (default 1024)"},
    {"eval-every", "Epochs between validation evaluations (default 20)"},
    {"patience", "Non-improving evaluations before stopping; 0 disables (default 10)"},
    {"topk", "Ranking cutoff for recall/ndcg (default 20)"},
    {"seed", "Seed for every random stream (default 2020)"},
    {"validation-fraction", "Share of each user's train items held out (default 0.1)"},
    {"output", "Output directory (default out)"},
    {"threads", "Worker threads for propagation and evaluation (default 1)"},
    {"per-user", "Also write per_user.csv", true},
    {"smoothness-norm", "l2 | squared-l2 (default l2)"},
    {"k-range", "Layer counts for ablate-layers (default 1,2,3,4)"},
    {"schemes", "Normalization schemes for ablate-norm (default all six)"},
    {"checkpoint", "Checkpoint file for diagnose"},
    {"tag", "Label recorded with diagnose output"},
    {"identity-users", "Users sampled for the identity checks (default 8)"},
};

struct RunCommand {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
};

void register_run_options(RunCommand& cmd) {
  for (const auto& f : kFlags) {
    const std::string name = std::string("--") + f.key;
    if (f.is_flag) {
      cmd.options[f.key] = cmd.app->add_flag_callback(
          name, [&cmd, key = std::string(f.key)] { cmd.values[key] = "true"; }, f.help);
    } else {
      cmd.options[f.key] = cmd.app->add_option(name, cmd.values[f.key], f.help);
    }
  }
  cmd.app->add_option("--config", cmd.config_file, "Flat key=value file with the same keys");
}

std::vector<lgcn::Setting> given_settings(const RunCommand& cmd) {
  std::vector<lgcn::Setting> out;
  for (const auto& f : kFlags) {
    const auto* opt = cmd.options.at(f.key);
    if (opt->count() > 0) out.emplace_back(f.key, cmd.values.at(f.key));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LightGCN collaborative filtering engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lgcn::engine_version()));

  using Command = int (*)(const lgcn::RunConfig&, std::ostream&);
  struct Entry {
    const char* name;
    const char* help;
    Command run;
  };
  const Entry entries[] = {
      {"train", "Train a model and evaluate it on test", lgcn::cmd_train},
      {"ablate-layers", "LightGCN vs LightGCN-single over a range of K", lgcn::cmd_ablate_layers},
      {"ablate-norm", "3-layer LightGCN under each normalization scheme", lgcn::cmd_ablate_norm},
      {"diagnose", "Smoothness and propagation identity checks for a checkpoint",
       lgcn::cmd_diagnose},
  };
  std::vector<RunCommand> commands(std::size(entries));
  for (std::size_t c = 0; c < std::size(entries); ++c) {
    commands[c].app = app.add_subcommand(entries[c].name, entries[c].help);
    register_run_options(commands[c]);
  }

  auto* synth = app.add_subcommand("synth", "Write a planted-cluster dataset (train.txt, test.txt)");
  lgcn::BlockDatasetConfig block;
  std::string synth_out = "data/synthetic";
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--users", block.users, "Users")->capture_default_str();
  synth->add_option("--items", block.items, "Items")->capture_default_str();
  synth->add_option("--clusters", block.clusters, "Planted clusters")->capture_default_str();
  synth->add_option("--interactions", block.interactions_per_user, "Interactions per user")
      ->capture_default_str();
  synth->add_option("--in-cluster", block.in_cluster_probability,
                    "Probability an interaction stays in the user's cluster")
      ->capture_default_str();
  synth->add_option("--test-fraction", block.test_fraction, "Held-out share per user")
      ->capture_default_str();
  synth->add_option("--seed", block.seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? lgcn::kExitOk : lgcn::kExitConfigError;
  }

  if (synth->parsed()) {
    try {
      const auto data = lgcn::make_block_dataset(block);
      std::filesystem::create_directories(synth_out);
      auto dense = [](const lgcn::InteractionFile& f) {
        lgcn::ItemLists lists(f.users.size());
        for (std::size_t u = 0; u < f.users.size(); ++u) {
          for (auto i : f.users[u].items) lists[u].push_back(static_cast<lgcn::Index>(i));
        }
        return lists;
      };
      lgcn::write_interaction_file(std::filesystem::path(synth_out) / "train.txt", dense(data.train));
      lgcn::write_interaction_file(std::filesystem::path(synth_out) / "test.txt", dense(data.test));
      std::cout << "wrote " << synth_out << "/train.txt and test.txt\n";
      return lgcn::kExitOk;
    } catch (const lgcn::InvalidArgument& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return lgcn::kExitConfigError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return lgcn::kExitRuntimeError;
    }
  }

  for (std::size_t c = 0; c < commands.size(); ++c) {
    if (!commands[c].app->parsed()) continue;
    lgcn::ResolvedConfig resolved;
    try {
      std::vector<lgcn::Setting> file;
      if (!commands[c].config_file.empty()) file = lgcn::read_config_file(commands[c].config_file);
      resolved = lgcn::resolve_config(given_settings(commands[c]), file);
    } catch (const lgcn::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return lgcn::kExitConfigError;
    }
    for (const auto& w : resolved.warnings) std::cerr << "warning: " << w << '\n';
    return entries[c].run(resolved.config, std::cerr);
  }
  return lgcn::kExitConfigError;
}
