// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: miaudit {grid,attack,eval,compare-hpo,gc}.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "miaudit/experiment.h"
#include "miaudit/status_macros.h"
#include "miaudit/store.h"

namespace {

namespace fs = std::filesystem;
using miaudit::ExperimentConfig;

constexpr char kStoreEnv[] = "MIAUDIT_STORE";

struct Options {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::string store;
  std::vector<std::string> strategies;
  bool remove = false;
};

absl::StatusOr<ExperimentConfig> LoadConfig(const Options& opts) {
  MIAUDIT_ASSIGN_OR_RETURN(ExperimentConfig config,
                           miaudit::LoadExperimentConfig(opts.config_path));
  if (opts.seed) miaudit::ApplyMasterSeed(config, *opts.seed);
  if (opts.jobs) config.jobs = *opts.jobs;
  MIAUDIT_RETURN_IF_ERROR(config.Validate());
  return config;
}

fs::path StoreRoot(const Options& opts, const ExperimentConfig* config) {
  if (const char* env = std::getenv(kStoreEnv); env != nullptr && *env != '\0') {
    return env;
  }
  if (!opts.store.empty()) return opts.store;
  return config != nullptr ? config->output_dir / "store" : fs::path("store");
}

absl::Status RunCommand(const std::string& command, const Options& opts) {
  if (command == "gc") {
    std::optional<ExperimentConfig> config;
    if (!opts.config_path.empty()) {
      MIAUDIT_ASSIGN_OR_RETURN(config, LoadConfig(opts));
    }
    MIAUDIT_ASSIGN_OR_RETURN(
        std::unique_ptr<miaudit::FileStore> store,
        miaudit::FileStore::Open(StoreRoot(opts, config ? &*config : nullptr)));
    MIAUDIT_ASSIGN_OR_RETURN(auto unreferenced, miaudit::CmdGc(*store));
    for (const auto& obj : unreferenced) {
      const fs::path path = store->root() / std::string(miaudit::ObjectKindDir(obj.kind)) /
                            miaudit::ToHex(obj.digest);
      std::cout << path.string() << "\n";
      if (opts.remove) fs::remove(path);
    }
    std::cerr << absl::StrFormat("%d unreferenced objects%s\n", unreferenced.size(),
                                 opts.remove ? " removed" : "");
    return absl::OkStatus();
  }

  MIAUDIT_ASSIGN_OR_RETURN(ExperimentConfig config, LoadConfig(opts));
  if (command == "eval") {
    MIAUDIT_ASSIGN_OR_RETURN(miaudit::EvalSummary summary,
                             miaudit::CmdEval(config, &std::cerr));
    for (const miaudit::EvalRow& row : summary.rows) {
      std::cout << absl::StrFormat("%-9s fpr=%-6g tpr=%.4f  [%.4f, %.4f]  median=%.4f%s\n",
                                   miaudit::StrategyName(row.strategy), row.fpr, row.tpr,
                                   row.ci.lo, row.ci.hi, row.tpr_median,
                                   row.dp_bound
                                       ? absl::StrFormat("  dp_ub=%.4f", *row.dp_bound)
                                       : "");
    }
    return absl::OkStatus();
  }

  MIAUDIT_ASSIGN_OR_RETURN(std::unique_ptr<miaudit::FileStore> store,
                           miaudit::FileStore::Open(StoreRoot(opts, &config)));
  if (command == "grid") {
    MIAUDIT_ASSIGN_OR_RETURN(miaudit::GridSummary summary,
                             miaudit::CmdGrid(config, *store, &std::cerr));
    std::cout << absl::StrFormat("grid manifest %s (%d models trained)\n",
                                 summary.manifest.string(), summary.models_trained);
    return absl::OkStatus();
  }
  if (command == "attack") {
    std::vector<miaudit::Strategy> strategies = config.strategies;
    if (!opts.strategies.empty()) {
      strategies.clear();
      for (const std::string& name : opts.strategies) {
        MIAUDIT_ASSIGN_OR_RETURN(miaudit::Strategy s, miaudit::ParseStrategy(name));
        strategies.push_back(s);
      }
    }
    MIAUDIT_ASSIGN_OR_RETURN(miaudit::AttackSummary summary,
                             miaudit::CmdAttack(config, strategies, *store, &std::cerr));
    for (const auto& [strategy, trained] : summary.models_trained) {
      std::cout << absl::StrFormat("%s: %d models trained\n",
                                   miaudit::StrategyName(strategy), trained);
    }
    return absl::OkStatus();
  }
  if (command == "compare-hpo") {
    MIAUDIT_ASSIGN_OR_RETURN(auto rows, miaudit::CmdCompareHpo(config, *store, &std::cerr));
    std::cout << miaudit::CompareTableCsv(config, rows, miaudit::TestKind::kPairedT)
              << miaudit::CompareTableCsv(config, rows, miaudit::TestKind::kPermutation);
    return absl::OkStatus();
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown command ", command));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference auditing on a toy training stack"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* config = sub->add_option("--config", opts.config_path, "Experiment config (JSON)");
    if (config_required) config->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Master seed; overrides the config seeds");
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--store", opts.store,
                    absl::StrCat("Store root (", kStoreEnv, " takes precedence)"));
  };
  add_common(app.add_subcommand("grid", "Run HPO and train the diagonal target models"),
             true);
  CLI::App* attack = app.add_subcommand("attack", "Run attack campaigns on all targets");
  add_common(attack, true);
  attack->add_option("--strategy", opts.strategies, "lira, acc, kl or threshold")
      ->delimiter(',');
  add_common(app.add_subcommand("eval", "Write ROC curves, summary tables and plots"), true);
  add_common(app.add_subcommand("compare-hpo", "Paired TD-HPO versus ED-HPO tests"), true);
  CLI::App* gc = app.add_subcommand("gc", "List store objects no manifest references");
  add_common(gc, false);
  gc->add_flag("--delete", opts.remove, "Delete the listed objects");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const absl::Status status = RunCommand(command, opts);
  if (!status.ok()) {
    std::cerr << "miaudit " << command << ": " << status << "\n";
    return miaudit::ExitCodeFor(status);
  }
  return 0;
}
