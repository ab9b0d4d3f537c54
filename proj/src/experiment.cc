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

#include "miaudit/experiment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "json.hpp"
#include "miaudit/seeding.h"
#include "miaudit/status_macros.h"
#include "miaudit/svg_plot.h"

namespace miaudit {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// --- config parsing helpers ---

absl::Status CheckKeys(const Json& obj, std::initializer_list<const char*> allowed,
                       absl::string_view where) {
  if (!obj.is_object()) {
    return absl::InvalidArgumentError(absl::StrCat(where, " must be an object"));
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown config key '", where, ".", item.key(), "'"));
    }
  }
  return absl::OkStatus();
}

template <typename T>
absl::Status Read(const Json& obj, const char* key, T& out, absl::string_view where) {
  if (!obj.contains(key)) return absl::OkStatus();
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    return absl::InvalidArgumentError(
        absl::StrCat("config key '", where, ".", key, "' has the wrong type"));
  }
  return absl::OkStatus();
}

std::string FprLabel(double fpr) { return absl::StrFormat("%g", fpr); }

std::string MiaDisplayName(Strategy s) {
  switch (s) {
    case Strategy::kLira:
      return "LiRA";
    case Strategy::kAcc:
      return "ACC-LiRA";
    case Strategy::kKl:
      return "KL-LiRA";
    case Strategy::kThreshold:
      return "Threshold";
  }
  return "?";
}

std::string ModelLabel(const Architecture& arch) {
  return arch.kind == ArchKind::kLinear ? "linear"
                                        : absl::StrCat("mlp-", arch.hidden_units);
}

OrderedJson HypersToJson(const HyperParams& h) {
  return OrderedJson::parse(HyperParamsJson(h));
}

// --- file helpers ---

absl::Status WriteText(const fs::path& path, absl::string_view text) {
  return WriteFileAtomic(path, text);
}

absl::StatusOr<std::vector<std::vector<std::string>>> ReadCsv(
    const fs::path& path, absl::string_view expected_header) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) {
    return absl::NotFoundError(absl::StrCat("missing ", path.string()));
  }
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  for (absl::string_view line : absl::StrSplit(*text, '\n', absl::SkipEmpty())) {
    if (header) {
      if (line != expected_header) {
        return absl::DataLossError(absl::StrCat(path.string(), ": unexpected header '",
                                                line, "'"));
      }
      header = false;
      continue;
    }
    rows.push_back(absl::StrSplit(line, ','));
  }
  return rows;
}

absl::StatusOr<double> ParseDouble(absl::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v;
  if (!absl::SimpleAtod(s, &v)) {
    return absl::DataLossError(absl::StrCat("bad number '", s, "'"));
  }
  return v;
}

absl::StatusOr<int64_t> ParseInt(absl::string_view s) {
  int64_t v;
  if (!absl::SimpleAtoi(s, &v)) {
    return absl::DataLossError(absl::StrCat("bad integer '", s, "'"));
  }
  return v;
}

void Log(std::ostream* log, absl::string_view message) {
  if (log != nullptr) *log << message << std::endl;
}

constexpr absl::string_view kScoresHeader = "target,sample_id,score,is_member";
constexpr absl::string_view kTargetsHeader = "target,n_train,lr,batch,epochs,clip,noise";
constexpr absl::string_view kPairsHeader = "strategy,repeat,target,fpr,tpr_td,tpr_ed";

fs::path GridManifestPath(const ExperimentConfig& config) {
  return config.output_dir / "grid_manifest.json";
}

fs::path AttackDir(const ExperimentConfig& config, Strategy s) {
  return config.output_dir / "attack" / std::string(StrategyName(s));
}

// Canonical config text without fields that do not affect results.
std::string ResultConfigJson(const ExperimentConfig& config) {
  OrderedJson j = OrderedJson::parse(ExperimentConfigJson(config));
  j.erase("jobs");
  j.erase("output_dir");
  return j.dump();
}

OrderedJson ObjectsJson(const CellTrainer& trainer) {
  OrderedJson objects = {{"models", OrderedJson::array()},
                         {"scores", OrderedJson::array()},
                         {"hpo", OrderedJson::array()}};
  for (const auto& [kind, digest] : trainer.TouchedObjects()) {
    objects[std::string(ObjectKindDir(kind))].push_back(ToHex(digest));
  }
  return objects;
}

std::string TargetsCsv(MiaGrid& grid, CellTrainer& trainer,
                       std::span<const AttackResult> results) {
  std::string out = absl::StrCat(kTargetsHeader, "\n");
  for (const AttackResult& r : results) {
    const int64_t n = static_cast<int64_t>(grid.row_set(r.target).size());
    const HyperParams h = trainer.Resolve(r.target_hypers, n).value_or(r.target_hypers);
    absl::StrAppendFormat(&out, "%d,%d,%.17g,%d,%d,%s,%s\n", r.target, n,
                          h.learning_rate, h.batch_size, h.epochs,
                          h.clip_norm ? absl::StrFormat("%.17g", *h.clip_norm) : "",
                          h.noise_multiplier
                              ? absl::StrFormat("%.17g", *h.noise_multiplier)
                              : "");
  }
  return out;
}

std::string KlCsv(std::span<const AttackResult> results) {
  std::string out =
      "target,candidate,source_row,lr,batch,mean_divergence,selected\n";
  for (const AttackResult& r : results) {
    if (!r.kl) continue;
    for (size_t j = 0; j < r.kl->candidates.size(); ++j) {
      absl::StrAppendFormat(&out, "%d,%d,%d,%.17g,%d,%.17g,%d\n", r.target, j,
                            r.kl->source_rows[j], r.kl->candidates[j].learning_rate,
                            r.kl->candidates[j].batch_size, r.kl->mean_divergence[j],
                            static_cast<int>(j) == r.kl->winner ? 1 : 0);
    }
  }
  return out;
}

absl::StatusOr<std::vector<AttackResult>> ReadScores(const fs::path& path,
                                                     Strategy strategy) {
  MIAUDIT_ASSIGN_OR_RETURN(auto rows, ReadCsv(path, kScoresHeader));
  std::vector<AttackResult> results;
  for (const auto& row : rows) {
    if (row.size() != 4) return absl::DataLossError(absl::StrCat(path.string(), ": bad row"));
    MIAUDIT_ASSIGN_OR_RETURN(const int64_t target, ParseInt(row[0]));
    if (results.empty() || results.back().target != target) {
      results.emplace_back();
      results.back().target = static_cast<int>(target);
      results.back().strategy = strategy;
    }
    AttackResult& r = results.back();
    MIAUDIT_ASSIGN_OR_RETURN(const int64_t id, ParseInt(row[1]));
    MIAUDIT_ASSIGN_OR_RETURN(const double score, ParseDouble(row[2]));
    MIAUDIT_ASSIGN_OR_RETURN(const int64_t member, ParseInt(row[3]));
    r.sample_ids.push_back(static_cast<uint64_t>(id));
    r.scores.push_back(score);
    r.is_member.push_back(member != 0 ? 1 : 0);
  }
  return results;
}

absl::StatusOr<std::vector<TrainedTarget>> ReadTargets(const fs::path& path) {
  MIAUDIT_ASSIGN_OR_RETURN(auto rows, ReadCsv(path, kTargetsHeader));
  std::vector<TrainedTarget> out;
  for (const auto& row : rows) {
    if (row.size() != 7) return absl::DataLossError(absl::StrCat(path.string(), ": bad row"));
    TrainedTarget t;
    MIAUDIT_ASSIGN_OR_RETURN(const int64_t target, ParseInt(row[0]));
    t.row = static_cast<int>(target);
    MIAUDIT_ASSIGN_OR_RETURN(t.n_train, ParseInt(row[1]));
    MIAUDIT_ASSIGN_OR_RETURN(t.hypers.learning_rate, ParseDouble(row[2]));
    MIAUDIT_ASSIGN_OR_RETURN(const int64_t batch, ParseInt(row[3]));
    MIAUDIT_ASSIGN_OR_RETURN(const int64_t epochs, ParseInt(row[4]));
    t.hypers.batch_size = static_cast<int>(batch);
    t.hypers.epochs = static_cast<int>(epochs);
    if (!row[5].empty()) {
      MIAUDIT_ASSIGN_OR_RETURN(const double clip, ParseDouble(row[5]));
      MIAUDIT_ASSIGN_OR_RETURN(const double noise, ParseDouble(row[6]));
      t.hypers.clip_norm = clip;
      t.hypers.noise_multiplier = noise;
    }
    out.push_back(t);
  }
  return out;
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double TargetTpr(const AttackResult& r, double fpr) {
  std::unique_ptr<bool[]> labels(new bool[r.is_member.size()]);
  for (size_t k = 0; k < r.is_member.size(); ++k) labels[k] = r.is_member[k] != 0;
  absl::StatusOr<RocCurve> roc =
      ComputeRoc(r.scores, std::span<const bool>(labels.get(), r.is_member.size()));
  return roc.ok() ? TprAtFpr(*roc, fpr) : 0.0;
}

absl::Status RequireGridManifest(const ExperimentConfig& config) {
  absl::StatusOr<std::string> text = ReadFile(GridManifestPath(config));
  if (!text.ok()) {
    return absl::NotFoundError(absl::StrCat("no grid manifest at ",
                                            GridManifestPath(config).string(),
                                            "; run the grid command first"));
  }
  const Json j = Json::parse(*text, nullptr, false);
  if (j.is_discarded() || !j.contains("config")) {
    return absl::DataLossError("grid manifest is not valid JSON");
  }
  if (j.at("config").dump() != Json::parse(ResultConfigJson(config)).dump()) {
    return absl::InvalidArgumentError(
        "grid manifest was produced by a different config; rerun the grid command");
  }
  return absl::OkStatus();
}

}  // namespace

// --- config ---

absl::Status ExperimentConfig::Validate() const {
  if (name.empty() || name.find_first_of("/\\ ") != std::string::npos) {
    return absl::InvalidArgumentError(
        absl::StrCat("config name '", name, "' must be non-empty without spaces or slashes"));
  }
  MIAUDIT_RETURN_IF_ERROR(data.Validate());
  MIAUDIT_RETURN_IF_ERROR(arch.Validate());
  if (arch.dim != data.dim || arch.classes != data.classes) {
    return absl::InvalidArgumentError("architecture dims must match the data spec");
  }
  if (m < 1) return absl::InvalidArgumentError(absl::StrCat("grid.M must be >= 1, got ", m));
  if (shots < 1) return absl::InvalidArgumentError(absl::StrCat("grid.S must be >= 1, got ", shots));
  std::set<int> seen;
  for (int t : targets) {
    if (t < 0 || t > m) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid.targets entry ", t, " outside [0, ", m, "]"));
    }
    if (!seen.insert(t).second) {
      return absl::InvalidArgumentError(absl::StrCat("grid.targets repeats ", t));
    }
  }
  if (dp) MIAUDIT_RETURN_IF_ERROR(dp->Validate());
  if (space.trials < 1) return absl::InvalidArgumentError("hpo.trials must be >= 1");
  if (space.epochs < 1 || space.epochs > 200) {
    return absl::InvalidArgumentError("hpo.epochs must lie in [1, 200]");
  }
  if (!(space.lr_min > 0 && space.lr_min <= space.lr_max) ||
      !(space.clip_min > 0 && space.clip_min <= space.clip_max) || space.batch_min < 1) {
    return absl::InvalidArgumentError("hpo search ranges are invalid");
  }
  if (strategies.empty()) return absl::InvalidArgumentError("attack.strategies is empty");
  if (attack.c < 1 || attack.n < 1) {
    return absl::InvalidArgumentError("attack.C and attack.N must be >= 1");
  }
  if (std::count(strategies.begin(), strategies.end(), Strategy::kKl) > 0) {
    if (attack.c > m) {
      return absl::InvalidArgumentError(
          absl::StrCat("attack.C=", attack.c, " exceeds M=", m));
    }
    if (attack.n > m - 1 + (hpo_source == HpoSource::kTd ? 1 : 0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("attack.N=", attack.n, " is too large for M=", m));
    }
  }
  MIAUDIT_RETURN_IF_ERROR(ResolveVarianceMode(attack.variance_mode, m).status());
  if (repeats < 1) return absl::InvalidArgumentError("repeats must be >= 1");
  if (fpr_grid.empty()) return absl::InvalidArgumentError("fpr_grid is empty");
  for (double f : fpr_grid) {
    if (!(f > 0.0 && f < 1.0)) {
      return absl::InvalidArgumentError(absl::StrCat("fpr_grid value ", f, " outside (0, 1)"));
    }
  }
  if (compare.resamples < 1) {
    return absl::InvalidArgumentError("compare.resamples must be >= 1");
  }
  if (jobs < 1) return absl::InvalidArgumentError("jobs must be >= 1");
  return absl::OkStatus();
}

std::vector<int> ExperimentConfig::TargetRows() const {
  if (!targets.empty()) return targets;
  std::vector<int> rows(m + 1);
  for (int i = 0; i <= m; ++i) rows[i] = i;
  return rows;
}

GridConfig ExperimentConfig::GridFor(int repeat, HpoSource source) const {
  GridConfig g;
  g.data = data;
  g.data.seed = DeriveSeed(seeds.data, "repeat", static_cast<uint64_t>(repeat));
  g.arch = arch;
  g.m = m;
  g.shots = shots;
  g.dp = dp;
  g.hpo_source = source;
  g.space = space;
  g.hpo_seed = DeriveSeed(seeds.hpo, "repeat", static_cast<uint64_t>(repeat));
  g.train_seed = DeriveSeed(seeds.train, "repeat", static_cast<uint64_t>(repeat));
  return g;
}

uint64_t ExperimentConfig::AttackSeed(int repeat) const {
  return DeriveSeed(seeds.attack, "repeat", static_cast<uint64_t>(repeat));
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(absl::string_view text) {
  const Json root = Json::parse(text.begin(), text.end(), nullptr, false);
  if (root.is_discarded()) return absl::InvalidArgumentError("config is not valid JSON");
  MIAUDIT_RETURN_IF_ERROR(CheckKeys(root,
                                    {"name", "data", "arch", "grid", "dp", "hpo", "attack",
                                     "repeats", "fpr_grid", "seeds", "compare",
                                     "output_dir", "jobs"},
                                    "config"));
  ExperimentConfig c;
  MIAUDIT_RETURN_IF_ERROR(Read(root, "name", c.name, "config"));
  if (root.contains("data")) {
    const Json& d = root["data"];
    MIAUDIT_RETURN_IF_ERROR(
        CheckKeys(d, {"dim", "classes", "class_separation", "noise_sigma"}, "data"));
    MIAUDIT_RETURN_IF_ERROR(Read(d, "dim", c.data.dim, "data"));
    MIAUDIT_RETURN_IF_ERROR(Read(d, "classes", c.data.classes, "data"));
    MIAUDIT_RETURN_IF_ERROR(Read(d, "class_separation", c.data.class_separation, "data"));
    MIAUDIT_RETURN_IF_ERROR(Read(d, "noise_sigma", c.data.noise_sigma, "data"));
  }
  c.arch = Architecture::Linear(c.data.dim, c.data.classes);
  if (root.contains("arch")) {
    const Json& a = root["arch"];
    MIAUDIT_RETURN_IF_ERROR(CheckKeys(a, {"kind", "hidden_units"}, "arch"));
    std::string kind = "linear";
    MIAUDIT_RETURN_IF_ERROR(Read(a, "kind", kind, "arch"));
    MIAUDIT_ASSIGN_OR_RETURN(c.arch.kind, ParseArchKind(kind));
    MIAUDIT_RETURN_IF_ERROR(Read(a, "hidden_units", c.arch.hidden_units, "arch"));
    if (c.arch.kind == ArchKind::kLinear) c.arch.hidden_units = 0;
  }
  if (root.contains("grid")) {
    const Json& g = root["grid"];
    MIAUDIT_RETURN_IF_ERROR(CheckKeys(g, {"M", "S", "targets"}, "grid"));
    MIAUDIT_RETURN_IF_ERROR(Read(g, "M", c.m, "grid"));
    MIAUDIT_RETURN_IF_ERROR(Read(g, "S", c.shots, "grid"));
    MIAUDIT_RETURN_IF_ERROR(Read(g, "targets", c.targets, "grid"));
  }
  if (root.contains("dp") && !root["dp"].is_null()) {
    const Json& d = root["dp"];
    MIAUDIT_RETURN_IF_ERROR(CheckKeys(d, {"epsilon", "delta", "accountant"}, "dp"));
    DpSpec dp;
    MIAUDIT_RETURN_IF_ERROR(Read(d, "epsilon", dp.epsilon, "dp"));
    MIAUDIT_RETURN_IF_ERROR(Read(d, "delta", dp.delta, "dp"));
    std::string accountant = "rdp";
    MIAUDIT_RETURN_IF_ERROR(Read(d, "accountant", accountant, "dp"));
    if (accountant != "rdp") {
      return absl::InvalidArgumentError(
          absl::StrCat("dp.accountant '", accountant, "' is not supported (rdp only)"));
    }
    c.dp = dp;
  }
  if (root.contains("hpo")) {
    const Json& h = root["hpo"];
    MIAUDIT_RETURN_IF_ERROR(CheckKeys(h,
                                      {"source", "trials", "epochs", "lr_min", "lr_max",
                                       "batch_min", "clip_min", "clip_max"},
                                      "hpo"));
    std::string source = "td";
    MIAUDIT_RETURN_IF_ERROR(Read(h, "source", source, "hpo"));
    MIAUDIT_ASSIGN_OR_RETURN(c.hpo_source, ParseHpoSource(source));
    MIAUDIT_RETURN_IF_ERROR(Read(h, "trials", c.space.trials, "hpo"));
    MIAUDIT_RETURN_IF_ERROR(Read(h, "epochs", c.space.epochs, "hpo"));
    MIAUDIT_RETURN_IF_ERROR(Read(h, "lr_min", c.space.lr_min, "hpo"));
    MIAUDIT_RETURN_IF_ERROR(Read(h, "lr_max", c.space.lr_max, "hpo"));
    MIAUDIT_RETURN_IF_ERROR(Read(h, "batch_min", c.space.batch_min, "hpo"));
    MIAUDIT_RETURN_IF_ERROR(Read(h, "clip_min", c.space.clip_min, "hpo"));
    MIAUDIT_RETURN_IF_ERROR(Read(h, "clip_max", c.space.clip_max, "hpo"));
  }
  if (root.contains("attack")) {
    const Json& a = root["attack"];
    MIAUDIT_RETURN_IF_ERROR(
        CheckKeys(a, {"strategies", "C", "N", "variance_mode"}, "attack"));
    if (a.contains("strategies")) {
      std::vector<std::string> names;
      MIAUDIT_RETURN_IF_ERROR(Read(a, "strategies", names, "attack"));
      c.strategies.clear();
      for (const std::string& n : names) {
        MIAUDIT_ASSIGN_OR_RETURN(Strategy s, ParseStrategy(n));
        c.strategies.push_back(s);
      }
    }
    MIAUDIT_RETURN_IF_ERROR(Read(a, "C", c.attack.c, "attack"));
    MIAUDIT_RETURN_IF_ERROR(Read(a, "N", c.attack.n, "attack"));
    MIAUDIT_RETURN_IF_ERROR(Read(a, "variance_mode", c.attack.variance_mode, "attack"));
  }
  MIAUDIT_RETURN_IF_ERROR(Read(root, "repeats", c.repeats, "config"));
  MIAUDIT_RETURN_IF_ERROR(Read(root, "fpr_grid", c.fpr_grid, "config"));
  if (root.contains("seeds")) {
    const Json& s = root["seeds"];
    MIAUDIT_RETURN_IF_ERROR(CheckKeys(s, {"data", "hpo", "train", "attack"}, "seeds"));
    MIAUDIT_RETURN_IF_ERROR(Read(s, "data", c.seeds.data, "seeds"));
    MIAUDIT_RETURN_IF_ERROR(Read(s, "hpo", c.seeds.hpo, "seeds"));
    MIAUDIT_RETURN_IF_ERROR(Read(s, "train", c.seeds.train, "seeds"));
    MIAUDIT_RETURN_IF_ERROR(Read(s, "attack", c.seeds.attack, "seeds"));
  }
  if (root.contains("compare")) {
    const Json& s = root["compare"];
    MIAUDIT_RETURN_IF_ERROR(CheckKeys(s, {"null", "resamples"}, "compare"));
    MIAUDIT_RETURN_IF_ERROR(Read(s, "null", c.compare.null_hypothesis, "compare"));
    MIAUDIT_RETURN_IF_ERROR(Read(s, "resamples", c.compare.resamples, "compare"));
  }
  std::string out_dir = c.output_dir.string();
  MIAUDIT_RETURN_IF_ERROR(Read(root, "output_dir", out_dir, "config"));
  c.output_dir = out_dir;
  MIAUDIT_RETURN_IF_ERROR(Read(root, "jobs", c.jobs, "config"));
  c.arch.dim = c.data.dim;
  c.arch.classes = c.data.classes;
  MIAUDIT_RETURN_IF_ERROR(c.Validate());
  return c;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const fs::path& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) {
    return absl::InvalidArgumentError(absl::StrCat("cannot read config ", path.string()));
  }
  return ParseExperimentConfig(*text);
}

std::string ExperimentConfigJson(const ExperimentConfig& c) {
  OrderedJson j;
  j["name"] = c.name;
  j["data"] = {{"dim", c.data.dim},
               {"classes", c.data.classes},
               {"class_separation", c.data.class_separation},
               {"noise_sigma", c.data.noise_sigma}};
  j["arch"] = {{"kind", std::string(ArchKindName(c.arch.kind))},
               {"hidden_units", c.arch.hidden_units}};
  j["grid"] = {{"M", c.m}, {"S", c.shots}, {"targets", c.targets}};
  if (c.dp) {
    j["dp"] = {{"epsilon", c.dp->epsilon}, {"delta", c.dp->delta}, {"accountant", "rdp"}};
  } else {
    j["dp"] = nullptr;
  }
  j["hpo"] = {{"source", std::string(HpoSourceName(c.hpo_source))},
              {"trials", c.space.trials},
              {"epochs", c.space.epochs},
              {"lr_min", c.space.lr_min},
              {"lr_max", c.space.lr_max},
              {"batch_min", c.space.batch_min},
              {"clip_min", c.space.clip_min},
              {"clip_max", c.space.clip_max}};
  std::vector<std::string> names;
  for (Strategy s : c.strategies) names.emplace_back(StrategyName(s));
  j["attack"] = {{"strategies", names},
                 {"C", c.attack.c},
                 {"N", c.attack.n},
                 {"variance_mode", c.attack.variance_mode}};
  j["repeats"] = c.repeats;
  j["fpr_grid"] = c.fpr_grid;
  j["seeds"] = {{"data", c.seeds.data},
                {"hpo", c.seeds.hpo},
                {"train", c.seeds.train},
                {"attack", c.seeds.attack}};
  j["compare"] = {{"null", c.compare.null_hypothesis},
                  {"resamples", c.compare.resamples}};
  j["output_dir"] = c.output_dir.string();
  j["jobs"] = c.jobs;
  return j.dump(2);
}

void ApplyMasterSeed(ExperimentConfig& config, uint64_t seed) {
  config.seeds.data = DeriveSeed(seed, "data");
  config.seeds.hpo = DeriveSeed(seed, "hpo");
  config.seeds.train = DeriveSeed(seed, "train");
  config.seeds.attack = DeriveSeed(seed, "attack");
}

// --- grid ---

absl::StatusOr<GridSummary> CmdGrid(const ExperimentConfig& config, ObjectStore& store,
                                    std::ostream* log) {
  MIAUDIT_RETURN_IF_ERROR(config.Validate());
  std::vector<std::unique_ptr<MiaGrid>> grids;
  for (int r = 0; r < config.repeats; ++r) {
    MIAUDIT_ASSIGN_OR_RETURN(std::unique_ptr<MiaGrid> grid,
                             MiaGrid::Build(config.GridFor(r, config.hpo_source)));
    grids.push_back(std::move(grid));
  }
  const std::vector<int> targets = config.TargetRows();
  GridSummary summary;
  OrderedJson manifest;
  manifest["kind"] = "grid";
  manifest["config"] = OrderedJson::parse(ResultConfigJson(config));
  manifest["repeats"] = OrderedJson::array();
  for (int r = 0; r < config.repeats; ++r) {
    MiaGrid& grid = *grids[r];
    CellTrainer trainer(&store, config.dp, config.jobs);
    MIAUDIT_RETURN_IF_ERROR(PrepareTargets(grid, trainer, targets));
    const fs::path dir = config.output_dir / "grid" / absl::StrCat("r", r);
    OrderedJson rep;
    rep["repeat"] = r;
    rep["pool_size"] = grid.pool().size();
    rep["targets"] = OrderedJson::array();
    for (int t : targets) {
      MIAUDIT_ASSIGN_OR_RETURN(std::shared_ptr<const HpoResult> hpo,
                               grid.RowHpo(t, trainer));
      MIAUDIT_ASSIGN_OR_RETURN(ShadowView view, TargetView(grid, trainer, t));
      const int64_t n = static_cast<int64_t>(grid.row_set(t).size());
      MIAUDIT_ASSIGN_OR_RETURN(HyperParams resolved, trainer.Resolve(hpo->best, n));
      MIAUDIT_RETURN_IF_ERROR(
          WriteText(dir / absl::StrCat("hpo_row_", t, ".csv"), HpoTrialsCsv(*hpo)));
      rep["targets"].push_back({{"row", t},
                                {"n_train", n},
                                {"model", ToHex(view.model)},
                                {"hypers", HypersToJson(resolved)},
                                {"val_accuracy", hpo->best_accuracy()}});
      if (config.dp) {
        if (auto advisory = config.dp->DeltaAdvisory(n)) Log(log, *advisory);
      }
    }
    rep["models_trained"] = trainer.models_trained();
    rep["objects"] = ObjectsJson(trainer);
    summary.models_trained += trainer.models_trained();
    MIAUDIT_RETURN_IF_ERROR(
        store.PutManifest(absl::StrCat("grid-", config.name, "-r", r), rep.dump(2)));
    Log(log, absl::StrFormat("grid repeat %d: %d targets, %d models trained", r,
                             targets.size(), trainer.models_trained()));
    manifest["repeats"].push_back(std::move(rep));
  }
  manifest["models_trained"] = summary.models_trained;
  summary.manifest = GridManifestPath(config);
  MIAUDIT_RETURN_IF_ERROR(WriteText(summary.manifest, manifest.dump(2)));
  return summary;
}

// --- attack ---

absl::StatusOr<AttackSummary> CmdAttack(const ExperimentConfig& config,
                                        std::span<const Strategy> strategies,
                                        ObjectStore& store, std::ostream* log) {
  MIAUDIT_RETURN_IF_ERROR(config.Validate());
  MIAUDIT_RETURN_IF_ERROR(RequireGridManifest(config));
  const std::vector<int> targets = config.TargetRows();
  AttackSummary summary;
  for (Strategy s : strategies) {
    const fs::path dir = AttackDir(config, s);
    std::string budget = "repeat,target,models_trained\n";
    summary.models_trained[s] = 0;
    for (int r = 0; r < config.repeats; ++r) {
      MIAUDIT_ASSIGN_OR_RETURN(std::unique_ptr<MiaGrid> grid,
                               MiaGrid::Build(config.GridFor(r, config.hpo_source)));
      CellTrainer trainer(&store, config.dp, config.jobs);
      MIAUDIT_ASSIGN_OR_RETURN(
          std::vector<AttackResult> results,
          RunCampaign(*grid, trainer, s, targets, config.attack, config.AttackSeed(r)));
      MIAUDIT_RETURN_IF_ERROR(
          WriteText(dir / absl::StrCat("scores_r", r, ".csv"), AttackResultsCsv(results)));
      MIAUDIT_RETURN_IF_ERROR(WriteText(dir / absl::StrCat("targets_r", r, ".csv"),
                                        TargetsCsv(*grid, trainer, results)));
      if (s == Strategy::kKl) {
        MIAUDIT_RETURN_IF_ERROR(
            WriteText(dir / absl::StrCat("kl_r", r, ".csv"), KlCsv(results)));
      }
      OrderedJson manifest;
      manifest["kind"] = "campaign";
      manifest["strategy"] = std::string(StrategyName(s));
      manifest["repeat"] = r;
      manifest["params"] = {{"C", config.attack.c},
                            {"N", config.attack.n},
                            {"T", config.space.trials},
                            {"M", config.m},
                            {"variance_mode", config.attack.variance_mode}};
      manifest["seeds"] = {{"data", config.seeds.data},
                           {"hpo", config.seeds.hpo},
                           {"train", config.seeds.train},
                           {"attack", config.seeds.attack}};
      manifest["budgets"] = OrderedJson::array();
      for (const AttackResult& res : results) {
        manifest["budgets"].push_back(
            {{"target", res.target}, {"models_trained", res.models_trained}});
        absl::StrAppend(&budget, r, ",", res.target, ",", res.models_trained, "\n");
        summary.models_trained[s] += res.models_trained;
      }
      manifest["objects"] = ObjectsJson(trainer);
      const std::string text = manifest.dump(2);
      MIAUDIT_RETURN_IF_ERROR(store.PutManifest(
          absl::StrCat("campaign-", config.name, "-", StrategyName(s), "-r", r), text));
      MIAUDIT_RETURN_IF_ERROR(WriteText(dir / absl::StrCat("manifest_r", r, ".json"), text));
      Log(log, absl::StrFormat("attack %s repeat %d: %d models trained",
                               StrategyName(s), r, trainer.models_trained()));
      summary.results[s].push_back(std::move(results));
    }
    MIAUDIT_RETURN_IF_ERROR(WriteText(dir / "budget.csv", budget));
  }
  return summary;
}

// --- eval ---

absl::StatusOr<RocCurve> PooledRoc(std::span<const AttackResult> results) {
  std::vector<double> scores;
  std::vector<char> labels;
  for (const AttackResult& r : results) {
    scores.insert(scores.end(), r.scores.begin(), r.scores.end());
    for (uint8_t m : r.is_member) labels.push_back(m != 0);
  }
  std::unique_ptr<bool[]> b(new bool[labels.size()]);
  for (size_t k = 0; k < labels.size(); ++k) b[k] = labels[k] != 0;
  return ComputeRoc(scores, std::span<const bool>(b.get(), labels.size()));
}

absl::StatusOr<std::vector<PrivacyPoint>> WorstCaseProfile(
    std::span<const TrainedTarget> targets) {
  std::vector<PrivacyPoint> worst;
  for (const TrainedTarget& t : targets) {
    if (!t.hypers.is_private()) {
      return absl::FailedPreconditionError(
          absl::StrCat("target ", t.row, " was not trained with DP"));
    }
    MIAUDIT_ASSIGN_OR_RETURN(
        std::vector<PrivacyPoint> profile,
        PrivacyProfile(*t.hypers.noise_multiplier, TrainingSteps(t.n_train, t.hypers),
                       SamplingRate(t.n_train, t.hypers)));
    if (worst.empty()) {
      worst = profile;
    } else {
      for (size_t i = 0; i < worst.size(); ++i) {
        worst[i].epsilon = std::max(worst[i].epsilon, profile[i].epsilon);
      }
    }
  }
  return worst;
}

absl::StatusOr<EvalSummary> CmdEval(const ExperimentConfig& config, std::ostream* log) {
  MIAUDIT_RETURN_IF_ERROR(config.Validate());
  EvalSummary summary;
  std::vector<PlotSeries> series;
  const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::vector<TrainedTarget> trained;
  bool any = false;
  for (size_t si = 0; si < config.strategies.size(); ++si) {
    const Strategy s = config.strategies[si];
    const fs::path dir = AttackDir(config, s);
    if (!fs::exists(dir / "scores_r0.csv")) {
      Log(log, absl::StrCat("eval: no results for ", StrategyName(s), ", skipping"));
      continue;
    }
    any = true;
    std::vector<AttackResult> all;
    std::vector<std::vector<AttackResult>> per_repeat;
    for (int r = 0; r < config.repeats; ++r) {
      MIAUDIT_ASSIGN_OR_RETURN(std::vector<AttackResult> results,
                               ReadScores(dir / absl::StrCat("scores_r", r, ".csv"), s));
      all.insert(all.end(), results.begin(), results.end());
      per_repeat.push_back(std::move(results));
      if (config.dp && si == 0) {
        MIAUDIT_ASSIGN_OR_RETURN(std::vector<TrainedTarget> t,
                                 ReadTargets(dir / absl::StrCat("targets_r", r, ".csv")));
        trained.insert(trained.end(), t.begin(), t.end());
      }
    }
    if (config.dp && summary.profile.empty() && !trained.empty()) {
      MIAUDIT_ASSIGN_OR_RETURN(summary.profile, WorstCaseProfile(trained));
    } else if (config.dp && trained.empty()) {
      MIAUDIT_ASSIGN_OR_RETURN(std::vector<TrainedTarget> t,
                               ReadTargets(dir / "targets_r0.csv"));
      for (int r = 1; r < config.repeats; ++r) {
        MIAUDIT_ASSIGN_OR_RETURN(std::vector<TrainedTarget> more,
                                 ReadTargets(dir / absl::StrCat("targets_r", r, ".csv")));
        t.insert(t.end(), more.begin(), more.end());
      }
      trained = t;
      MIAUDIT_ASSIGN_OR_RETURN(summary.profile, WorstCaseProfile(trained));
    }
    MIAUDIT_ASSIGN_OR_RETURN(RocCurve roc, PooledRoc(all));
    std::string roc_csv = "fpr,tpr,threshold\n";
    for (size_t i = 0; i < roc.size(); ++i) {
      absl::StrAppendFormat(&roc_csv, "%.17g,%.17g,%.17g\n", roc.fpr[i], roc.tpr[i],
                            roc.thresholds[i]);
    }
    MIAUDIT_RETURN_IF_ERROR(WriteText(
        config.output_dir / absl::StrCat("roc_", StrategyName(s), ".csv"), roc_csv));

    std::vector<RocCurve> repeat_rocs;
    for (const auto& results : per_repeat) {
      MIAUDIT_ASSIGN_OR_RETURN(RocCurve rr, PooledRoc(results));
      repeat_rocs.push_back(std::move(rr));
    }
    PlotSeries plot;
    plot.label = MiaDisplayName(s);
    plot.color = kColors[si % 5];
    plot.x = roc.fpr;
    plot.y = roc.tpr;
    for (double fpr : config.fpr_grid) {
      EvalRow row;
      row.strategy = s;
      row.fpr = fpr;
      const OperatingPoint op = OperatingPointAtFpr(roc, fpr);
      row.tpr = op.tpr;
      row.tp = op.true_positives;
      row.fp = op.false_positives;
      row.n_pos = roc.n_pos;
      row.n_neg = roc.n_neg;
      MIAUDIT_ASSIGN_OR_RETURN(row.ci, ClopperPearson(row.tp, row.n_pos, 0.05));
      for (const RocCurve& rr : repeat_rocs) row.repeat_tpr.push_back(TprAtFpr(rr, fpr));
      row.tpr_median = Median(row.repeat_tpr);
      double sum = 0.0;
      for (double v : row.repeat_tpr) sum += v;
      row.tpr_mean = sum / static_cast<double>(row.repeat_tpr.size());
      if (config.dp) row.dp_bound = DpTprBound(summary.profile, fpr);
      plot.error_bars.push_back({fpr, row.ci.lo, row.ci.hi});
      summary.rows.push_back(std::move(row));
    }
    series.push_back(std::move(plot));
  }
  if (!any) {
    return absl::NotFoundError("no attack results found; run the attack command first");
  }
  if (config.dp) {
    PlotSeries bound;
    bound.label = "DP(UB)";
    bound.color = "#000000";
    bound.dashed = true;
    for (int i = 0; i <= 60; ++i) {
      const double fpr = std::pow(10.0, -3.0 + 3.0 * i / 60.0);
      bound.x.push_back(fpr);
      bound.y.push_back(DpTprBound(summary.profile, fpr));
    }
    series.push_back(std::move(bound));
  }

  std::string csv =
      "strategy,fpr,tpr,tp,n_pos,fp,n_neg,cp_lo,cp_hi,tpr_median,tpr_mean,dp_bound\n";
  bool violated = false;
  std::string violation;
  for (const EvalRow& row : summary.rows) {
    absl::StrAppendFormat(&csv, "%s,%g,%.10g,%d,%d,%d,%d,%.10g,%.10g,%.10g,%.10g,%s\n",
                          StrategyName(row.strategy), row.fpr, row.tpr, row.tp, row.n_pos,
                          row.fp, row.n_neg, row.ci.lo, row.ci.hi, row.tpr_median,
                          row.tpr_mean,
                          row.dp_bound ? absl::StrFormat("%.10g", *row.dp_bound) : "");
    if (row.dp_bound && row.ci.lo > *row.dp_bound) {
      violated = true;
      violation = absl::StrFormat("%s at fpr=%g: CP lower bound %.6g > DP bound %.6g",
                                  StrategyName(row.strategy), row.fpr, row.ci.lo,
                                  *row.dp_bound);
    }
  }
  MIAUDIT_RETURN_IF_ERROR(WriteText(config.output_dir / "summary.csv", csv));
  const std::string title =
      config.dp ? absl::StrFormat("%s, eps=%g", config.name, config.dp->epsilon)
                : config.name;
  MIAUDIT_RETURN_IF_ERROR(
      WriteText(config.output_dir / "roc.svg", RenderLogLogRoc(title, series)));

  const fs::path pairs_path = config.output_dir / "compare" / "pairs.csv";
  if (fs::exists(pairs_path)) {
    MIAUDIT_ASSIGN_OR_RETURN(auto rows, ReadCsv(pairs_path, kPairsHeader));
    std::vector<HpoPair> pairs;
    const size_t nf = config.fpr_grid.size();
    for (const auto& row : rows) {
      if (row.size() != 6) return absl::DataLossError("bad row in compare/pairs.csv");
      MIAUDIT_ASSIGN_OR_RETURN(Strategy s, ParseStrategy(row[0]));
      MIAUDIT_ASSIGN_OR_RETURN(const int64_t rep, ParseInt(row[1]));
      MIAUDIT_ASSIGN_OR_RETURN(const int64_t target, ParseInt(row[2]));
      if (pairs.empty() || pairs.back().strategy != s || pairs.back().repeat != rep ||
          pairs.back().target != target || pairs.back().tpr_td.size() == nf) {
        pairs.push_back({s, static_cast<int>(rep), static_cast<int>(target), {}, {}});
      }
      MIAUDIT_ASSIGN_OR_RETURN(const double td, ParseDouble(row[4]));
      MIAUDIT_ASSIGN_OR_RETURN(const double ed, ParseDouble(row[5]));
      pairs.back().tpr_td.push_back(td);
      pairs.back().tpr_ed.push_back(ed);
    }
    MIAUDIT_ASSIGN_OR_RETURN(std::vector<CompareRow> table, CompareTables(config, pairs));
    MIAUDIT_RETURN_IF_ERROR(WriteText(config.output_dir / "compare" / "ttest.csv",
                                      CompareTableCsv(config, table, TestKind::kPairedT)));
    MIAUDIT_RETURN_IF_ERROR(
        WriteText(config.output_dir / "compare" / "permutation.csv",
                  CompareTableCsv(config, table, TestKind::kPermutation)));
  }
  if (violated) {
    return absl::InternalError(absl::StrCat(
        "empirical TPR exceeds the DP upper bound (accounting or training bug): ",
        violation));
  }
  return summary;
}

// --- TD versus ED ---

absl::StatusOr<std::vector<HpoPair>> HpoPairsForRepeat(const ExperimentConfig& config,
                                                       int repeat, Strategy strategy,
                                                       ObjectStore& store) {
  const HpoSource td_source =
      config.compare.null_hypothesis ? HpoSource::kEd : HpoSource::kTd;
  MIAUDIT_ASSIGN_OR_RETURN(std::unique_ptr<MiaGrid> td_grid,
                           MiaGrid::Build(config.GridFor(repeat, td_source)));
  MIAUDIT_ASSIGN_OR_RETURN(std::unique_ptr<MiaGrid> ed_grid,
                           MiaGrid::Build(config.GridFor(repeat, HpoSource::kEd)));
  CellTrainer trainer(&store, config.dp, config.jobs);
  const std::vector<int> targets = config.TargetRows();
  CampaignParams td_params = config.attack;
  td_params.target_salt = "td";
  CampaignParams ed_params = config.attack;
  ed_params.target_salt = "ed";
  MIAUDIT_ASSIGN_OR_RETURN(std::vector<AttackResult> td,
                           RunCampaign(*td_grid, trainer, strategy, targets, td_params,
                                       config.AttackSeed(repeat)));
  MIAUDIT_ASSIGN_OR_RETURN(std::vector<AttackResult> ed,
                           RunCampaign(*ed_grid, trainer, strategy, targets, ed_params,
                                       config.AttackSeed(repeat)));
  std::vector<HpoPair> pairs;
  for (size_t k = 0; k < targets.size(); ++k) {
    HpoPair p;
    p.strategy = strategy;
    p.repeat = repeat;
    p.target = targets[k];
    for (double fpr : config.fpr_grid) {
      p.tpr_td.push_back(TargetTpr(td[k], fpr));
      p.tpr_ed.push_back(TargetTpr(ed[k], fpr));
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

absl::StatusOr<std::vector<CompareRow>> CompareTables(const ExperimentConfig& config,
                                                      std::span<const HpoPair> pairs) {
  const size_t nf = config.fpr_grid.size();
  std::vector<CompareRow> rows;
  for (Strategy s : config.strategies) {
    std::vector<const HpoPair*> group;
    for (const HpoPair& p : pairs) {
      if (p.strategy == s) group.push_back(&p);
    }
    if (group.empty()) continue;
    CompareRow row;
    row.strategy = s;
    row.n = static_cast<int64_t>(group.size());
    for (size_t f = 0; f < nf; ++f) {
      std::vector<double> x;
      std::vector<double> y;
      for (const HpoPair* p : group) {
        if (p->tpr_td.size() != nf || p->tpr_ed.size() != nf) {
          return absl::DataLossError("TD/ED pair does not cover the FPR grid");
        }
        x.push_back(p->tpr_td[f]);
        y.push_back(p->tpr_ed[f]);
      }
      MIAUDIT_ASSIGN_OR_RETURN(TestReport t, PairedTTest(x, y));
      MIAUDIT_ASSIGN_OR_RETURN(
          TestReport perm,
          PairedPermutationTest(
              x, y, config.compare.resamples,
              DeriveSeed(config.seeds.attack,
                         absl::StrCat("permutation/", StrategyName(s)), f)));
      double mean = 0.0;
      for (size_t i = 0; i < x.size(); ++i) mean += x[i] - y[i];
      mean /= static_cast<double>(x.size());
      row.t_test.push_back({mean, t.p_value, 1.0});
      row.permutation.push_back({mean, perm.p_value, 1.0});
    }
    rows.push_back(std::move(row));
  }
  for (TestKind kind : {TestKind::kPairedT, TestKind::kPermutation}) {
    std::vector<double> p;
    for (const CompareRow& row : rows) {
      for (const CompareCell& c : kind == TestKind::kPairedT ? row.t_test : row.permutation) {
        p.push_back(c.p);
      }
    }
    if (p.empty()) continue;
    MIAUDIT_ASSIGN_OR_RETURN(std::vector<double> adj, BenjaminiYekutieli(p));
    size_t i = 0;
    for (CompareRow& row : rows) {
      for (CompareCell& c : kind == TestKind::kPairedT ? row.t_test : row.permutation) {
        c.p_adjusted = adj[i++];
      }
    }
  }
  return rows;
}

std::string CompareTableCsv(const ExperimentConfig& config,
                            std::span<const CompareRow> rows, TestKind kind) {
  std::string out = "dataset,model,config,S,epsilon,mia";
  for (double f : config.fpr_grid) {
    const std::string l = FprLabel(f);
    absl::StrAppend(&out, ",dtpr_e4_", l, ",p_", l, ",p_adj_", l);
  }
  out += "\n";
  const std::string eps = config.dp ? absl::StrFormat("%g", config.dp->epsilon) : "inf";
  for (const CompareRow& row : rows) {
    absl::StrAppend(&out, config.name, ",", ModelLabel(config.arch), ",",
                    config.compare.null_hypothesis ? "null" : "td_vs_ed", ",", config.shots,
                    ",", eps, ",", MiaDisplayName(row.strategy));
    for (const CompareCell& c : kind == TestKind::kPairedT ? row.t_test : row.permutation) {
      absl::StrAppendFormat(&out, ",%.2f,%.4g,%.4g", c.mean_diff * 1e4, c.p, c.p_adjusted);
    }
    out += "\n";
  }
  return out;
}

absl::StatusOr<std::vector<CompareRow>> CmdCompareHpo(const ExperimentConfig& config,
                                                      ObjectStore& store,
                                                      std::ostream* log) {
  MIAUDIT_RETURN_IF_ERROR(config.Validate());
  if (config.m + 1 > kMaxExternalSets) {
    return absl::InvalidArgumentError("compare-hpo needs M + 1 <= 256 external sets");
  }
  std::vector<HpoPair> pairs;
  for (Strategy s : config.strategies) {
    for (int r = 0; r < config.repeats; ++r) {
      MIAUDIT_ASSIGN_OR_RETURN(std::vector<HpoPair> p,
                               HpoPairsForRepeat(config, r, s, store));
      pairs.insert(pairs.end(), p.begin(), p.end());
      Log(log, absl::StrFormat("compare-hpo %s repeat %d done", StrategyName(s), r));
    }
  }
  std::string csv = absl::StrCat(kPairsHeader, "\n");
  for (const HpoPair& p : pairs) {
    for (size_t f = 0; f < config.fpr_grid.size(); ++f) {
      absl::StrAppendFormat(&csv, "%s,%d,%d,%g,%.17g,%.17g\n", StrategyName(p.strategy),
                            p.repeat, p.target, config.fpr_grid[f], p.tpr_td[f],
                            p.tpr_ed[f]);
    }
  }
  const fs::path dir = config.output_dir / "compare";
  MIAUDIT_RETURN_IF_ERROR(WriteText(dir / "pairs.csv", csv));
  MIAUDIT_ASSIGN_OR_RETURN(std::vector<CompareRow> rows, CompareTables(config, pairs));
  MIAUDIT_RETURN_IF_ERROR(
      WriteText(dir / "ttest.csv", CompareTableCsv(config, rows, TestKind::kPairedT)));
  MIAUDIT_RETURN_IF_ERROR(WriteText(dir / "permutation.csv",
                                    CompareTableCsv(config, rows, TestKind::kPermutation)));
  OrderedJson meta;
  meta["null_hypothesis"] = config.compare.null_hypothesis;
  meta["pairs_per_row"] = "one per target model and repeat";
  meta["alternative"] = "tpr_td > tpr_ed (one-sided)";
  meta["by_adjustment_family"] = "per test kind, across all rows and FPRs";
  meta["permutation_resamples"] = config.compare.resamples;
  MIAUDIT_RETURN_IF_ERROR(WriteText(dir / "metadata.json", meta.dump(2)));
  return rows;
}

absl::StatusOr<std::vector<UnreferencedObject>> CmdGc(ObjectStore& store) {
  return FindUnreferenced(store);
}

}  // namespace miaudit
