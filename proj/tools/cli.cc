// Copyright 2026 The PMIL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmil/data.h"
#include "pmil/eval.h"
#include "pmil/experiment.h"
#include "pmil/synthetic.h"

namespace pmil::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::uint32_t kTrainingRecordVersion = 1;

struct HyperparameterFlags {
  std::string config;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> eta;
  std::optional<double> zeta;
  std::optional<double> omega;
  std::optional<std::uint32_t> pi;
  std::optional<double> filter_max_volume;
  std::optional<std::string> split_mode;
  std::optional<std::uint32_t> top_k;
  std::optional<std::uint64_t> seed;
};

struct RunConfig {
  std::string dataset;
  std::string models;
  std::string out;
  std::string mode = "pmil_f_s";
  std::optional<std::string> filter;
  std::optional<std::string> split_sets;
  std::string split;  // empty until parsed
  std::size_t workers = 1;
  HyperparameterFlags hp;

  // eval
  double iou_threshold = 0.2;
  std::string criterion = "iou";
  std::string ap = "non_interpolated";
  std::string predictions;

  // gridsearch
  std::string grid;

  // synth
  SyntheticSpec synth;
  bool raw_features = false;
};

void AddHyperparameterFlags(CLI::App* cmd, HyperparameterFlags& f) {
  cmd->add_option("--config", f.config,
                  "Hyperparameter JSON file (defaults to built-in values)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--lambda", f.lambda, "L2 regularization weight");
  cmd->add_option("--beta", f.beta, "Bag cross-entropy weight");
  cmd->add_option("--gamma", f.gamma, "Instance hinge weight");
  cmd->add_option("--eta", f.eta, "Hinge margin");
  cmd->add_option("--zeta", f.zeta, "Instance positive threshold");
  cmd->add_option("--omega", f.omega, "Set-splitting threshold");
  cmd->add_option("--pi", f.pi, "Epochs (split levels)");
  cmd->add_option("--filter-max-volume", f.filter_max_volume,
                  "Largest proposal volume fraction kept by the filter");
  cmd->add_option("--split-mode", f.split_mode, "Set-splitting rule")
      ->check(CLI::IsMember({"threshold", "top_k"}));
  cmd->add_option("--top-k", f.top_k, "Proposals kept per bag in top_k mode");
  cmd->add_option("--seed", f.seed, "Training shuffle seed");
}

void AddModeFlags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--mode", c.mode, "Experiment configuration")
      ->check(CLI::IsMember({"pmil", "pmil_f", "pmil_f_s"}))
      ->capture_default_str();
  cmd->add_option("--filter", c.filter,
                  "Override the mode's large-proposal filter")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--split-sets", c.split_sets,
                  "Override the mode's set splitting")
      ->check(CLI::IsMember({"on", "off"}));
}

void AddWorkers(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--workers", c.workers, "Concurrent trainings")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

// Subcommands share one RunConfig, so defaults are applied after parsing.
void AddSplit(CLI::App* cmd, RunConfig& c, const std::string& def) {
  cmd->add_option("--split", c.split,
                  "Dataset split to use (default " + def + ")")
      ->check(CLI::IsMember({"train", "test", "all"}));
}

Hyperparameters ResolveHyperparameters(const HyperparameterFlags& f) {
  Hyperparameters hp =
      f.config.empty() ? Hyperparameters{} : LoadHyperparameters(f.config);
  if (f.lambda) hp.lambda = *f.lambda;
  if (f.beta) hp.beta = *f.beta;
  if (f.gamma) hp.gamma = *f.gamma;
  if (f.eta) hp.eta = *f.eta;
  if (f.zeta) hp.zeta = *f.zeta;
  if (f.omega) hp.omega = *f.omega;
  if (f.pi) hp.pi = *f.pi;
  if (f.filter_max_volume) hp.filter_max_volume_fraction = *f.filter_max_volume;
  if (f.split_mode) {
    hp.split_mode =
        *f.split_mode == "threshold" ? SplitMode::kThreshold : SplitMode::kTopK;
  }
  if (f.top_k) hp.top_k = *f.top_k;
  if (f.seed) hp.seed = *f.seed;
  ValidateHyperparameters(hp);
  return hp;
}

TrainOptions ResolveOptions(const RunConfig& c) {
  TrainOptions options = OptionsForMode(ParseExperimentMode(c.mode));
  if (c.filter) options.filter_large_proposals = *c.filter == "on";
  if (c.split_sets) options.split_sets = *c.split_sets == "on";
  return options;
}

std::vector<Bag> SelectBags(const Dataset& dataset, const std::string& split) {
  if (split == "train") return dataset.BagsIn(Split::kTrain);
  if (split == "test") return dataset.BagsIn(Split::kTest);
  return dataset.bags;
}

Dataset LoadDatasetFlag(const RunConfig& c) {
  if (c.dataset.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "--dataset is required");
  }
  Dataset dataset = LoadDataset(c.dataset);
  spdlog::info("loaded {} bags, {} classes, dimension {} from {}",
               dataset.bags.size(), dataset.classes.size(),
               dataset.feature_dimension, c.dataset);
  return dataset;
}

void RequireBags(const std::vector<Bag>& bags, const std::string& split) {
  if (bags.empty()) {
    throw Error(ErrorKind::kInvalidData,
                "dataset has no bags in split '" + split + "'");
  }
}

fs::path RequireDir(const std::string& flag, const std::string& value) {
  if (value.empty()) {
    throw Error(ErrorKind::kInvalidArgument, flag + " is required");
  }
  std::error_code ec;
  fs::create_directories(value, ec);
  if (ec) {
    throw Error(ErrorKind::kIo,
                "cannot create directory '" + value + "': " + ec.message());
  }
  return value;
}

// Index prefix keeps file names unique even when sanitized names collide.
std::string ModelFileName(std::size_t index, const std::string& class_name) {
  std::string safe = class_name;
  for (char& ch : safe) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '-' || ch == '_';
    if (!ok) ch = '_';
  }
  return fmt::format("{:02}-{}.model", index, safe);
}

ordered_json EpochJson(const EpochReport& r) {
  ordered_json j;
  j["class"] = r.class_name;
  j["epoch"] = r.epoch;
  j["steps"] = r.steps;
  j["bags_in_view"] = r.bags_in_view;
  j["positive_bags_in_view"] = r.positive_bags_in_view;
  j["loss"] = {{"regularizer", r.loss.regularizer},
               {"bag_loss", r.loss.bag_loss},
               {"instance_loss", r.loss.instance_loss},
               {"total", r.loss.total}};
  j["split_applied"] = r.split_applied;
  j["bags_after_split"] = r.bags_after_split;
  return j;
}

struct TrainedModels {
  std::vector<std::string> classes;
  std::vector<ClassModel> models;
  bool filter_large_proposals = false;
  std::string mode;
  Hyperparameters hp;
};

TrainedModels LoadTrainedModels(const std::string& dir) {
  if (dir.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "--models is required");
  }
  const fs::path record_path = fs::path(dir) / "training.json";
  TrainedModels out;
  std::vector<std::string> files;
  try {
    const auto doc = ordered_json::parse(ReadFile(record_path));
    if (doc.at("version").get<std::uint32_t>() > kTrainingRecordVersion) {
      throw Error(ErrorKind::kVersionMismatch,
                  record_path.string() + ": unsupported version");
    }
    out.classes = doc.at("classes").get<std::vector<std::string>>();
    files = doc.at("model_files").get<std::vector<std::string>>();
    out.filter_large_proposals = doc.at("filter_large_proposals").get<bool>();
    out.mode = doc.at("mode").get<std::string>();
    out.hp = HyperparametersFromJson(doc.at("hyperparameters").dump());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptFile,
                record_path.string() + ": " + e.what());
  }
  if (files.size() != out.classes.size()) {
    throw Error(ErrorKind::kCorruptFile,
                record_path.string() + ": classes and model_files differ");
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    ClassModel model = LoadModel(fs::path(dir) / files[i]);
    if (model.class_name != out.classes[i]) {
      throw Error(ErrorKind::kCorruptFile,
                  files[i] + ": holds class '" + model.class_name +
                      "', expected '" + out.classes[i] + "'");
    }
    out.models.push_back(std::move(model));
  }
  return out;
}

void CheckClasses(const TrainedModels& trained, const Dataset& dataset) {
  if (trained.classes != dataset.classes) {
    throw Error(ErrorKind::kInvalidData,
                fmt::format("models cover classes [{}] but dataset has [{}]",
                            fmt::join(trained.classes, ", "),
                            fmt::join(dataset.classes, ", ")));
  }
}

int CmdTrain(const RunConfig& c) {
  const Hyperparameters hp = ResolveHyperparameters(c.hp);
  const TrainOptions options = ResolveOptions(c);
  const Dataset dataset = LoadDatasetFlag(c);
  if (dataset.classes.size() < 2) {
    throw Error(ErrorKind::kInvalidData,
                "one-vs-all training needs at least 2 classes");
  }
  const std::vector<Bag> bags = SelectBags(dataset, c.split);
  RequireBags(bags, c.split);
  const fs::path dir = RequireDir("--models", c.models);

  spdlog::info("training {} models on {} bags (filter {}, split sets {})",
               dataset.classes.size(), bags.size(),
               options.filter_large_proposals ? "on" : "off",
               options.split_sets ? "on" : "off");
  std::vector<EpochReport> log;
  const auto models = TrainOneVsAll(
      bags, dataset.classes, hp, options, c.workers,
      [&](const EpochReport& r) {
        spdlog::debug("{} epoch {}: objective {:.6g}, {} bags{}", r.class_name,
                      r.epoch, r.loss.total, r.bags_in_view,
                      r.split_applied ? ", split" : "");
        log.push_back(r);
      });

  std::vector<std::string> files;
  for (std::size_t i = 0; i < models.size(); ++i) {
    files.push_back(ModelFileName(i, models[i].class_name));
    SaveModel(models[i], dir / files.back());
    spdlog::info("class {}: {} iterations -> {}", models[i].class_name,
                 models[i].trained_iterations, files.back());
  }

  const auto class_index = [&](const std::string& name) {
    return std::find(dataset.classes.begin(), dataset.classes.end(), name) -
           dataset.classes.begin();
  };
  std::stable_sort(log.begin(), log.end(),
                   [&](const EpochReport& a, const EpochReport& b) {
                     const auto ia = class_index(a.class_name);
                     const auto ib = class_index(b.class_name);
                     return ia != ib ? ia < ib : a.epoch < b.epoch;
                   });
  std::string lines;
  for (const EpochReport& r : log) lines += EpochJson(r).dump() + "\n";
  WriteFile(dir / "training_log.jsonl", lines);

  ordered_json record;
  record["version"] = kTrainingRecordVersion;
  record["mode"] = c.mode;
  record["filter_large_proposals"] = options.filter_large_proposals;
  record["split_sets"] = options.split_sets;
  record["split"] = c.split;
  record["hyperparameters"] =
      ordered_json::parse(HyperparametersToJson(hp));
  record["classes"] = dataset.classes;
  record["model_files"] = files;
  WriteFile(dir / "training.json", record.dump(2) + "\n");
  return kExitOk;
}

int CmdPredict(const RunConfig& c) {
  const Dataset dataset = LoadDatasetFlag(c);
  const TrainedModels trained = LoadTrainedModels(c.models);
  CheckClasses(trained, dataset);
  const fs::path dir = RequireDir("--out", c.out);
  const auto bags = PrepareBags(SelectBags(dataset, c.split),
                                trained.filter_large_proposals, trained.hp);
  RequireBags(bags, c.split);
  const auto predictions = PredictAll(trained.models, bags);
  SavePredictions(predictions, dir / "predictions.json");
  fmt::print("classification accuracy on {} bags: {:.4f}\n", bags.size(),
             ClassificationAccuracy(trained.models, bags));
  return kExitOk;
}

int CmdEval(const RunConfig& c) {
  const Dataset dataset = LoadDatasetFlag(c);
  const TrainedModels trained = LoadTrainedModels(c.models);
  CheckClasses(trained, dataset);
  const fs::path dir = RequireDir("--out", c.out);
  const auto bags = PrepareBags(SelectBags(dataset, c.split),
                                trained.filter_large_proposals, trained.hp);
  RequireBags(bags, c.split);

  std::vector<BagPrediction> predictions;
  if (c.predictions.empty()) {
    predictions = PredictAll(trained.models, bags);
    SavePredictions(predictions, dir / "predictions.json");
  } else {
    predictions = LoadPredictions(c.predictions);
  }

  EvalOptions options;
  options.iou_threshold = c.iou_threshold;
  options.criterion = c.criterion == "coverage" ? OverlapCriterion::kCoverage
                                                : OverlapCriterion::kIou;
  options.ap_mode = c.ap == "eleven_point" ? ApMode::kElevenPoint
                                           : ApMode::kNonInterpolated;
  const EvalReport report =
      Evaluate(predictions, bags, dataset.classes, options);
  const std::string title =
      fmt::format("{} on {} split, {} >= {}", trained.mode, c.split, c.criterion,
                  c.iou_threshold);
  WriteReportFiles(report, title, dir);
  fmt::print("{}", FormatReportSummary(report, title));
  return kExitOk;
}

int CmdCv(const RunConfig& c) {
  const Hyperparameters hp = ResolveHyperparameters(c.hp);
  const Dataset dataset = LoadDatasetFlag(c);
  const auto bags = SelectBags(dataset, c.split);
  RequireBags(bags, c.split);
  const auto result =
      CrossValidate(bags, dataset.classes, hp, ResolveOptions(c), c.workers);
  for (std::size_t f = 0; f < result.fold_accuracy.size(); ++f) {
    fmt::print("fold {}: {:.4f}\n", f, result.fold_accuracy[f]);
  }
  fmt::print("mean accuracy over {} folds: {:.4f}\n",
             result.fold_accuracy.size(), result.mean_accuracy);
  if (!c.out.empty()) {
    const fs::path dir = RequireDir("--out", c.out);
    ordered_json doc;
    doc["mode"] = c.mode;
    doc["hyperparameters"] = ordered_json::parse(HyperparametersToJson(hp));
    doc["fold_accuracy"] = result.fold_accuracy;
    doc["mean_accuracy"] = result.mean_accuracy;
    WriteFile(dir / "cv.json", doc.dump(2) + "\n");
  }
  return kExitOk;
}

int CmdGridSearch(const RunConfig& c) {
  const Hyperparameters base = ResolveHyperparameters(c.hp);
  const GridSpec grid = ParseGridSpec(ReadFile(c.grid));
  const Dataset dataset = LoadDatasetFlag(c);
  const fs::path dir = RequireDir("--out", c.out);
  const auto bags = SelectBags(dataset, c.split);
  RequireBags(bags, c.split);
  spdlog::info("grid search over {} cells", ExpandGrid(grid, base).size());
  const auto result = GridSearch(bags, dataset.classes, grid, base,
                                 ResolveOptions(c), c.workers);

  std::string table = "cell";
  for (const auto& [name, values] : grid) table += "," + name;
  table += ",accuracy,best\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto hp =
        ordered_json::parse(HyperparametersToJson(result.cells[i].hp));
    table += std::to_string(i);
    for (const auto& [name, values] : grid) table += "," + hp.at(name).dump();
    table += fmt::format(",{},{}\n", result.cells[i].accuracy,
                         i == result.best ? 1 : 0);
  }
  WriteFile(dir / "grid_table.csv", table);
  const GridCell& best = result.cells[result.best];
  WriteFile(dir / "best_hyperparameters.json",
            HyperparametersToJson(best.hp) + "\n");
  fmt::print("{}", table);
  fmt::print("best cell {}: accuracy {:.4f}\n", result.best, best.accuracy);
  return kExitOk;
}

int CmdSynth(const RunConfig& c) {
  const fs::path dir = RequireDir("--out", c.out);
  SyntheticSpec spec = c.synth;
  spec.normalize_features = !c.raw_features;
  const SyntheticDataset data = GenerateSynthetic(spec);
  const fs::path manifest = SaveDataset(data.dataset, dir);
  SavePlantedSidecar(data, dir / "planted.json");
  spdlog::info("wrote {} bags to {}", data.dataset.bags.size(),
               manifest.string());
  fmt::print("{}\n", manifest.string());
  return kExitOk;
}

void ConfigureLogging(bool verbose) {
  auto logger = std::make_shared<spdlog::logger>(
      "pmil", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("PMIL_LOG"); env != nullptr && *env) {
    const std::string name = env;
    level = spdlog::level::from_str(name);
    if (level == spdlog::level::off && name != "off") {
      level = spdlog::level::info;
      logger->warn("PMIL_LOG='{}' is not a log level; using info", name);
    }
  }
  if (verbose && level > spdlog::level::debug) level = spdlog::level::debug;
  logger->set_level(level);
  spdlog::set_default_logger(std::move(logger));
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNumerical:
      return kExitNumerical;
    case ErrorKind::kIo:
      return kExitIo;
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kInvalidData:
    case ErrorKind::kCorruptFile:
    case ErrorKind::kVersionMismatch:
      return kExitInput;
  }
  return kExitInternal;
}

int Run(int argc, const char* const* argv) {
  CLI::App app{"Probabilistic multiple-instance learning toolkit", "pmil"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging (see also PMIL_LOG)");
  RunConfig c;

  auto* train = app.add_subcommand("train", "Train one model per class");
  train->add_option("--dataset", c.dataset, "Dataset manifest")->required();
  train->add_option("--models", c.models, "Output model directory")
      ->required();
  AddSplit(train, c, "train");
  AddModeFlags(train, c);
  AddHyperparameterFlags(train, c.hp);
  AddWorkers(train, c);

  auto* predict = app.add_subcommand("predict", "Score bags with trained models");
  predict->add_option("--dataset", c.dataset, "Dataset manifest")->required();
  predict->add_option("--models", c.models, "Model directory")->required();
  predict->add_option("--out", c.out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate localization and ranking");
  eval->add_option("--dataset", c.dataset, "Dataset manifest")->required();
  eval->add_option("--models", c.models, "Model directory")->required();
  eval->add_option("--out", c.out, "Output directory")->required();
  eval->add_option("--predictions", c.predictions,
                   "Evaluate this predictions file instead of predicting")
      ->check(CLI::ExistingFile);
  eval->add_option("--iou-threshold", c.iou_threshold,
                   "Overlap needed for a correct localization")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  eval->add_option("--criterion", c.criterion, "Overlap measure")
      ->check(CLI::IsMember({"iou", "coverage"}))
      ->capture_default_str();
  eval->add_option("--ap", c.ap, "Average precision variant")
      ->check(CLI::IsMember({"non_interpolated", "eleven_point"}))
      ->capture_default_str();

  auto* cv = app.add_subcommand("cv", "Leave-one-bag-per-class cross-validation");
  cv->add_option("--dataset", c.dataset, "Dataset manifest")->required();
  cv->add_option("--out", c.out, "Optional output directory for cv.json");
  AddSplit(cv, c, "train");
  AddModeFlags(cv, c);
  AddHyperparameterFlags(cv, c.hp);
  AddWorkers(cv, c);

  auto* gridsearch =
      app.add_subcommand("gridsearch", "Cross-validated hyperparameter sweep");
  gridsearch->add_option("--dataset", c.dataset, "Dataset manifest")
      ->required();
  gridsearch->add_option("--grid", c.grid,
                         "JSON object mapping parameter names to value lists")
      ->required()
      ->check(CLI::ExistingFile);
  gridsearch->add_option("--out", c.out, "Output directory")->required();
  AddSplit(gridsearch, c, "train");
  AddModeFlags(gridsearch, c);
  AddHyperparameterFlags(gridsearch, c.hp);
  AddWorkers(gridsearch, c);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  SyntheticSpec& s = c.synth;
  synth->add_option("--out", c.out, "Output directory")->required();
  synth->add_option("--classes", s.num_classes)->capture_default_str();
  synth->add_option("--bags-per-class", s.bags_per_class)
      ->capture_default_str();
  synth->add_option("--instances", s.instances_per_bag, "Proposals per bag")
      ->capture_default_str();
  synth->add_option("--positives", s.positives_per_positive_bag,
                    "Planted proposals per bag")
      ->capture_default_str();
  synth->add_option("--dimension", s.feature_dimension)->capture_default_str();
  synth->add_option("--separation", s.cluster_separation)
      ->capture_default_str();
  synth->add_option("--sigma", s.noise_sigma)->capture_default_str();
  synth->add_option("--decoy-fraction", s.decoy_fraction)
      ->capture_default_str();
  synth->add_option("--test-fraction", s.test_fraction)->capture_default_str();
  synth->add_option("--frames", s.video_frames)->capture_default_str();
  synth->add_option("--width", s.video_width)->capture_default_str();
  synth->add_option("--height", s.video_height)->capture_default_str();
  synth->add_option("--seed", s.seed, "Generator seed")->capture_default_str();
  synth->add_flag("--raw-features", c.raw_features,
                  "Keep proposal vectors unnormalized");

  AddSplit(predict, c, "test");
  AddSplit(eval, c, "test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (c.split.empty()) c.split = (*predict || *eval) ? "test" : "train";
  ConfigureLogging(verbose);

  try {
    if (*train) return CmdTrain(c);
    if (*predict) return CmdPredict(c);
    if (*eval) return CmdEval(c);
    if (*cv) return CmdCv(c);
    if (*gridsearch) return CmdGridSearch(c);
    if (*synth) return CmdSynth(c);
  } catch (const Error& e) {
    spdlog::error("{}: {}", ErrorKindName(e.kind()), e.what());
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("io: {}", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace pmil::cli
