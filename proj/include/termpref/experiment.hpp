#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "termpref/synth.hpp"
#include "termpref/trainer.hpp"

namespace termpref {

// Full pipeline description: data source (a synthetic spec or dictionary
// plus corpus paths), split sizes, both training phases, the settings to
// run, and one global seed from which every phase's randomness derives.
struct ExperimentConfig {
  std::optional<SynthSpec> synth;
  std::optional<std::string> dict_path;
  std::optional<std::string> corpus_path;
  std::size_t val_size = 400;
  std::size_t test_size = 400;
  std::vector<int> settings = {1, 2, 3, 4, 5, 6};
  ModelConfig model;
  TrainConfig baseline;
  TrainConfig fine_tune;
  std::size_t significance_iterations = 2000;
  double threshold = kDefaultMatchThreshold;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  std::string out_dir = "experiment-out";
};

ExperimentConfig default_experiment_config();
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
void validate(const ExperimentConfig& config);

struct ExperimentResult {
  MiningReport mining;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t test_size = 0;
  double coverage = 0.0;
  double random_baseline = 0.0;
  std::vector<EvaluationRow> rows;  // baseline first, then settings
};

nlohmann::ordered_json report_json(const ExperimentConfig& config,
                                   const ExperimentResult& result);
std::string report_tsv(const ExperimentResult& result);

// Runs baseline pre-training, each requested setting, and significance
// against the baseline; writes report.json, report.tsv, checkpoints and
// training histories into config.out_dir. Byte-identical outputs for
// identical config and seed.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace termpref
