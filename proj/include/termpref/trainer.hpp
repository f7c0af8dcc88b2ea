#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termpref/dictionary.hpp"
#include "termpref/eval.hpp"
#include "termpref/losses.hpp"
#include "termpref/mining.hpp"
#include "termpref/toymodel.hpp"

namespace termpref {

// An evaluation must beat the best by more than this to count as an
// improvement.
inline constexpr double kImprovementEpsilon = 1e-5;

enum class StopMetric {
  term_accuracy,   // higher is better; decoded on validation term examples
  held_out_loss,   // lower is better; mean -logprob of y_w on validation
};

std::string to_string(StopMetric metric);

struct TrainConfig {
  std::size_t max_epochs = 10;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  StopMetric early_stopping_metric = StopMetric::term_accuracy;
  std::size_t patience = 3;
  std::size_t eval_every = 50;  // optimizer steps between evaluations
  std::uint64_t seed = 0;
  LossConfig loss;
  double max_grad_norm = 1.0;
  std::size_t max_new_tokens = kDefaultMaxNewTokens;
  double match_threshold = kDefaultMatchThreshold;
};

void validate(const TrainConfig& config);

struct StepRecord {
  std::size_t step = 0;   // 1-based optimizer step
  double loss = 0.0;      // batch-mean loss at that step
  double margin = 0.0;    // batch-mean full-sequence logprob margin w - l

  bool operator==(const StepRecord&) const = default;
};

struct EvalRecord {
  std::size_t step = 0;   // 0 is the pre-training evaluation
  double metric = 0.0;
  bool improved = false;

  bool operator==(const EvalRecord&) const = default;
};

struct TrainingHistory {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  std::size_t best_step = 0;
  double best_metric = 0.0;

  bool operator==(const TrainingHistory&) const = default;
};

struct TrainResult {
  ToyTranslator model;  // best-metric checkpoint, never merely the last
  TrainingHistory history;
};

// Mini-batch gradient descent with global gradient-norm clipping. The
// metric is evaluated before training and every eval_every steps;
// training stops after `patience` consecutive evaluations without
// improvement or at max_epochs. A non-finite batch loss aborts with the
// step and batch ids. Deterministic in config.seed.
TrainResult train(const ToyTranslator& model, const DatasetSplit& dataset,
                  const TrainConfig& config, const TermDictionary& dict);

// Runs `steps` full-batch updates on a fixed batch and reports the
// batch-mean margin at each forward pass plus after the last update
// (steps + 1 values). Shares the update rule with train().
std::vector<double> margin_probe(ToyTranslator model,
                                 std::span<const PreferenceExample> batch,
                                 const TrainConfig& config, std::size_t steps);

struct EvaluationRow {
  std::string label;
  double chrf_score = 0.0;        // over all test segments
  double exact_accuracy = 0.0;    // over test term segments
  double valid_rate = 0.0;
  double mt_repeat_rate = 0.0;
  std::optional<SignificanceResult> sig_term;  // vs baseline, when computed
  std::optional<SignificanceResult> sig_chrf;
  std::vector<double> term_correct;   // per term segment, 0/1
  std::vector<double> chrf_segments;  // per segment
};

EvaluationRow evaluate_model(const ToyTranslator& model,
                             std::span<const PreferenceExample> test,
                             const TermDictionary& dict, std::string label,
                             std::size_t max_new_tokens = kDefaultMaxNewTokens,
                             double threshold = kDefaultMatchThreshold);

struct SettingRun {
  EvaluationRow row;
  ToyTranslator model;
  TrainingHistory history;
};

// Fine-tunes a copy of the baseline under the setting's loss config with
// early stopping on term accuracy, then evaluates on the test split.
// fine_tune supplies the remaining hyperparameters; its loss and stopping
// metric are overridden.
SettingRun run_setting_full(int setting_id, const ToyTranslator& baseline,
                            const DatasetSplit& dataset,
                            const TermDictionary& dict,
                            const TrainConfig& fine_tune);

EvaluationRow run_setting(int setting_id, const ToyTranslator& baseline,
                          const DatasetSplit& dataset,
                          const TermDictionary& dict,
                          const TrainConfig& fine_tune);

}  // namespace termpref
