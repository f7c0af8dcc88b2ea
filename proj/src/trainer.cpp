#include "termpref/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "termpref/eval.hpp"
#include "termpref/rng.hpp"

namespace termpref {

namespace {

SequenceScore score_with_mask(const ToyTranslator& model,
                              const std::string& x, const std::string& y,
                              const std::vector<std::size_t>& mask) {
  SequenceScore s = token_logprobs(model, x, y);
  s.mask = mask;
  return s;
}

struct BatchStats {
  double loss = 0.0;
  double margin = 0.0;
};

// One gradient-descent update on the given examples; returns the
// batch-mean loss and full-sequence margin measured before the update.
BatchStats step_on_batch(ToyTranslator& model,
                         std::span<const PreferenceExample> batch,
                         std::span<const std::size_t> batch_ids,
                         const TrainConfig& config, std::size_t step) {
  if (batch.empty()) {
    throw std::invalid_argument("step_on_batch: empty batch");
  }
  std::vector<double> grad(model.parameter_count(), 0.0);
  BatchStats stats;
  for (const PreferenceExample& ex : batch) {
    const SequenceScore sw = score_with_mask(model, ex.x, ex.y_w, ex.delta_w);
    const SequenceScore sl = score_with_mask(model, ex.x, ex.y_l, ex.delta_l);
    const LossValue lv = loss_term(sw, sl, config.loss);
    stats.loss += lv.value;
    stats.margin += mean_logprob(sw, false) - mean_logprob(sl, false);
    accumulate_sequence_grad(model, ex.x, ex.y_w, lv.grad_w, grad);
    accumulate_sequence_grad(model, ex.x, ex.y_l, lv.grad_l, grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  stats.loss *= inv;
  stats.margin *= inv;
  if (!std::isfinite(stats.loss)) {
    std::string ids;
    for (const std::size_t id : batch_ids) {
      if (!ids.empty()) ids += ", ";
      ids += std::to_string(id);
    }
    throw std::runtime_error("non-finite loss at step " +
                             std::to_string(step) + " on batch [" + ids + "]");
  }

  double norm_sq = 0.0;
  for (double& g : grad) {
    g *= inv;
    norm_sq += g * g;
  }
  const double norm = std::sqrt(norm_sq);
  const double scale = norm > config.max_grad_norm && norm > 0.0
                           ? config.max_grad_norm / norm
                           : 1.0;
  std::span<double> params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= config.learning_rate * scale * grad[i];
  }
  return stats;
}

double batch_margin(const ToyTranslator& model,
                    std::span<const PreferenceExample> batch) {
  double margin = 0.0;
  for (const PreferenceExample& ex : batch) {
    margin += mean_logprob(token_logprobs(model, ex.x, ex.y_w), false) -
              mean_logprob(token_logprobs(model, ex.x, ex.y_l), false);
  }
  return margin / static_cast<double>(batch.size());
}

double eval_metric(const ToyTranslator& model, const DatasetSplit& dataset,
                   const TrainConfig& config, const TermDictionary& dict) {
  if (config.early_stopping_metric == StopMetric::held_out_loss) {
    double sum = 0.0;
    for (const PreferenceExample& ex : dataset.validation) {
      sum -= mean_logprob(token_logprobs(model, ex.x, ex.y_w), false);
    }
    return sum / static_cast<double>(dataset.validation.size());
  }
  std::vector<PreferenceExample> term_examples;
  for (const PreferenceExample& ex : dataset.validation) {
    if (ex.is_term()) term_examples.push_back(ex);
  }
  if (term_examples.empty()) {
    throw std::invalid_argument(
        "train: term-accuracy stopping needs term examples in validation");
  }
  std::vector<std::string> hyps;
  hyps.reserve(term_examples.size());
  for (const PreferenceExample& ex : term_examples) {
    hyps.push_back(greedy_decode(model, ex.x, config.max_new_tokens));
  }
  return term_eval(hyps, term_examples, dict, config.match_threshold)
      .exact_accuracy;
}

bool is_improvement(StopMetric metric, double value, double best) {
  if (metric == StopMetric::held_out_loss) {
    return value < best - kImprovementEpsilon;
  }
  return value > best + kImprovementEpsilon;
}

}  // namespace

std::string to_string(StopMetric metric) {
  switch (metric) {
    case StopMetric::term_accuracy: return "term-accuracy";
    case StopMetric::held_out_loss: return "held-out-loss";
  }
  throw std::logic_error("unknown stop metric");
}

void validate(const TrainConfig& config) {
  if (config.patience < 1) {
    throw std::invalid_argument("train config: patience must be >= 1");
  }
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("train config: learning rate must be positive");
  }
  if (config.batch_size < 1 || config.eval_every < 1 ||
      config.max_epochs < 1) {
    throw std::invalid_argument(
        "train config: epochs, batch size and eval cadence must be >= 1");
  }
  if (config.max_grad_norm <= 0.0) {
    throw std::invalid_argument("train config: max grad norm must be positive");
  }
  validate(config.loss);
}

TrainResult train(const ToyTranslator& model, const DatasetSplit& dataset,
                  const TrainConfig& config, const TermDictionary& dict) {
  validate(config);
  if (dataset.train.empty()) {
    throw std::invalid_argument("train: empty training split");
  }
  if (dataset.validation.empty()) {
    throw std::invalid_argument("train: empty validation split");
  }

  TrainResult result{model, {}};
  ToyTranslator current = model;

  double best = eval_metric(current, dataset, config, dict);
  result.history.evals.push_back(EvalRecord{0, best, true});
  result.history.best_step = 0;
  result.history.best_metric = best;
  std::size_t bad_evals = 0;

  std::vector<std::size_t> order(dataset.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  bool stopped = false;
  for (std::size_t epoch = 0; epoch < config.max_epochs && !stopped; ++epoch) {
    Rng epoch_rng = Rng::derive(config.seed, 1000 + epoch);
    epoch_rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size() && !stopped;
         begin += config.batch_size) {
      const std::size_t end =
          std::min(begin + config.batch_size, order.size());
      std::vector<PreferenceExample> batch;
      std::vector<std::size_t> ids;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(dataset.train[order[i]]);
        ids.push_back(order[i]);
      }
      ++step;
      const BatchStats stats =
          step_on_batch(current, batch, ids, config, step);
      result.history.steps.push_back(
          StepRecord{step, stats.loss, stats.margin});

      if (step % config.eval_every != 0) continue;
      const double metric = eval_metric(current, dataset, config, dict);
      const bool improved =
          is_improvement(config.early_stopping_metric, metric, best);
      result.history.evals.push_back(EvalRecord{step, metric, improved});
      if (improved) {
        best = metric;
        result.model = current;
        result.history.best_step = step;
        result.history.best_metric = best;
        bad_evals = 0;
      } else if (++bad_evals >= config.patience) {
        stopped = true;
      }
    }
  }
  return result;
}

std::vector<double> margin_probe(ToyTranslator model,
                                 std::span<const PreferenceExample> batch,
                                 const TrainConfig& config, std::size_t steps) {
  validate(config);
  if (batch.empty()) {
    throw std::invalid_argument("margin_probe: empty batch");
  }
  std::vector<std::size_t> ids(batch.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  std::vector<double> margins;
  for (std::size_t s = 0; s < steps; ++s) {
    margins.push_back(step_on_batch(model, batch, ids, config, s + 1).margin);
  }
  margins.push_back(batch_margin(model, batch));
  return margins;
}

EvaluationRow evaluate_model(const ToyTranslator& model,
                             std::span<const PreferenceExample> test,
                             const TermDictionary& dict, std::string label,
                             std::size_t max_new_tokens, double threshold) {
  if (test.empty()) {
    throw std::invalid_argument("evaluate_model: empty test split");
  }
  EvaluationRow row;
  row.label = std::move(label);

  std::vector<std::string> term_hyps;
  std::vector<PreferenceExample> term_examples;
  double chrf_sum = 0.0;
  for (const PreferenceExample& ex : test) {
    const std::string hyp = greedy_decode(model, ex.x, max_new_tokens);
    const double segment_chrf = chrf(hyp, ex.y_w);
    row.chrf_segments.push_back(segment_chrf);
    chrf_sum += segment_chrf;
    if (ex.is_term()) {
      term_hyps.push_back(hyp);
      term_examples.push_back(ex);
    }
  }
  row.chrf_score = chrf_sum / static_cast<double>(test.size());

  if (!term_examples.empty()) {
    const TermEvalResult res =
        term_eval(term_hyps, term_examples, dict, threshold);
    row.exact_accuracy = res.exact_accuracy;
    row.valid_rate = res.valid_rate;
    row.mt_repeat_rate = res.mt_repeat_rate;
    for (const TermEvalRow& r : res.per_example) {
      row.term_correct.push_back(r.classification == TermClass::exact ? 1.0
                                                                      : 0.0);
    }
  }
  return row;
}

SettingRun run_setting_full(int setting_id, const ToyTranslator& baseline,
                            const DatasetSplit& dataset,
                            const TermDictionary& dict,
                            const TrainConfig& fine_tune) {
  TrainConfig config = fine_tune;
  config.loss = setting_config(setting_id);
  config.early_stopping_metric = StopMetric::term_accuracy;
  TrainResult trained = train(baseline, dataset, config, dict);
  EvaluationRow row =
      evaluate_model(trained.model, dataset.test, dict,
                     "setting-" + std::to_string(setting_id),
                     config.max_new_tokens, config.match_threshold);
  return SettingRun{std::move(row), std::move(trained.model),
                    std::move(trained.history)};
}

EvaluationRow run_setting(int setting_id, const ToyTranslator& baseline,
                          const DatasetSplit& dataset,
                          const TermDictionary& dict,
                          const TrainConfig& fine_tune) {
  return run_setting_full(setting_id, baseline, dataset, dict, fine_tune).row;
}

}  // namespace termpref
