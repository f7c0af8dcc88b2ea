#include "termpref/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "termpref/eval.hpp"
#include "termpref/rng.hpp"
#include "termpref/serialization.hpp"
#include "termpref/tokenize.hpp"

namespace termpref {

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

void collect_words(const PreferenceExample& ex, std::set<std::string>& words) {
  for (const std::string_view text : {std::string_view(ex.x),
                                      std::string_view(ex.y_w),
                                      std::string_view(ex.y_l)}) {
    for (const Token& t : whitespace_tokens(text)) words.insert(t.text);
  }
}

nlohmann::ordered_json significance_json(const SignificanceResult& sig) {
  nlohmann::ordered_json j;
  j["p_value"] = sig.p_value;
  j["iterations"] = sig.iterations;
  j["observed_delta"] = sig.observed_delta;
  j["seed"] = sig.seed;
  j["significant"] = sig.p_value < 0.05;
  return j;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.baseline.max_epochs = 6;
  c.baseline.learning_rate = 0.2;
  c.baseline.batch_size = 16;
  c.baseline.early_stopping_metric = StopMetric::held_out_loss;
  c.baseline.patience = 8;
  c.baseline.eval_every = 125;
  c.baseline.max_grad_norm = 10.0;
  c.baseline.loss = baseline_config();

  // Term accuracy stays flat while the preference margin grows, then decode
  // flips arrive in bulk. Epoch-level evals with a long patience keep early
  // stopping from firing inside that plateau.
  c.fine_tune.max_epochs = 40;
  c.fine_tune.learning_rate = 0.25;
  c.fine_tune.batch_size = 16;
  c.fine_tune.early_stopping_metric = StopMetric::term_accuracy;
  c.fine_tune.patience = 8;
  c.fine_tune.eval_every = 125;
  c.fine_tune.max_grad_norm = 1.0;
  c.fine_tune.loss = setting_config(6);
  return c;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c = default_experiment_config();
  if (j.contains("synth")) {
    c.synth = synth_spec_from_json(j.at("synth"), SynthSpec{});
  }
  if (j.contains("dict")) c.dict_path = j.at("dict").get<std::string>();
  if (j.contains("corpus")) c.corpus_path = j.at("corpus").get<std::string>();
  c.val_size = j.value("val_size", c.val_size);
  c.test_size = j.value("test_size", c.test_size);
  if (j.contains("settings")) {
    c.settings = j.at("settings").get<std::vector<int>>();
  }
  if (j.contains("model")) {
    c.model = model_config_from_json(j.at("model"), c.model);
  }
  if (j.contains("baseline")) {
    c.baseline = train_config_from_json(j.at("baseline"), c.baseline);
  }
  if (j.contains("fine_tune")) {
    c.fine_tune = train_config_from_json(j.at("fine_tune"), c.fine_tune);
  }
  c.significance_iterations =
      j.value("significance_iterations", c.significance_iterations);
  c.threshold = j.value("threshold", c.threshold);
  c.init_scale = j.value("init_scale", c.init_scale);
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  return c;
}

void validate(const ExperimentConfig& config) {
  const bool file_source = config.dict_path.has_value();
  if (config.synth.has_value() == file_source) {
    throw std::invalid_argument(
        "experiment config: provide either a synth spec or a dictionary, "
        "not both");
  }
  if (file_source && !config.corpus_path) {
    throw std::invalid_argument(
        "experiment config: a dictionary source needs a corpus path");
  }
  for (const int id : config.settings) {
    if (id < 1 || id > 6) {
      throw std::invalid_argument("experiment config: setting id " +
                                  std::to_string(id) + " outside 1..6");
    }
  }
  if (config.significance_iterations < 1) {
    throw std::invalid_argument(
        "experiment config: significance iterations must be >= 1");
  }
  if (config.init_scale < 0.0) {
    throw std::invalid_argument(
        "experiment config: init scale must be non-negative");
  }
  if (config.out_dir.empty()) {
    throw std::invalid_argument("experiment config: empty output directory");
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  std::filesystem::create_directories(config.out_dir);
  const auto out_path = [&](const std::string& name) {
    return (std::filesystem::path(config.out_dir) / name).string();
  };

  // Data phase. All triples go through one mining pass; the rejected
  // no-source-term segments become the non-term pool.
  TermDictionary dict;
  std::vector<SegmentTriple> triples;
  std::vector<std::string> vocab_words;
  if (config.synth) {
    SynthSpec spec = *config.synth;
    spec.seed = Rng::mix(config.seed, 1);
    SynthCorpus corpus = gen_synthetic_corpus(spec);
    dict = std::move(corpus.dict);
    triples = std::move(corpus.term_triples);
    triples.insert(triples.end(), corpus.non_term_triples.begin(),
                   corpus.non_term_triples.end());
    vocab_words = std::move(corpus.words);
  } else {
    dict = load_dictionary(*config.dict_path);
    triples = load_corpus_jsonl(*config.corpus_path);
  }

  MiningResult mined = mine_corpus(triples, dict, config.threshold);
  if (vocab_words.empty()) {
    std::set<std::string> words;
    for (const PreferenceExample& ex : mined.examples) {
      collect_words(ex, words);
    }
    for (const PreferenceExample& ex : mined.non_term_pool) {
      collect_words(ex, words);
    }
    vocab_words.assign(words.begin(), words.end());
  }

  const DatasetSplit split =
      split_dataset(mined.examples, mined.non_term_pool, config.val_size,
                    config.test_size, Rng::mix(config.seed, 2));

  ExperimentResult result;
  result.mining = mined.report;
  result.train_size = split.train.size();
  result.val_size = split.validation.size();
  result.test_size = split.test.size();
  result.coverage = term_coverage(split);

  std::vector<std::pair<std::string, std::string>> baseline_pairs;
  for (const PreferenceExample& ex : split.test) {
    if (ex.is_term()) {
      baseline_pairs.emplace_back(ex.source_term, ex.w_variants.front());
    }
  }
  result.random_baseline =
      baseline_pairs.empty() ? 0.0
                             : random_baseline_accuracy(baseline_pairs, dict);

  // Baseline phase: SFT pre-training stopped on held-out loss.
  ToyTranslator init_model(make_vocabulary(vocab_words), config.model);
  init_model.randomize(Rng::mix(config.seed, 3), config.init_scale);
  TrainConfig base_cfg = config.baseline;
  base_cfg.seed = Rng::mix(config.seed, 4);
  base_cfg.match_threshold = config.threshold;
  TrainResult baseline = train(init_model, split, base_cfg, dict);
  save_checkpoint(baseline.model, train_config_hash(base_cfg),
                  out_path("baseline.ckpt.json"));
  write_text_file(out_path("baseline.history.jsonl"),
                  history_to_jsonl(baseline.history));

  EvaluationRow base_row =
      evaluate_model(baseline.model, split.test, dict, "baseline",
                     base_cfg.max_new_tokens, config.threshold);

  std::vector<EvaluationRow> setting_rows;
  for (const int id : config.settings) {
    TrainConfig ft = config.fine_tune;
    ft.seed = Rng::mix(config.seed, 100 + static_cast<std::uint64_t>(id));
    ft.match_threshold = config.threshold;
    SettingRun run = run_setting_full(id, baseline.model, split, dict, ft);
    save_checkpoint(run.model, train_config_hash(ft),
                    out_path(run.row.label + ".ckpt.json"));
    write_text_file(out_path(run.row.label + ".history.jsonl"),
                    history_to_jsonl(run.history));

    if (!run.row.term_correct.empty() &&
        run.row.term_correct.size() == base_row.term_correct.size()) {
      run.row.sig_term = approx_randomization_test(
          run.row.term_correct, base_row.term_correct, mean_aggregate,
          config.significance_iterations,
          Rng::mix(config.seed, 200 + static_cast<std::uint64_t>(id)));
    }
    run.row.sig_chrf = approx_randomization_test(
        run.row.chrf_segments, base_row.chrf_segments, mean_aggregate,
        config.significance_iterations,
        Rng::mix(config.seed, 300 + static_cast<std::uint64_t>(id)));
    setting_rows.push_back(std::move(run.row));
  }

  result.rows.push_back(std::move(base_row));
  for (EvaluationRow& row : setting_rows) result.rows.push_back(std::move(row));

  write_text_file(out_path("report.json"),
                  report_json(config, result).dump(2) + "\n");
  write_text_file(out_path("report.tsv"), report_tsv(result));
  return result;
}

nlohmann::ordered_json report_json(const ExperimentConfig& config,
                                   const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  if (config.synth) {
    nlohmann::ordered_json source;
    source["synth"] = to_json(*config.synth);
    j["source"] = std::move(source);
  } else {
    nlohmann::ordered_json source;
    source["dict"] = *config.dict_path;
    source["corpus"] = *config.corpus_path;
    j["source"] = std::move(source);
  }
  j["mining"] = to_json(result.mining);

  nlohmann::ordered_json dataset;
  dataset["train"] = result.train_size;
  dataset["validation"] = result.val_size;
  dataset["test"] = result.test_size;
  dataset["term_coverage"] = result.coverage;
  dataset["random_baseline_accuracy"] = result.random_baseline;
  j["dataset"] = std::move(dataset);

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const EvaluationRow& row : result.rows) {
    nlohmann::ordered_json r;
    r["label"] = row.label;
    r["chrf"] = row.chrf_score;
    r["exact_accuracy"] = row.exact_accuracy;
    r["valid_rate"] = row.valid_rate;
    r["mt_repeat_rate"] = row.mt_repeat_rate;
    nlohmann::ordered_json sig = nlohmann::ordered_json::object();
    if (row.sig_term) sig["term_accuracy"] = significance_json(*row.sig_term);
    if (row.sig_chrf) sig["chrf"] = significance_json(*row.sig_chrf);
    r["significance"] =
        sig.empty() ? nlohmann::ordered_json() : std::move(sig);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string report_tsv(const ExperimentResult& result) {
  // Markers follow the summary-table convention: '*' on term accuracy and
  // '+' on chrf, each only when p < 0.05 against the baseline.
  std::string out =
      "label\tchrf\texact_accuracy\tvalid_rate\tmt_repeat_rate\tp_term\t"
      "p_chrf\n";
  for (const EvaluationRow& row : result.rows) {
    out += row.label;
    out += '\t';
    out += fixed(row.chrf_score, 2);
    if (row.sig_chrf && row.sig_chrf->p_value < 0.05) out += '+';
    out += '\t';
    out += fixed(row.exact_accuracy, 4);
    if (row.sig_term && row.sig_term->p_value < 0.05) out += '*';
    out += '\t';
    out += fixed(row.valid_rate, 4);
    out += '\t';
    out += fixed(row.mt_repeat_rate, 4);
    out += '\t';
    out += row.sig_term ? fixed(row.sig_term->p_value, 4) : std::string("-");
    out += '\t';
    out += row.sig_chrf ? fixed(row.sig_chrf->p_value, 4) : std::string("-");
    out += '\n';
  }
  return out;
}

}  // namespace termpref
