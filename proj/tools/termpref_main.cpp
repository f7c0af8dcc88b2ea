#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "termpref/dictionary.hpp"
#include "termpref/eval.hpp"
#include "termpref/experiment.hpp"
#include "termpref/losses.hpp"
#include "termpref/mining.hpp"
#include "termpref/rng.hpp"
#include "termpref/serialization.hpp"
#include "termpref/synth.hpp"
#include "termpref/tokenize.hpp"
#include "termpref/toymodel.hpp"
#include "termpref/trainer.hpp"

namespace {

using termpref::kDefaultMatchThreshold;

std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

nlohmann::json parse_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(termpref::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("invalid json in " + path + ": " + e.what());
  }
}

std::vector<double> load_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw std::runtime_error("non-numeric value '" + token + "' in " + path);
    }
  }
  return values;
}

termpref::SequenceScore score_from_json(const nlohmann::json& j,
                                        const char* key) {
  if (!j.contains(key)) {
    throw std::runtime_error(std::string("missing object '") + key + "'");
  }
  const nlohmann::json& side = j.at(key);
  termpref::SequenceScore s;
  s.token_logprobs = side.at("logprobs").get<std::vector<double>>();
  if (side.contains("mask")) {
    s.mask = side.at("mask").get<std::vector<std::size_t>>();
  }
  if (side.contains("ref")) {
    s.ref_token_logprobs = side.at("ref").get<std::vector<double>>();
  }
  return s;
}

// Central finite differences of the combined loss against its analytic
// gradient; returns the worst relative error across both sequences.
double fd_max_residual(const termpref::SequenceScore& w,
                       const termpref::SequenceScore& l,
                       const termpref::LossConfig& config, bool use_dcpo) {
  const auto value = [&](const termpref::SequenceScore& sw,
                         const termpref::SequenceScore& sl) {
    return use_dcpo ? termpref::loss_dcpo(sw, sl, config.beta).value
                    : termpref::loss_term(sw, sl, config).value;
  };
  const termpref::LossValue lv = use_dcpo
                                     ? termpref::loss_dcpo(w, l, config.beta)
                                     : termpref::loss_term(w, l, config);
  const double h = 1e-6;
  double worst = 0.0;
  const auto check_side = [&](const termpref::SequenceScore& side, bool is_w) {
    const std::vector<double>& grad = is_w ? lv.grad_w : lv.grad_l;
    for (std::size_t i = 0; i < side.token_logprobs.size(); ++i) {
      termpref::SequenceScore hi = side, lo = side;
      hi.token_logprobs[i] += h;
      lo.token_logprobs[i] -= h;
      const double fd = is_w ? (value(hi, l) - value(lo, l)) / (2 * h)
                             : (value(w, hi) - value(w, lo)) / (2 * h);
      const double err =
          std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  };
  check_side(w, true);
  check_side(l, false);
  return worst;
}

int cmd_mine(const std::string& corpus_path, const std::string& dict_path,
             double threshold, const std::string& out_dir) {
  const termpref::TermDictionary dict = termpref::load_dictionary(dict_path);
  const std::vector<termpref::SegmentTriple> triples =
      termpref::load_corpus_jsonl(corpus_path);
  const termpref::MiningResult mined =
      termpref::mine_corpus(triples, dict, threshold);
  const auto dir = ensure_dir(out_dir);
  termpref::save_examples_jsonl(mined.examples,
                                (dir / "dataset.jsonl").string());
  termpref::save_examples_jsonl(mined.non_term_pool,
                                (dir / "non_term.jsonl").string());
  const nlohmann::ordered_json report = termpref::to_json(mined.report);
  termpref::write_text_file((dir / "mining_report.json").string(),
                            report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_stats(const std::string& dict_path) {
  const termpref::TermDictionary dict = termpref::load_dictionary(dict_path);
  const termpref::DictStats stats = termpref::dictionary_stats(dict);
  nlohmann::ordered_json j;
  j["term_count"] = stats.term_count;
  j["mean_variants"] = stats.mean_variants;
  j["std_variants"] = stats.std_variants;
  j["max_variants"] = stats.max_variants;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [count, terms] : stats.histogram) {
    hist[std::to_string(count)] = terms;
  }
  j["histogram"] = std::move(hist);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_split(const std::string& data_path, const std::string& non_term_path,
              std::size_t val_size, std::size_t test_size, std::uint64_t seed,
              const std::string& out_dir) {
  const std::vector<termpref::PreferenceExample> term_pool =
      termpref::load_examples_jsonl(data_path);
  std::vector<termpref::PreferenceExample> non_term_pool;
  if (!non_term_path.empty()) {
    non_term_pool = termpref::load_examples_jsonl(non_term_path);
  }
  const termpref::DatasetSplit split = termpref::split_dataset(
      term_pool, non_term_pool, val_size, test_size, seed);
  const auto dir = ensure_dir(out_dir);
  termpref::save_examples_jsonl(split.train, (dir / "train.jsonl").string());
  termpref::save_examples_jsonl(split.validation,
                                (dir / "validation.jsonl").string());
  termpref::save_examples_jsonl(split.test, (dir / "test.jsonl").string());
  nlohmann::ordered_json j;
  j["train"] = split.train.size();
  j["validation"] = split.validation.size();
  j["test"] = split.test.size();
  j["term_coverage"] = termpref::term_coverage(split);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_synth(const termpref::SynthSpec& spec, const std::string& out_dir) {
  const termpref::SynthCorpus corpus = termpref::gen_synthetic_corpus(spec);
  const auto dir = ensure_dir(out_dir);
  termpref::save_dictionary(corpus.dict, (dir / "dict.tsv").string());
  std::vector<termpref::SegmentTriple> triples = corpus.term_triples;
  triples.insert(triples.end(), corpus.non_term_triples.begin(),
                 corpus.non_term_triples.end());
  termpref::save_corpus_jsonl(triples, (dir / "corpus.jsonl").string());
  nlohmann::ordered_json truth = nlohmann::ordered_json::array();
  for (const termpref::SynthTruth& t : corpus.truth) {
    nlohmann::ordered_json row;
    row["segment"] = t.segment;
    row["term"] = t.term;
    row["correct_variant"] = t.correct_variant;
    row["mt_variant"] = t.mt_variant;
    truth.push_back(std::move(row));
  }
  termpref::write_text_file((dir / "truth.json").string(),
                            truth.dump(2) + "\n");
  nlohmann::ordered_json j;
  j["terms"] = spec.n_source_terms;
  j["variants_per_term"] = spec.variants_per_term;
  j["term_segments"] = corpus.term_triples.size();
  j["non_term_segments"] = corpus.non_term_triples.size();
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& val_path,
              const std::string& dict_path, const std::string& config_path,
              const std::string& init_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  termpref::DatasetSplit split;
  split.train = termpref::load_examples_jsonl(train_path);
  split.validation = termpref::load_examples_jsonl(val_path);
  const termpref::TermDictionary dict = termpref::load_dictionary(dict_path);

  termpref::TrainConfig config;
  config.loss = termpref::baseline_config();
  termpref::ModelConfig model_config;
  double init_scale = 0.1;
  if (!config_path.empty()) {
    const nlohmann::json j = parse_json_file(config_path);
    config = termpref::train_config_from_json(
        j.contains("train") ? j.at("train") : j, config);
    if (j.contains("model")) {
      model_config = termpref::model_config_from_json(j.at("model"),
                                                      model_config);
    }
    init_scale = j.value("init_scale", init_scale);
  }
  if (seed) config.seed = *seed;

  std::optional<termpref::ToyTranslator> model;
  if (!init_path.empty()) {
    model = termpref::load_checkpoint(init_path).model;
  } else {
    std::set<std::string> words;
    for (const auto* pool : {&split.train, &split.validation}) {
      for (const termpref::PreferenceExample& ex : *pool) {
        for (const termpref::Token& t : termpref::whitespace_tokens(ex.x)) {
          words.insert(t.text);
        }
        for (const termpref::Token& t : termpref::whitespace_tokens(ex.y_w)) {
          words.insert(t.text);
        }
        for (const termpref::Token& t : termpref::whitespace_tokens(ex.y_l)) {
          words.insert(t.text);
        }
      }
    }
    const std::vector<std::string> word_list(words.begin(), words.end());
    model.emplace(termpref::make_vocabulary(word_list), model_config);
    model->randomize(termpref::Rng::mix(config.seed, 3), init_scale);
  }

  const termpref::TrainResult result =
      termpref::train(*model, split, config, dict);
  const auto dir = ensure_dir(out_dir);
  termpref::save_checkpoint(result.model, termpref::train_config_hash(config),
                            (dir / "model.ckpt.json").string());
  termpref::write_text_file((dir / "history.jsonl").string(),
                            termpref::history_to_jsonl(result.history));
  nlohmann::ordered_json j;
  j["steps"] = result.history.steps.size();
  j["evaluations"] = result.history.evals.size();
  j["best_step"] = result.history.best_step;
  j["best_metric"] = result.history.best_metric;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_translate(const std::string& model_path, const std::string& data_path,
                  std::size_t max_tokens, const std::string& out_path) {
  const termpref::Checkpoint ckpt = termpref::load_checkpoint(model_path);
  const std::vector<termpref::PreferenceExample> examples =
      termpref::load_examples_jsonl(data_path);
  std::string out;
  for (const termpref::PreferenceExample& ex : examples) {
    out += termpref::greedy_decode(ckpt.model, ex.x, max_tokens);
    out += '\n';
  }
  if (out_path.empty()) {
    std::cout << out;
  } else {
    termpref::write_text_file(out_path, out);
  }
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& dict_path, double threshold,
                 std::size_t max_tokens, const std::string& out_path) {
  const termpref::Checkpoint ckpt = termpref::load_checkpoint(model_path);
  const std::vector<termpref::PreferenceExample> examples =
      termpref::load_examples_jsonl(data_path);
  const termpref::TermDictionary dict = termpref::load_dictionary(dict_path);
  if (examples.empty()) throw std::runtime_error("empty dataset: " + data_path);

  std::vector<std::string> term_hyps;
  std::vector<termpref::PreferenceExample> term_examples;
  std::vector<std::size_t> term_segments;
  double chrf_sum = 0.0;
  nlohmann::ordered_json per_example = nlohmann::ordered_json::array();
  std::vector<nlohmann::ordered_json> rows(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const termpref::PreferenceExample& ex = examples[i];
    const std::string hyp = termpref::greedy_decode(ckpt.model, ex.x,
                                                    max_tokens);
    const double segment_chrf = termpref::chrf(hyp, ex.y_w);
    chrf_sum += segment_chrf;
    rows[i]["segment"] = i;
    rows[i]["hypothesis"] = hyp;
    rows[i]["chrf"] = segment_chrf;
    if (ex.is_term()) {
      term_hyps.push_back(hyp);
      term_examples.push_back(ex);
      term_segments.push_back(i);
    }
  }
  nlohmann::ordered_json j;
  j["segments"] = examples.size();
  j["chrf"] = chrf_sum / static_cast<double>(examples.size());
  if (!term_examples.empty()) {
    const termpref::TermEvalResult res =
        termpref::term_eval(term_hyps, term_examples, dict, threshold);
    j["exact_accuracy"] = res.exact_accuracy;
    j["valid_rate"] = res.valid_rate;
    j["mt_repeat_rate"] = res.mt_repeat_rate;
    for (std::size_t k = 0; k < res.per_example.size(); ++k) {
      nlohmann::ordered_json& row = rows[term_segments[k]];
      row["classification"] =
          termpref::to_string(res.per_example[k].classification);
      if (res.per_example[k].matched_variant) {
        row["matched_variant"] = *res.per_example[k].matched_variant;
      }
    }
  }
  for (nlohmann::ordered_json& row : rows) per_example.push_back(std::move(row));
  j["per_example"] = std::move(per_example);
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    termpref::write_text_file(out_path, text);
    std::cout << "chrf " << j["chrf"] << "\n";
  }
  return 0;
}

int cmd_significance(const std::string& a_path, const std::string& b_path,
                     std::size_t iterations, std::uint64_t seed) {
  const std::vector<double> a = load_numbers(a_path);
  const std::vector<double> b = load_numbers(b_path);
  const termpref::SignificanceResult res = termpref::approx_randomization_test(
      a, b, termpref::mean_aggregate, iterations, seed);
  nlohmann::ordered_json j;
  j["p_value"] = res.p_value;
  j["iterations"] = res.iterations;
  j["observed_delta"] = res.observed_delta;
  j["seed"] = res.seed;
  j["significant"] = res.p_value < 0.05;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_loss_check(const std::string& batch_path,
                   const std::string& config_path, std::optional<int> setting,
                   bool use_dcpo) {
  termpref::LossConfig config = termpref::baseline_config();
  if (setting) {
    config = termpref::setting_config(*setting);
  } else if (!config_path.empty()) {
    config = termpref::loss_config_from_json(parse_json_file(config_path),
                                             termpref::LossConfig{});
  }
  if (!use_dcpo) termpref::validate(config);

  std::ifstream in(batch_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + batch_path);
  std::string line;
  std::size_t line_no = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(batch_path + ":" + std::to_string(line_no) +
                               ": invalid json: " + e.what());
    }
    const termpref::SequenceScore w = score_from_json(j, "w");
    const termpref::SequenceScore l = score_from_json(j, "l");
    const termpref::LossValue lv =
        use_dcpo ? termpref::loss_dcpo(w, l, config.beta)
                 : termpref::loss_term(w, l, config);
    nlohmann::ordered_json out;
    out["line"] = line_no;
    out["value"] = lv.value;
    out["grad_w"] = lv.grad_w;
    out["grad_l"] = lv.grad_l;
    out["fd_max_residual"] = fd_max_residual(w, l, config, use_dcpo);
    std::cout << out.dump() << "\n";
    any = true;
  }
  if (!any) throw std::runtime_error("empty batch file: " + batch_path);
  return 0;
}

int cmd_experiment(const std::string& config_path,
                   std::optional<std::uint64_t> seed,
                   const std::string& out_dir,
                   const std::vector<int>& settings) {
  termpref::ExperimentConfig config =
      config_path.empty()
          ? termpref::default_experiment_config()
          : termpref::experiment_config_from_json(parse_json_file(config_path));
  if (!config.synth && !config.dict_path) {
    config.synth = termpref::SynthSpec{};
  }
  if (seed) config.seed = *seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (!settings.empty()) config.settings = settings;
  const termpref::ExperimentResult result = termpref::run_experiment(config);
  std::cout << termpref::report_tsv(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terminology preference mining, training and evaluation"};
  app.require_subcommand(1);

  std::string dict_path, corpus_path, out_path, config_path;
  std::string data_path, non_term_path, model_path, init_path;
  std::string a_path, b_path;
  double threshold = kDefaultMatchThreshold;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_opt;
  std::size_t val_size = 0, test_size = 0;
  std::size_t iterations = 10000;
  std::size_t max_tokens = termpref::kDefaultMaxNewTokens;
  termpref::SynthSpec synth_spec;
  std::optional<int> setting_opt;
  std::vector<int> settings;
  bool use_dcpo = false;

  CLI::App* mine = app.add_subcommand("mine", "mine preference pairs");
  mine->add_option("--corpus", corpus_path, "corpus jsonl")->required();
  mine->add_option("--dict", dict_path, "dictionary file")->required();
  mine->add_option("--threshold", threshold, "fuzzy match threshold");
  mine->add_option("--out", out_path, "output directory")->required();

  CLI::App* stats = app.add_subcommand("stats", "dictionary statistics");
  stats->add_option("--dict", dict_path, "dictionary file")->required();

  CLI::App* split = app.add_subcommand("split", "balanced dataset split");
  split->add_option("--data", data_path, "term dataset jsonl")->required();
  split->add_option("--non-term", non_term_path, "non-term dataset jsonl");
  split->add_option("--val", val_size, "validation size")->required();
  split->add_option("--test", test_size, "test size")->required();
  split->add_option("--seed", seed, "split seed");
  split->add_option("--out", out_path, "output directory")->required();

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--terms", synth_spec.n_source_terms, "source terms");
  synth->add_option("--variants", synth_spec.variants_per_term,
                    "variants per term");
  synth->add_option("--cues", synth_spec.n_context_cues, "context cues");
  synth->add_option("--size", synth_spec.corpus_size, "term segments");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_option("--out", out_path, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--train", data_path, "training jsonl")->required();
  train->add_option("--val", non_term_path, "validation jsonl")->required();
  train->add_option("--dict", dict_path, "dictionary file")->required();
  train->add_option("--config", config_path, "train config json");
  train->add_option("--init", init_path, "initial checkpoint");
  train->add_option("--seed", seed_opt, "seed override");
  train->add_option("--out", out_path, "output directory")->required();

  CLI::App* translate = app.add_subcommand("translate", "greedy decoding");
  translate->add_option("--model", model_path, "checkpoint")->required();
  translate->add_option("--data", data_path, "dataset jsonl")->required();
  translate->add_option("--max-tokens", max_tokens, "decode budget");
  translate->add_option("--out", out_path, "hypotheses file");

  CLI::App* evaluate = app.add_subcommand("evaluate", "terminology metrics");
  evaluate->add_option("--model", model_path, "checkpoint")->required();
  evaluate->add_option("--data", data_path, "test jsonl")->required();
  evaluate->add_option("--dict", dict_path, "dictionary file")->required();
  evaluate->add_option("--threshold", threshold, "fuzzy match threshold");
  evaluate->add_option("--max-tokens", max_tokens, "decode budget");
  evaluate->add_option("--out", out_path, "report json path");

  CLI::App* significance =
      app.add_subcommand("significance", "approximate randomization test");
  significance->add_option("--a", a_path, "per-segment values A")->required();
  significance->add_option("--b", b_path, "per-segment values B")->required();
  significance->add_option("--iterations", iterations, "iterations");
  significance->add_option("--seed", seed, "test seed");

  CLI::App* loss_check =
      app.add_subcommand("loss-check", "loss values and gradient residuals");
  loss_check->add_option("--batch", data_path, "score batch jsonl")
      ->required();
  loss_check->add_option("--config", config_path, "loss config json");
  loss_check->add_option("--setting", setting_opt, "preset setting 1..6");
  loss_check->add_flag("--dcpo", use_dcpo, "check the reference-model loss");

  CLI::App* experiment =
      app.add_subcommand("experiment", "full multi-setting run");
  experiment->add_option("--config", config_path, "experiment config json");
  experiment->add_option("--seed", seed_opt, "seed override");
  experiment->add_option("--out", out_path, "output directory override");
  experiment->add_option("--setting", settings, "setting ids to run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(mine)) {
      return cmd_mine(corpus_path, dict_path, threshold, out_path);
    }
    if (app.got_subcommand(stats)) return cmd_stats(dict_path);
    if (app.got_subcommand(split)) {
      return cmd_split(data_path, non_term_path, val_size, test_size, seed,
                       out_path);
    }
    if (app.got_subcommand(synth)) return cmd_synth(synth_spec, out_path);
    if (app.got_subcommand(train)) {
      return cmd_train(data_path, non_term_path, dict_path, config_path,
                       init_path, seed_opt, out_path);
    }
    if (app.got_subcommand(translate)) {
      return cmd_translate(model_path, data_path, max_tokens, out_path);
    }
    if (app.got_subcommand(evaluate)) {
      return cmd_evaluate(model_path, data_path, dict_path, threshold,
                          max_tokens, out_path);
    }
    if (app.got_subcommand(significance)) {
      return cmd_significance(a_path, b_path, iterations, seed);
    }
    if (app.got_subcommand(loss_check)) {
      return cmd_loss_check(data_path, config_path, setting_opt, use_dcpo);
    }
    if (app.got_subcommand(experiment)) {
      return cmd_experiment(config_path, seed_opt, out_path, settings);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}
