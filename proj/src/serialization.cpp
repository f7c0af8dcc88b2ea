#include "termpref/serialization.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "termpref/tokenize.hpp"
#include "termpref/unicode.hpp"

namespace termpref {

namespace {

// Calls fn(line_number, json) for every non-blank line.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": invalid json: " + e.what());
    }
    try {
      fn(line_no, j);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
}

std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw std::runtime_error(std::string("missing string field '") + key +
                             "'");
  }
  return j.at(key).get<std::string>();
}

std::vector<std::string> optional_string_array(const nlohmann::json& j,
                                               const char* key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) {
    throw std::runtime_error(std::string("field '") + key +
                             "' must be an array");
  }
  return j.at(key).get<std::vector<std::string>>();
}

std::vector<std::size_t> optional_index_array(const nlohmann::json& j,
                                              const char* key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) {
    throw std::runtime_error(std::string("field '") + key +
                             "' must be an array");
  }
  return j.at(key).get<std::vector<std::size_t>>();
}

void check_deltas(const std::vector<std::size_t>& delta,
                  const std::string& text, const char* name) {
  const std::size_t n_tokens = whitespace_tokens(text).size();
  for (const std::size_t i : delta) {
    if (i >= n_tokens) {
      throw std::runtime_error(std::string(name) + " index " +
                               std::to_string(i) + " out of range for " +
                               std::to_string(n_tokens) + " tokens");
    }
  }
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SegmentTriple> load_corpus_jsonl(const std::string& path) {
  std::vector<SegmentTriple> triples;
  for_each_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
    SegmentTriple t;
    t.source = require_string(j, "source");
    t.mt = require_string(j, "mt");
    t.pe = require_string(j, "pe");
    if (t.source.empty() || t.mt.empty() || t.pe.empty()) {
      throw std::runtime_error("segment fields must be non-empty");
    }
    triples.push_back(std::move(t));
  });
  return triples;
}

void save_corpus_jsonl(std::span<const SegmentTriple> triples,
                       const std::string& path) {
  std::string out;
  for (const SegmentTriple& t : triples) {
    nlohmann::ordered_json j;
    j["source"] = t.source;
    j["mt"] = t.mt;
    j["pe"] = t.pe;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

nlohmann::ordered_json example_to_json(const PreferenceExample& ex) {
  nlohmann::ordered_json j;
  j["x"] = ex.x;
  j["y_w"] = ex.y_w;
  j["y_l"] = ex.y_l;
  j["source_term"] = ex.source_term;
  j["w_variants"] = ex.w_variants;
  j["l_variants"] = ex.l_variants;
  j["delta_w"] = ex.delta_w;
  j["delta_l"] = ex.delta_l;
  return j;
}

PreferenceExample example_from_json(const nlohmann::json& j) {
  PreferenceExample ex;
  ex.x = require_string(j, "x");
  ex.y_w = require_string(j, "y_w");
  ex.y_l = require_string(j, "y_l");
  if (ex.x.empty() || ex.y_w.empty() || ex.y_l.empty()) {
    throw std::runtime_error("example fields x, y_w, y_l must be non-empty");
  }
  if (j.contains("source_term")) {
    ex.source_term = require_string(j, "source_term");
  }
  ex.w_variants = optional_string_array(j, "w_variants");
  ex.l_variants = optional_string_array(j, "l_variants");
  ex.delta_w = optional_index_array(j, "delta_w");
  ex.delta_l = optional_index_array(j, "delta_l");
  check_deltas(ex.delta_w, ex.y_w, "delta_w");
  check_deltas(ex.delta_l, ex.y_l, "delta_l");
  if (ex.is_term()) {
    if (ex.w_variants.empty() || ex.l_variants.empty() ||
        ex.delta_w.empty() || ex.delta_l.empty()) {
      throw std::runtime_error(
          "term example needs variants and non-empty delta sets");
    }
    for (const std::string& w : ex.w_variants) {
      for (const std::string& l : ex.l_variants) {
        if (uni::fold(w) == uni::fold(l)) {
          throw std::runtime_error("variant '" + w +
                                   "' appears on both sides");
        }
      }
    }
  }
  return ex;
}

std::vector<PreferenceExample> load_examples_jsonl(const std::string& path) {
  std::vector<PreferenceExample> examples;
  for_each_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
    examples.push_back(example_from_json(j));
  });
  return examples;
}

void save_examples_jsonl(std::span<const PreferenceExample> examples,
                         const std::string& path) {
  std::string out;
  for (const PreferenceExample& ex : examples) {
    out += example_to_json(ex).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

nlohmann::ordered_json to_json(const MiningReport& report) {
  nlohmann::ordered_json j;
  j["total"] = report.total;
  j["accepted"] = report.accepted;
  nlohmann::ordered_json rejected = nlohmann::ordered_json::object();
  for (const auto& [reason, count] : report.rejected) rejected[reason] = count;
  j["rejected"] = rejected;
  return j;
}

nlohmann::ordered_json to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["n_source_terms"] = spec.n_source_terms;
  j["variants_per_term"] = spec.variants_per_term;
  j["n_context_cues"] = spec.n_context_cues;
  j["corpus_size"] = spec.corpus_size;
  j["seed"] = spec.seed;
  return j;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j, SynthSpec defaults) {
  SynthSpec s = defaults;
  s.n_source_terms = j.value("n_source_terms", s.n_source_terms);
  s.variants_per_term = j.value("variants_per_term", s.variants_per_term);
  s.n_context_cues = j.value("n_context_cues", s.n_context_cues);
  s.corpus_size = j.value("corpus_size", s.corpus_size);
  s.seed = j.value("seed", s.seed);
  return s;
}

nlohmann::ordered_json to_json(const LossConfig& config) {
  nlohmann::ordered_json j;
  j["po"] = config.enable_po;
  j["mpo"] = config.enable_mpo;
  j["sft"] = config.enable_sft;
  j["msft"] = config.enable_msft;
  j["alpha"] = config.alpha;
  j["beta"] = config.beta;
  return j;
}

LossConfig loss_config_from_json(const nlohmann::json& j, LossConfig defaults) {
  LossConfig c = defaults;
  c.enable_po = j.value("po", c.enable_po);
  c.enable_mpo = j.value("mpo", c.enable_mpo);
  c.enable_sft = j.value("sft", c.enable_sft);
  c.enable_msft = j.value("msft", c.enable_msft);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  return c;
}

nlohmann::ordered_json to_json(const ModelConfig& config) {
  nlohmann::ordered_json j;
  j["embed_dim"] = config.embed_dim;
  j["hidden_dim"] = config.hidden_dim;
  j["context_window"] = config.context_window;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j,
                                   ModelConfig defaults) {
  ModelConfig c = defaults;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.context_window = j.value("context_window", c.context_window);
  return c;
}

nlohmann::ordered_json to_json(const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["max_epochs"] = config.max_epochs;
  j["learning_rate"] = config.learning_rate;
  j["batch_size"] = config.batch_size;
  j["early_stopping_metric"] = to_string(config.early_stopping_metric);
  j["patience"] = config.patience;
  j["eval_every"] = config.eval_every;
  j["seed"] = config.seed;
  j["loss"] = to_json(config.loss);
  j["max_grad_norm"] = config.max_grad_norm;
  j["max_new_tokens"] = config.max_new_tokens;
  j["match_threshold"] = config.match_threshold;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j,
                                   TrainConfig defaults) {
  TrainConfig c = defaults;
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("early_stopping_metric")) {
    const std::string m = j.at("early_stopping_metric").get<std::string>();
    if (m == "term-accuracy") {
      c.early_stopping_metric = StopMetric::term_accuracy;
    } else if (m == "held-out-loss") {
      c.early_stopping_metric = StopMetric::held_out_loss;
    } else {
      throw std::runtime_error("unknown early stopping metric: " + m);
    }
  }
  c.patience = j.value("patience", c.patience);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.seed = j.value("seed", c.seed);
  if (j.contains("loss")) c.loss = loss_config_from_json(j.at("loss"), c.loss);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
  c.match_threshold = j.value("match_threshold", c.match_threshold);
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string train_config_hash(const TrainConfig& config) {
  const std::uint64_t h = fnv1a64(to_json(config).dump());
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (std::size_t i = 0; i < 16; ++i) {
    out[15 - i] = hex[(h >> (4 * i)) & 0xF];
  }
  return out;
}

void save_checkpoint(const ToyTranslator& model, const std::string& config_hash,
                     const std::string& path) {
  nlohmann::ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config_hash"] = config_hash;
  nlohmann::ordered_json m;
  m["embed_dim"] = model.config().embed_dim;
  m["hidden_dim"] = model.config().hidden_dim;
  m["context_window"] = model.config().context_window;
  m["vocabulary"] = model.vocabulary();
  const std::span<const double> p = model.parameters();
  m["parameters"] = std::vector<double>(p.begin(), p.end());
  j["model"] = std::move(m);
  write_text_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint parse error in " + path + ": " +
                             e.what());
  }
  const int version = j.value("format_version", -1);
  if (version != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint " + path +
                             " has unsupported format version " +
                             std::to_string(version));
  }
  const nlohmann::json& m = j.at("model");
  ModelConfig config;
  config.embed_dim = m.at("embed_dim").get<std::size_t>();
  config.hidden_dim = m.at("hidden_dim").get<std::size_t>();
  config.context_window = m.at("context_window").get<std::size_t>();
  ToyTranslator model(m.at("vocabulary").get<std::vector<std::string>>(),
                      config);
  const std::vector<double> params =
      m.at("parameters").get<std::vector<double>>();
  if (params.size() != model.parameter_count()) {
    throw std::runtime_error(
        "checkpoint " + path + " has " + std::to_string(params.size()) +
        " parameters, expected " + std::to_string(model.parameter_count()));
  }
  std::copy(params.begin(), params.end(), model.parameters().begin());
  return Checkpoint{std::move(model), j.value("config_hash", std::string())};
}

std::string history_to_jsonl(const TrainingHistory& history) {
  std::string out;
  for (const EvalRecord& e : history.evals) {
    nlohmann::ordered_json j;
    j["step"] = e.step;
    j["metric"] = e.metric;
    j["improved"] = e.improved;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace termpref
