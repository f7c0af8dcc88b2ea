#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "termpref/mining.hpp"
#include "termpref/synth.hpp"
#include "termpref/toymodel.hpp"
#include "termpref/trainer.hpp"

namespace termpref {

inline constexpr int kCheckpointFormatVersion = 1;

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Corpus files: one {"source", "mt", "pe"} object per line.
std::vector<SegmentTriple> load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(std::span<const SegmentTriple> triples,
                       const std::string& path);

// Dataset files: one example per line with fields x, y_w, y_l,
// source_term, w_variants, l_variants, delta_w, delta_l. Match spans are
// not persisted.
nlohmann::ordered_json example_to_json(const PreferenceExample& ex);
PreferenceExample example_from_json(const nlohmann::json& j);
std::vector<PreferenceExample> load_examples_jsonl(const std::string& path);
void save_examples_jsonl(std::span<const PreferenceExample> examples,
                         const std::string& path);

nlohmann::ordered_json to_json(const MiningReport& report);
nlohmann::ordered_json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j, SynthSpec defaults);

nlohmann::ordered_json to_json(const LossConfig& config);
LossConfig loss_config_from_json(const nlohmann::json& j, LossConfig defaults);

nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j,
                                   ModelConfig defaults);

nlohmann::ordered_json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j,
                                   TrainConfig defaults);

// FNV-1a over a canonical field dump; stable across runs and platforms.
std::uint64_t fnv1a64(std::string_view bytes);
std::string train_config_hash(const TrainConfig& config);

struct Checkpoint {
  ToyTranslator model;
  std::string config_hash;
};

void save_checkpoint(const ToyTranslator& model, const std::string& config_hash,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// One JSON object per evaluation record.
std::string history_to_jsonl(const TrainingHistory& history);

}  // namespace termpref
