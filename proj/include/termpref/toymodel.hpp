#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "termpref/losses.hpp"

namespace termpref {

inline constexpr std::string_view kBosToken = "<bos>";
inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::size_t kDefaultMaxNewTokens = 64;

// Begin/end markers followed by the sorted, deduplicated words.
std::vector<std::string> make_vocabulary(std::span<const std::string> words);

struct ModelConfig {
  std::size_t embed_dim = 24;
  std::size_t hidden_dim = 96;
  std::size_t context_window = 3;

  bool operator==(const ModelConfig&) const = default;
};

// Single-hidden-layer autoregressive word model. The mean-pooled source
// embedding is concatenated with the embeddings of the last
// context_window target tokens (left-padded with <bos>); a tanh hidden
// layer feeds a softmax over the vocabulary. Parameters live in one flat
// vector laid out [E | W1 | b1 | W2 | b2].
class ToyTranslator {
 public:
  // Zero parameters: every next-token distribution starts uniform.
  ToyTranslator(std::vector<std::string> vocabulary, ModelConfig config);

  void randomize(std::uint64_t seed, double scale = 0.1);

  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
  const ModelConfig& config() const noexcept { return config_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  // Throws std::invalid_argument naming the token when absent.
  std::size_t token_id(std::string_view token) const;

  bool operator==(const ToyTranslator&) const = default;

 private:
  friend struct ModelAccess;
  std::vector<std::string> vocab_;
  ModelConfig config_;
  std::vector<double> params_;
};

// Per-token conditional log-probabilities of y given x under teacher
// forcing. Scored positions are the whitespace words of y followed by the
// end marker, so the output length is word count + 1; mask and reference
// fields are left empty.
SequenceScore token_logprobs(const ToyTranslator& model, std::string_view x,
                             std::string_view y);

// Argmax decoding (begin marker excluded from the argmax) until the end
// marker or max_tokens words; words are joined with single spaces.
std::string greedy_decode(const ToyTranslator& model, std::string_view x,
                          std::size_t max_tokens = kDefaultMaxNewTokens);

// Adds d(sum_t token_grad[t] * logprob_t)/d(parameters) into grad.
// token_grad must have length word count of y + 1, grad the full
// parameter count.
void accumulate_sequence_grad(const ToyTranslator& model, std::string_view x,
                              std::string_view y,
                              std::span<const double> token_grad,
                              std::span<double> grad);

}  // namespace termpref
