#include "termpref/toymodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "termpref/rng.hpp"
#include "termpref/tokenize.hpp"

namespace termpref {

namespace {

constexpr std::size_t kBosId = 0;
constexpr std::size_t kEosId = 1;

std::vector<std::size_t> word_ids(const ToyTranslator& model,
                                  std::string_view text) {
  std::vector<std::size_t> ids;
  for (const Token& t : whitespace_tokens(text)) {
    ids.push_back(model.token_id(t.text));
  }
  return ids;
}

}  // namespace

// Parameter block offsets; validated against the flat vector size below.
struct ModelAccess {
  const std::size_t v, d, h, k;
  const std::size_t e_off = 0;
  const std::size_t w1_off, b1_off, w2_off, b2_off, total;

  explicit ModelAccess(const ToyTranslator& m)
      : v(m.vocab_.size()),
        d(m.config_.embed_dim),
        h(m.config_.hidden_dim),
        k(m.config_.context_window),
        w1_off(v * d),
        b1_off(w1_off + h * (k + 1) * d),
        w2_off(b1_off + h),
        b2_off(w2_off + v * h),
        total(b2_off + v) {}

  std::size_t input_dim() const { return (k + 1) * d; }
  std::size_t embed(std::size_t id) const { return e_off + id * d; }
  std::size_t w1_row(std::size_t j) const { return w1_off + j * input_dim(); }
  std::size_t w2_row(std::size_t j) const { return w2_off + j * h; }

  // Mean-pooled source embedding; zeros for an empty source.
  std::vector<double> pool_source(std::span<const double> p,
                                  std::span<const std::size_t> src) const {
    std::vector<double> s(d, 0.0);
    if (src.empty()) return s;
    for (const std::size_t id : src) {
      const double* e = p.data() + embed(id);
      for (std::size_t i = 0; i < d; ++i) s[i] += e[i];
    }
    for (double& x : s) x /= static_cast<double>(src.size());
    return s;
  }

  // Input vector [pooled source | context embeddings, oldest first].
  // context holds the last k target ids, bos-padded.
  std::vector<double> make_input(std::span<const double> p,
                                 std::span<const double> s,
                                 std::span<const std::size_t> context) const {
    std::vector<double> in(input_dim());
    std::copy(s.begin(), s.end(), in.begin());
    for (std::size_t j = 0; j < k; ++j) {
      const double* e = p.data() + embed(context[j]);
      std::copy(e, e + d, in.begin() + d + j * d);
    }
    return in;
  }

  void hidden(std::span<const double> p, std::span<const double> in,
              std::span<double> out_h) const {
    for (std::size_t j = 0; j < h; ++j) {
      const double* row = p.data() + w1_row(j);
      double acc = p[b1_off + j];
      for (std::size_t i = 0; i < in.size(); ++i) acc += row[i] * in[i];
      out_h[j] = std::tanh(acc);
    }
  }

  // Log-softmax of the output layer.
  void logits(std::span<const double> p, std::span<const double> hh,
              std::span<double> out_logp) const {
    for (std::size_t j = 0; j < v; ++j) {
      const double* row = p.data() + w2_row(j);
      double acc = p[b2_off + j];
      for (std::size_t i = 0; i < h; ++i) acc += row[i] * hh[i];
      out_logp[j] = acc;
    }
    const double m = *std::max_element(out_logp.begin(), out_logp.end());
    double sum = 0.0;
    for (const double z : out_logp) sum += std::exp(z - m);
    const double lse = m + std::log(sum);
    for (double& z : out_logp) z -= lse;
  }
};

std::vector<std::string> make_vocabulary(std::span<const std::string> words) {
  std::vector<std::string> vocab{std::string(kBosToken),
                                 std::string(kEosToken)};
  std::vector<std::string> sorted(words.begin(), words.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::string& w : sorted) {
    if (w.empty()) {
      throw std::invalid_argument("make_vocabulary: empty word");
    }
    if (w == kBosToken || w == kEosToken) continue;
    vocab.push_back(std::move(w));
  }
  return vocab;
}

ToyTranslator::ToyTranslator(std::vector<std::string> vocabulary,
                             ModelConfig config)
    : vocab_(std::move(vocabulary)), config_(config) {
  if (vocab_.size() < 3 || vocab_[kBosId] != kBosToken ||
      vocab_[kEosId] != kEosToken) {
    throw std::invalid_argument(
        "ToyTranslator: vocabulary must start with the begin/end markers "
        "and contain at least one word");
  }
  // token_id binary-searches the tail, so it must be strictly sorted and
  // free of the marker strings (make_vocabulary guarantees this).
  for (std::size_t i = 2; i < vocab_.size(); ++i) {
    if (vocab_[i].empty() || vocab_[i] == kBosToken || vocab_[i] == kEosToken ||
        (i > 2 && vocab_[i - 1] >= vocab_[i])) {
      throw std::invalid_argument(
          "ToyTranslator: vocabulary words must be sorted, unique, non-empty "
          "and distinct from the markers");
    }
  }
  if (config_.embed_dim == 0 || config_.hidden_dim == 0 ||
      config_.context_window == 0) {
    throw std::invalid_argument("ToyTranslator: zero model dimension");
  }
  params_.assign(ModelAccess(*this).total, 0.0);
}

void ToyTranslator::randomize(std::uint64_t seed, double scale) {
  Rng rng(Rng::mix(seed, 0x6D6F64656C));
  for (double& p : params_) p = scale * rng.normal();
}

std::size_t ToyTranslator::token_id(std::string_view token) const {
  // Vocabulary is [markers | sorted words], so binary search the tail.
  const auto begin = vocab_.begin() + 2;
  const auto it = std::lower_bound(begin, vocab_.end(), token);
  if (it != vocab_.end() && *it == token) {
    return static_cast<std::size_t>(it - vocab_.begin());
  }
  if (token == kBosToken) return kBosId;
  if (token == kEosToken) return kEosId;
  throw std::invalid_argument("out-of-vocabulary token: " +
                              std::string(token));
}

SequenceScore token_logprobs(const ToyTranslator& model, std::string_view x,
                             std::string_view y) {
  const ModelAccess acc(model);
  const std::span<const double> p = model.parameters();
  const std::vector<std::size_t> src = word_ids(model, x);
  std::vector<std::size_t> targets = word_ids(model, y);
  targets.push_back(kEosId);

  const std::vector<double> s = acc.pool_source(p, src);
  std::vector<std::size_t> context(acc.k, kBosId);
  std::vector<double> h(acc.h), logp(acc.v);
  SequenceScore score;
  for (const std::size_t target : targets) {
    const std::vector<double> in = acc.make_input(p, s, context);
    acc.hidden(p, in, h);
    acc.logits(p, h, logp);
    score.token_logprobs.push_back(logp[target]);
    std::rotate(context.begin(), context.begin() + 1, context.end());
    context.back() = target;
  }
  return score;
}

std::string greedy_decode(const ToyTranslator& model, std::string_view x,
                          std::size_t max_tokens) {
  const ModelAccess acc(model);
  const std::span<const double> p = model.parameters();
  const std::vector<std::size_t> src = word_ids(model, x);
  const std::vector<double> s = acc.pool_source(p, src);

  std::vector<std::size_t> context(acc.k, kBosId);
  std::vector<double> h(acc.h), logp(acc.v);
  std::string out;
  for (std::size_t t = 0; t < max_tokens; ++t) {
    const std::vector<double> in = acc.make_input(p, s, context);
    acc.hidden(p, in, h);
    acc.logits(p, h, logp);
    std::size_t best = kEosId;
    for (std::size_t j = 0; j < acc.v; ++j) {
      if (j == kBosId) continue;
      if (logp[j] > logp[best]) best = j;
    }
    if (best == kEosId) break;
    if (!out.empty()) out += ' ';
    out += model.vocabulary()[best];
    std::rotate(context.begin(), context.begin() + 1, context.end());
    context.back() = best;
  }
  return out;
}

void accumulate_sequence_grad(const ToyTranslator& model, std::string_view x,
                              std::string_view y,
                              std::span<const double> token_grad,
                              std::span<double> grad) {
  const ModelAccess acc(model);
  const std::span<const double> p = model.parameters();
  if (grad.size() != acc.total) {
    throw std::invalid_argument("accumulate_sequence_grad: gradient size " +
                                std::to_string(grad.size()) + ", expected " +
                                std::to_string(acc.total));
  }
  const std::vector<std::size_t> src = word_ids(model, x);
  std::vector<std::size_t> targets = word_ids(model, y);
  targets.push_back(kEosId);
  if (token_grad.size() != targets.size()) {
    throw std::invalid_argument(
        "accumulate_sequence_grad: token gradient length " +
        std::to_string(token_grad.size()) + ", expected " +
        std::to_string(targets.size()));
  }

  const std::vector<double> s = acc.pool_source(p, src);
  std::vector<std::size_t> context(acc.k, kBosId);
  std::vector<double> h(acc.h), logp(acc.v);
  std::vector<double> dz(acc.v), dh(acc.h), din(acc.input_dim());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const std::vector<double> in = acc.make_input(p, s, context);
    acc.hidden(p, in, h);
    acc.logits(p, h, logp);
    const double g = token_grad[t];
    if (g != 0.0) {
      // d logp[target] / d z_j = 1[j == target] - softmax_j.
      for (std::size_t j = 0; j < acc.v; ++j) dz[j] = -g * std::exp(logp[j]);
      dz[targets[t]] += g;

      std::fill(dh.begin(), dh.end(), 0.0);
      for (std::size_t j = 0; j < acc.v; ++j) {
        const double gz = dz[j];
        if (gz == 0.0) continue;
        grad[acc.b2_off + j] += gz;
        const double* w2 = p.data() + acc.w2_row(j);
        double* gw2 = grad.data() + acc.w2_row(j);
        for (std::size_t i = 0; i < acc.h; ++i) {
          gw2[i] += gz * h[i];
          dh[i] += gz * w2[i];
        }
      }

      std::fill(din.begin(), din.end(), 0.0);
      for (std::size_t j = 0; j < acc.h; ++j) {
        const double dpre = dh[j] * (1.0 - h[j] * h[j]);
        if (dpre == 0.0) continue;
        grad[acc.b1_off + j] += dpre;
        const double* w1 = p.data() + acc.w1_row(j);
        double* gw1 = grad.data() + acc.w1_row(j);
        for (std::size_t i = 0; i < din.size(); ++i) {
          gw1[i] += dpre * in[i];
          din[i] += dpre * w1[i];
        }
      }

      if (!src.empty()) {
        const double inv = 1.0 / static_cast<double>(src.size());
        for (const std::size_t id : src) {
          double* ge = grad.data() + acc.embed(id);
          for (std::size_t i = 0; i < acc.d; ++i) ge[i] += inv * din[i];
        }
      }
      for (std::size_t j = 0; j < acc.k; ++j) {
        double* ge = grad.data() + acc.embed(context[j]);
        const double* part = din.data() + acc.d + j * acc.d;
        for (std::size_t i = 0; i < acc.d; ++i) ge[i] += part[i];
      }
    }
    std::rotate(context.begin(), context.begin() + 1, context.end());
    context.back() = targets[t];
  }
}

}  // namespace termpref
