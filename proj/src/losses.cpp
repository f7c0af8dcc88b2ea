#include "termpref/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace termpref {

namespace {

void add_mean_grad(std::vector<double>& grad, const SequenceScore& score,
                   bool masked, double outer) {
  // Derivative of the (masked) mean is uniform over the contributing
  // indices.
  if (masked) {
    const double g = outer / static_cast<double>(score.mask.size());
    for (const std::size_t i : score.mask) grad[i] += g;
  } else {
    const double g = outer / static_cast<double>(score.token_logprobs.size());
    for (double& v : grad) v += g;
  }
}

LossValue margin_loss(const SequenceScore& score_w,
                      const SequenceScore& score_l, double beta, bool masked) {
  if (beta <= 0.0) {
    throw std::invalid_argument("preference loss: beta must be positive");
  }
  const double margin =
      mean_logprob(score_w, masked) - mean_logprob(score_l, masked);
  const SmoothL1 sl = smooth_l1(margin, 1.0 / (2.0 * beta));
  LossValue out;
  out.value = sl.value;
  out.grad_w.assign(score_w.token_logprobs.size(), 0.0);
  out.grad_l.assign(score_l.token_logprobs.size(), 0.0);
  add_mean_grad(out.grad_w, score_w, masked, sl.deriv);
  add_mean_grad(out.grad_l, score_l, masked, -sl.deriv);
  return out;
}

LossValue sft_loss(const SequenceScore& score_w, double alpha, bool masked) {
  if (alpha < 0.0) {
    throw std::invalid_argument("sft loss: alpha must be non-negative");
  }
  LossValue out;
  out.value = -alpha * mean_logprob(score_w, masked);
  out.grad_w.assign(score_w.token_logprobs.size(), 0.0);
  add_mean_grad(out.grad_w, score_w, masked, -alpha);
  return out;
}

}  // namespace

void validate(const LossConfig& config) {
  if (!config.enable_po && !config.enable_mpo && !config.enable_sft &&
      !config.enable_msft) {
    throw std::invalid_argument("loss config: no component enabled");
  }
  if (config.beta <= 0.0) {
    throw std::invalid_argument("loss config: beta must be positive");
  }
  if (config.alpha < 0.0) {
    throw std::invalid_argument("loss config: alpha must be non-negative");
  }
}

LossConfig setting_config(int setting_id) {
  LossConfig c;
  switch (setting_id) {
    case 1: c.enable_msft = true; c.alpha = 1.0; break;
    case 2: c.enable_sft = c.enable_msft = true; c.alpha = 1.0; break;
    case 3: c.enable_sft = c.enable_po = true; c.alpha = 1.0; break;
    case 4: c.enable_msft = c.enable_mpo = true; c.alpha = 10.0; break;
    case 5: c.enable_sft = c.enable_mpo = true; c.alpha = 10.0; break;
    case 6:
      c.enable_sft = c.enable_msft = c.enable_po = c.enable_mpo = true;
      c.alpha = 10.0;
      break;
    default:
      throw std::invalid_argument("setting id must be 1..6, got " +
                                  std::to_string(setting_id));
  }
  return c;
}

LossConfig baseline_config() {
  LossConfig c;
  c.enable_sft = true;
  c.alpha = 1.0;
  return c;
}

double mean_logprob(const SequenceScore& score, bool restrict_to_mask) {
  const std::vector<double>& lp = score.token_logprobs;
  if (restrict_to_mask) {
    if (score.mask.empty()) {
      throw std::domain_error("mean_logprob: empty mask");
    }
    double sum = 0.0;
    for (const std::size_t i : score.mask) {
      if (i >= lp.size()) {
        throw std::out_of_range("mean_logprob: mask index " +
                                std::to_string(i) + " out of range for " +
                                std::to_string(lp.size()) + " tokens");
      }
      sum += lp[i];
    }
    return sum / static_cast<double>(score.mask.size());
  }
  if (lp.empty()) {
    throw std::domain_error("mean_logprob: empty sequence");
  }
  double sum = 0.0;
  for (const double v : lp) sum += v;
  return sum / static_cast<double>(lp.size());
}

SmoothL1 smooth_l1(double x, double y) {
  const double d = x - y;
  if (std::abs(d) < 1.0) {
    return SmoothL1{0.5 * d * d, d};
  }
  return SmoothL1{std::abs(d) - 0.5, d > 0.0 ? 1.0 : -1.0};
}

LossValue loss_po(const SequenceScore& score_w, const SequenceScore& score_l,
                  double beta) {
  return margin_loss(score_w, score_l, beta, /*masked=*/false);
}

LossValue loss_mpo(const SequenceScore& score_w, const SequenceScore& score_l,
                   double beta) {
  return margin_loss(score_w, score_l, beta, /*masked=*/true);
}

LossValue loss_sft(const SequenceScore& score_w, double alpha) {
  return sft_loss(score_w, alpha, /*masked=*/false);
}

LossValue loss_msft(const SequenceScore& score_w, double alpha) {
  return sft_loss(score_w, alpha, /*masked=*/true);
}

LossValue loss_dcpo(const SequenceScore& score_w, const SequenceScore& score_l,
                    double beta) {
  if (beta <= 0.0) {
    throw std::invalid_argument("loss_dcpo: beta must be positive");
  }
  if (!score_w.ref_token_logprobs || !score_l.ref_token_logprobs) {
    throw std::domain_error("loss_dcpo: reference log-probabilities missing");
  }
  if (score_w.ref_token_logprobs->size() != score_w.token_logprobs.size() ||
      score_l.ref_token_logprobs->size() != score_l.token_logprobs.size()) {
    throw std::invalid_argument(
        "loss_dcpo: reference length differs from sequence length");
  }
  const auto ref_mean = [](const SequenceScore& s) {
    SequenceScore r;
    r.token_logprobs = *s.ref_token_logprobs;
    return mean_logprob(r, false);
  };
  const double mw = mean_logprob(score_w, false);
  const double ml = mean_logprob(score_l, false);
  const double d = (mw - ref_mean(score_w)) - (ml - ref_mean(score_l)) -
                   1.0 / (2.0 * beta);

  LossValue out;
  out.value = -mw + d * d;
  out.grad_w.assign(score_w.token_logprobs.size(), 0.0);
  out.grad_l.assign(score_l.token_logprobs.size(), 0.0);
  // The reference model is frozen, so only the current-model means carry
  // gradient.
  add_mean_grad(out.grad_w, score_w, false, -1.0 + 2.0 * d);
  add_mean_grad(out.grad_l, score_l, false, -2.0 * d);
  return out;
}

LossValue loss_term(const SequenceScore& score_w, const SequenceScore& score_l,
                    const LossConfig& config) {
  validate(config);
  LossValue out;
  out.grad_w.assign(score_w.token_logprobs.size(), 0.0);
  out.grad_l.assign(score_l.token_logprobs.size(), 0.0);
  const auto accumulate = [&out](const LossValue& part, double weight) {
    out.value += weight * part.value;
    for (std::size_t i = 0; i < part.grad_w.size(); ++i) {
      out.grad_w[i] += weight * part.grad_w[i];
    }
    for (std::size_t i = 0; i < part.grad_l.size(); ++i) {
      out.grad_l[i] += weight * part.grad_l[i];
    }
  };
  if (config.enable_po) accumulate(loss_po(score_w, score_l, config.beta), 1.0);
  if (config.enable_mpo) {
    accumulate(loss_mpo(score_w, score_l, config.beta), 1.0);
  }
  // alpha scales the SFT group once, so the components enter at alpha 1.
  if (config.enable_sft) accumulate(loss_sft(score_w, 1.0), config.alpha);
  if (config.enable_msft) accumulate(loss_msft(score_w, 1.0), config.alpha);
  return out;
}

}  // namespace termpref
