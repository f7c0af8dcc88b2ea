#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace termpref {

// Per-token log-probabilities of one target sequence under the current
// model, optionally paired with the frozen reference model's scores.
// mask holds the term-token indices (sorted, unique).
struct SequenceScore {
  std::vector<double> token_logprobs;
  std::optional<std::vector<double>> ref_token_logprobs;
  std::vector<std::size_t> mask;
};

// Indicator switches and weights of the combined objective. alpha scales
// the SFT group once; beta sets the target margin 1/(2*beta).
struct LossConfig {
  bool enable_po = false;
  bool enable_mpo = false;
  bool enable_sft = false;
  bool enable_msft = false;
  double alpha = 1.0;
  double beta = 0.25;
};

// Throws std::invalid_argument when no indicator is set, beta <= 0, or
// alpha < 0.
void validate(const LossConfig& config);

// The six preset component mixes; throws std::invalid_argument outside 1..6.
//   1: mSFT (alpha 1)        4: mSFT + mPO (alpha 10)
//   2: SFT + mSFT (alpha 1)  5: SFT + mPO (alpha 10)
//   3: SFT + PO (alpha 1)    6: all four (alpha 10)
LossConfig setting_config(int setting_id);
// SFT only, alpha 1.
LossConfig baseline_config();

struct LossValue {
  double value = 0.0;
  std::vector<double> grad_w;  // d value / d token_logprob of y_w
  std::vector<double> grad_l;  // d value / d token_logprob of y_l
};

struct SmoothL1 {
  double value = 0.0;
  double deriv = 0.0;  // d value / d x
};

// Arithmetic mean of token log-probs, i.e. the log of the geometric-mean
// sequence probability; with restrict_to_mask, mean over mask indices only.
// Empty sequence or empty mask: std::domain_error. Mask index out of
// range: std::out_of_range.
double mean_logprob(const SequenceScore& score, bool restrict_to_mask);

// 0.5*(x-y)^2 for |x-y| < 1, |x-y| - 0.5 otherwise; deriv is x-y in the
// quadratic region and sign(x-y) in the linear region (C1 at the boundary).
SmoothL1 smooth_l1(double x, double y);

// smooth_l1(mean(w) - mean(l), 1/(2*beta)) over full sequences.
LossValue loss_po(const SequenceScore& score_w, const SequenceScore& score_l,
                  double beta);
// Same with means restricted to the masks; gradient lives on masked
// indices only.
LossValue loss_mpo(const SequenceScore& score_w, const SequenceScore& score_l,
                   double beta);
// -alpha * mean(w); grad_l stays empty.
LossValue loss_sft(const SequenceScore& score_w, double alpha);
// -alpha * masked mean(w); grad_l stays empty.
LossValue loss_msft(const SequenceScore& score_w, double alpha);

// Reference-model variant with a squared (not smooth-L1) margin term:
// -mean(w) + ((mean(w)-ref(w)) - (mean(l)-ref(l)) - 1/(2*beta))^2.
// Missing ref_token_logprobs: std::domain_error.
LossValue loss_dcpo(const SequenceScore& score_w, const SequenceScore& score_l,
                    double beta);

// Indicator-weighted sum; the SFT components enter at alpha 1 and the
// whole SFT group is scaled by config.alpha once.
LossValue loss_term(const SequenceScore& score_w, const SequenceScore& score_l,
                    const LossConfig& config);

}  // namespace termpref
