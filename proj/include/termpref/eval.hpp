#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termpref/dictionary.hpp"
#include "termpref/matching.hpp"
#include "termpref/mining.hpp"

namespace termpref {

enum class TermClass {
  exact,       // hypothesis matches a PE variant
  mt_repeat,   // no PE variant, but an MT variant
  other_valid, // some other dictionary variant
  none,
};

std::string to_string(TermClass c);

struct TermEvalRow {
  std::size_t segment = 0;
  std::optional<std::string> matched_variant;
  TermClass classification = TermClass::none;
};

struct TermEvalResult {
  double exact_accuracy = 0.0;
  double valid_rate = 0.0;      // any dictionary variant present
  double mt_repeat_rate = 0.0;
  std::vector<TermEvalRow> per_example;
};

// Classifies each hypothesis against its example's term variants (matches
// found via fuzzy search plus containment resolution). Precedence: exact
// beats mt-repeat beats other-valid. matched_variant is the smallest
// display variant in the set that triggered the classification. All
// examples must be term examples; lengths must agree.
TermEvalResult term_eval(std::span<const std::string> hypotheses,
                         std::span<const PreferenceExample> examples,
                         const TermDictionary& dict,
                         double threshold = kDefaultMatchThreshold);

// Character n-gram F-score in [0, 100]: whitespace is stripped, orders
// where either side has no n-grams are skipped, precision/recall are
// macro-averaged over the remaining orders. 0 when no order is usable or
// the F denominator vanishes.
double chrf(std::string_view hypothesis, std::string_view reference,
            std::size_t max_n = 6, double beta = 2.0);

// Arithmetic mean of segment scores. Empty input: std::domain_error.
double corpus_chrf(
    std::span<const std::pair<std::string, std::string>> hyp_ref_pairs,
    std::size_t max_n = 6, double beta = 2.0);

struct SignificanceResult {
  double p_value = 1.0;
  std::size_t iterations = 0;
  double observed_delta = 0.0;
  std::uint64_t seed = 0;
};

using Aggregate = std::function<double(std::span<const double>)>;

double mean_aggregate(std::span<const double> values);

// Paired approximate randomization: each iteration swaps a/b per segment
// with probability one half and counts pseudo-deltas >= the observed
// |aggregate(a) - aggregate(b)|; p = (count + 1) / (iterations + 1).
// Iteration i draws from an independent stream derived from (seed, i+1),
// so results do not depend on evaluation order.
SignificanceResult approx_randomization_test(std::span<const double> a,
                                             std::span<const double> b,
                                             const Aggregate& aggregate,
                                             std::size_t iterations,
                                             std::uint64_t seed);

}  // namespace termpref
