#include "termpref/eval.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "termpref/rng.hpp"
#include "termpref/unicode.hpp"

namespace termpref {

namespace {

// Smallest display variant from `candidates` whose folded form is in
// `triggering`.
std::optional<std::string> smallest_in(
    const std::vector<std::string>& candidates,
    const std::set<std::string>& triggering) {
  std::optional<std::string> best;
  for (const std::string& v : candidates) {
    if (!triggering.count(uni::fold(v))) continue;
    if (!best || v < *best) best = v;
  }
  return best;
}

std::u32string strip_whitespace(std::string_view text) {
  std::u32string out;
  for (const char32_t c : uni::decode_utf8(text)) {
    if (!uni::is_space(c)) out.push_back(c);
  }
  return out;
}

}  // namespace

std::string to_string(TermClass c) {
  switch (c) {
    case TermClass::exact: return "exact";
    case TermClass::mt_repeat: return "mt-repeat";
    case TermClass::other_valid: return "other-valid";
    case TermClass::none: return "none";
  }
  throw std::logic_error("unknown term class");
}

TermEvalResult term_eval(std::span<const std::string> hypotheses,
                         std::span<const PreferenceExample> examples,
                         const TermDictionary& dict, double threshold) {
  if (hypotheses.size() != examples.size()) {
    throw std::invalid_argument(
        "term_eval: " + std::to_string(hypotheses.size()) +
        " hypotheses vs " + std::to_string(examples.size()) + " examples");
  }
  TermEvalResult result;
  std::size_t n_exact = 0, n_valid = 0, n_repeat = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const PreferenceExample& ex = examples[i];
    if (!ex.is_term()) {
      throw std::invalid_argument("term_eval: example " + std::to_string(i) +
                                  " has no source term");
    }
    const std::vector<std::string>* variants = dict.find(ex.source_term);
    if (!variants) {
      throw std::invalid_argument("term_eval: term not in dictionary: " +
                                  ex.source_term);
    }
    const std::vector<FuzzyMatch> matches = resolve_containment(
        find_term_matches(hypotheses[i], *variants, threshold));
    std::set<std::string> matched;
    std::vector<std::string> matched_display;
    for (const FuzzyMatch& m : matches) {
      matched.insert(uni::fold(m.variant));
      matched_display.push_back(m.variant);
    }

    TermEvalRow row;
    row.segment = i;
    if (auto v = smallest_in(ex.w_variants, matched)) {
      row.classification = TermClass::exact;
      row.matched_variant = std::move(v);
      ++n_exact;
      ++n_valid;
    } else if (auto v2 = smallest_in(ex.l_variants, matched)) {
      row.classification = TermClass::mt_repeat;
      row.matched_variant = std::move(v2);
      ++n_repeat;
      ++n_valid;
    } else if (!matched.empty()) {
      row.classification = TermClass::other_valid;
      std::sort(matched_display.begin(), matched_display.end());
      row.matched_variant = matched_display.front();
      ++n_valid;
    }
    result.per_example.push_back(std::move(row));
  }
  if (!examples.empty()) {
    const double n = static_cast<double>(examples.size());
    result.exact_accuracy = static_cast<double>(n_exact) / n;
    result.valid_rate = static_cast<double>(n_valid) / n;
    result.mt_repeat_rate = static_cast<double>(n_repeat) / n;
  }
  return result;
}

double chrf(std::string_view hypothesis, std::string_view reference,
            std::size_t max_n, double beta) {
  if (max_n < 1) throw std::invalid_argument("chrf: max_n must be >= 1");
  const std::u32string hyp = strip_whitespace(hypothesis);
  const std::u32string ref = strip_whitespace(reference);

  double prec_sum = 0.0, rec_sum = 0.0;
  std::size_t effective_orders = 0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (hyp.size() < n || ref.size() < n) continue;
    std::map<std::u32string, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ref_counts[ref.substr(i, n)] += 1;
    }
    std::map<std::u32string, std::size_t> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      hyp_counts[hyp.substr(i, n)] += 1;
    }
    std::size_t matched = 0;
    for (const auto& [gram, count] : hyp_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    prec_sum += static_cast<double>(matched) /
                static_cast<double>(hyp.size() - n + 1);
    rec_sum += static_cast<double>(matched) /
               static_cast<double>(ref.size() - n + 1);
    ++effective_orders;
  }
  if (effective_orders == 0) return 0.0;
  const double p = prec_sum / static_cast<double>(effective_orders);
  const double r = rec_sum / static_cast<double>(effective_orders);
  const double denom = beta * beta * p + r;
  if (denom == 0.0) return 0.0;
  return 100.0 * (1.0 + beta * beta) * p * r / denom;
}

double corpus_chrf(
    std::span<const std::pair<std::string, std::string>> hyp_ref_pairs,
    std::size_t max_n, double beta) {
  if (hyp_ref_pairs.empty()) {
    throw std::domain_error("corpus_chrf: no segment pairs");
  }
  double sum = 0.0;
  for (const auto& [hyp, ref] : hyp_ref_pairs) {
    sum += chrf(hyp, ref, max_n, beta);
  }
  return sum / static_cast<double>(hyp_ref_pairs.size());
}

double mean_aggregate(std::span<const double> values) {
  if (values.empty()) {
    throw std::domain_error("mean_aggregate: empty input");
  }
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

SignificanceResult approx_randomization_test(std::span<const double> a,
                                             std::span<const double> b,
                                             const Aggregate& aggregate,
                                             std::size_t iterations,
                                             std::uint64_t seed) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("approx_randomization_test: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + " segments");
  }
  if (iterations < 1) {
    throw std::invalid_argument(
        "approx_randomization_test: iterations must be >= 1");
  }
  SignificanceResult result;
  result.iterations = iterations;
  result.seed = seed;
  result.observed_delta = std::abs(aggregate(a) - aggregate(b));

  std::vector<double> swapped_a(a.begin(), a.end());
  std::vector<double> swapped_b(b.begin(), b.end());
  std::size_t count_extreme = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Rng rng = Rng::derive(seed, it + 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (rng.next_bool()) {
        swapped_a[i] = b[i];
        swapped_b[i] = a[i];
      } else {
        swapped_a[i] = a[i];
        swapped_b[i] = b[i];
      }
    }
    const double delta = std::abs(aggregate(swapped_a) - aggregate(swapped_b));
    if (delta >= result.observed_delta) ++count_extreme;
  }
  result.p_value = static_cast<double>(count_extreme + 1) /
                   static_cast<double>(iterations + 1);
  return result;
}

}  // namespace termpref
