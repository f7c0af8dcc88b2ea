#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termpref/dictionary.hpp"
#include "termpref/matching.hpp"
#include "termpref/tokenize.hpp"

namespace termpref {

struct SegmentTriple {
  std::string source;
  std::string mt;
  std::string pe;
};

// One preference pair. y_w is always the post-edit, y_l the raw machine
// translation. Term examples carry the matched dictionary term, the
// resolved matches, the unique matched variant names (sorted), and the
// token-index masks; non-term examples leave all of those empty.
struct PreferenceExample {
  std::string x;
  std::string y_w;
  std::string y_l;
  std::string source_term;  // folded dictionary key; empty for non-term
  std::vector<FuzzyMatch> w_matches;
  std::vector<FuzzyMatch> l_matches;
  std::vector<std::string> w_variants;
  std::vector<std::string> l_variants;
  std::vector<std::size_t> delta_w;
  std::vector<std::size_t> delta_l;

  bool is_term() const noexcept { return !source_term.empty(); }

  bool operator==(const PreferenceExample&) const = default;
};

enum class MineOutcome {
  accepted,
  no_source_term,
  missing_mt_term,
  missing_pe_term,
  same_term,
};

std::string to_string(MineOutcome outcome);

struct MineResult {
  MineOutcome outcome = MineOutcome::no_source_term;
  std::optional<PreferenceExample> example;
};

struct MiningReport {
  std::size_t total = 0;
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;  // reason -> count
};

struct MiningResult {
  std::vector<PreferenceExample> examples;
  std::vector<PreferenceExample> non_term_pool;  // no-source-term rejects
  MiningReport report;
};

// Token indices whose character span overlaps any match span. Sorted,
// unique. A match span beyond the end of target throws
// std::invalid_argument.
std::vector<std::size_t> build_masks(std::string_view target,
                                     std::span<const FuzzyMatch> matches,
                                     const Tokenizer& tokenizer);

// Accepts iff the source contains a dictionary term at >= threshold, both
// MT and PE contain at least one of its variants after containment
// resolution, and the two matched-variant sets are disjoint. When several
// dictionary terms match the source, the highest-scoring one wins (ties:
// leftmost, then lexicographically smaller term). Masks are built with
// the given tokenizer.
MineResult mine_example(const SegmentTriple& triple, const TermDictionary& dict,
                        double threshold = kDefaultMatchThreshold,
                        const Tokenizer& tokenizer = whitespace_tokens);

MiningResult mine_corpus(std::span<const SegmentTriple> triples,
                         const TermDictionary& dict,
                         double threshold = kDefaultMatchThreshold,
                         const Tokenizer& tokenizer = whitespace_tokens);

struct DatasetSplit {
  std::vector<PreferenceExample> train;
  std::vector<PreferenceExample> validation;
  std::vector<PreferenceExample> test;
};

// Validation and test draw half from each pool (term side takes the extra
// example when the size is odd); the rest of the term pool becomes train.
// Deterministic in seed. Insufficient pools throw std::invalid_argument
// stating required vs available.
DatasetSplit split_dataset(std::span<const PreferenceExample> term_pool,
                           std::span<const PreferenceExample> non_term_pool,
                           std::size_t val_size, std::size_t test_size,
                           std::uint64_t seed);

// Fraction of test term examples whose source term also appears in some
// train example. 1.0 when test has no term examples.
double term_coverage(const DatasetSplit& split);

}  // namespace termpref
