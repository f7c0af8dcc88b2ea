#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace termpref {

inline constexpr double kDefaultMatchThreshold = 0.95;

// Alignment of a term variant inside a text: a character span (Unicode
// scalar offsets) plus a similarity score in [0, 1].
struct FuzzyMatch {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::string variant;    // the matched needle, in its display form
  double score = 0.0;

  bool operator==(const FuzzyMatch&) const = default;
};

// Minimal number of character insertions and deletions turning a into b.
// Equivalent to Levenshtein distance with substitution cost 2. Symmetric.
std::size_t indel_distance(std::u32string_view a, std::u32string_view b);
std::size_t indel_distance(std::string_view a, std::string_view b);

// 1 - indel_distance(a, b) / (|a| + |b|); 1.0 when both strings are empty.
double normalized_similarity(std::u32string_view a, std::u32string_view b);
double normalized_similarity(std::string_view a, std::string_view b);

// Best fuzzy placement of needle inside haystack: the substring maximizing
// normalized_similarity(needle, substring). Ties break to the leftmost
// start, then the shortest span. Comparison is verbatim; callers wanting
// case-insensitive behavior fold both sides first (folding is
// length-preserving, so spans carry over). An empty haystack yields the
// degenerate match {0, 0, score 0}. Throws std::domain_error on an empty
// needle.
FuzzyMatch partial_ratio_alignment(std::u32string_view needle,
                                   std::u32string_view haystack);
FuzzyMatch partial_ratio_alignment(std::string_view needle,
                                   std::string_view haystack);

// Aligns every variant against text (case-folded on both sides) and keeps
// those scoring at least threshold. Spans refer to the original text; the
// reported variant keeps its display form. Result is sorted by
// (start, end, variant). Requires a non-empty variant set and a threshold
// in (0, 1].
std::vector<FuzzyMatch> find_term_matches(
    std::string_view text, std::span<const std::string> variants,
    double threshold = kDefaultMatchThreshold);

// Containment resolution: when one match's span lies wholly inside a
// strictly larger span, only the larger match survives. Matches with
// identical spans collapse to the highest score (ties to the
// lexicographically smaller variant). Output is sorted by
// (start, end, variant).
std::vector<FuzzyMatch> resolve_containment(std::vector<FuzzyMatch> matches);

}  // namespace termpref
