#include "termpref/matching.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "termpref/unicode.hpp"

namespace termpref {

std::size_t indel_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t m = a.size(), n = b.size();
  if (m == 0) return n;
  // Single-row DP over the shorter string.
  std::vector<std::size_t> row(m + 1);
  for (std::size_t i = 0; i <= m; ++i) row[i] = i;
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t diag = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= m; ++i) {
      const std::size_t prev = row[i];
      if (a[i - 1] == b[j - 1]) {
        row[i] = diag;
      } else {
        row[i] = std::min(row[i], row[i - 1]) + 1;
      }
      diag = prev;
    }
  }
  return row[m];
}

std::size_t indel_distance(std::string_view a, std::string_view b) {
  return indel_distance(uni::decode_utf8(a), uni::decode_utf8(b));
}

double normalized_similarity(std::u32string_view a, std::u32string_view b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  return 1.0 - static_cast<double>(indel_distance(a, b)) /
                   static_cast<double>(total);
}

double normalized_similarity(std::string_view a, std::string_view b) {
  return normalized_similarity(uni::decode_utf8(a), uni::decode_utf8(b));
}

FuzzyMatch partial_ratio_alignment(std::u32string_view needle,
                                   std::u32string_view haystack) {
  if (needle.empty()) {
    throw std::domain_error("partial_ratio_alignment: empty needle");
  }
  const std::size_t m = needle.size(), n = haystack.size();
  if (n == 0) return FuzzyMatch{0, 0, uni::encode_utf8(needle), 0.0};

  // A verbatim occurrence scores 1.0, and only verbatim occurrences do; the
  // leftmost one is the tie-break winner, so the scan can stop there.
  const std::size_t pos = haystack.find(needle);
  if (pos != std::u32string_view::npos) {
    return FuzzyMatch{pos, pos + m, uni::encode_utf8(needle), 1.0};
  }

  FuzzyMatch best{0, 0, uni::encode_utf8(needle), -1.0};
  std::vector<std::size_t> col(m + 1);
  for (std::size_t start = 0; start < n; ++start) {
    // One DP sweep per start yields the distance to every window
    // haystack[start, start+k) as col[m] after processing column k.
    for (std::size_t i = 0; i <= m; ++i) col[i] = i;
    const std::size_t max_len = n - start;
    for (std::size_t k = 1; k <= max_len; ++k) {
      const char32_t hc = haystack[start + k - 1];
      std::size_t diag = col[0];
      col[0] = k;
      for (std::size_t i = 1; i <= m; ++i) {
        const std::size_t prev = col[i];
        if (needle[i - 1] == hc) {
          col[i] = diag;
        } else {
          col[i] = std::min(col[i], col[i - 1]) + 1;
        }
        diag = prev;
      }
      const double score = 1.0 - static_cast<double>(col[m]) /
                                     static_cast<double>(m + k);
      // Strict improvement keeps the leftmost start, then the shortest span.
      if (score > best.score) {
        best.start = start;
        best.end = start + k;
        best.score = score;
      }
    }
  }
  return best;
}

FuzzyMatch partial_ratio_alignment(std::string_view needle,
                                   std::string_view haystack) {
  return partial_ratio_alignment(uni::decode_utf8(needle),
                                 uni::decode_utf8(haystack));
}

std::vector<FuzzyMatch> find_term_matches(std::string_view text,
                                          std::span<const std::string> variants,
                                          double threshold) {
  if (variants.empty()) {
    throw std::invalid_argument("find_term_matches: empty variant set");
  }
  if (!(threshold > 0.0) || threshold > 1.0) {
    throw std::invalid_argument("find_term_matches: threshold must be in (0, 1]");
  }
  const std::u32string folded_text = uni::fold(uni::decode_utf8(text));
  std::vector<FuzzyMatch> out;
  for (const std::string& variant : variants) {
    const std::u32string folded_variant = uni::fold(uni::decode_utf8(variant));
    FuzzyMatch m = partial_ratio_alignment(
        std::u32string_view(folded_variant), std::u32string_view(folded_text));
    if (m.score >= threshold && m.end > m.start) {
      m.variant = variant;
      out.push_back(std::move(m));
    }
  }
  std::sort(out.begin(), out.end(), [](const FuzzyMatch& a, const FuzzyMatch& b) {
    return std::tie(a.start, a.end, a.variant) <
           std::tie(b.start, b.end, b.variant);
  });
  return out;
}

std::vector<FuzzyMatch> resolve_containment(std::vector<FuzzyMatch> matches) {
  // Collapse identical spans: higher score wins, then the lexicographically
  // smaller variant.
  std::sort(matches.begin(), matches.end(),
            [](const FuzzyMatch& a, const FuzzyMatch& b) {
              if (a.start != b.start) return a.start < b.start;
              if (a.end != b.end) return a.end < b.end;
              if (a.score != b.score) return a.score > b.score;
              return a.variant < b.variant;
            });
  matches.erase(std::unique(matches.begin(), matches.end(),
                            [](const FuzzyMatch& a, const FuzzyMatch& b) {
                              return a.start == b.start && a.end == b.end;
                            }),
                matches.end());

  std::vector<FuzzyMatch> out;
  for (const FuzzyMatch& m : matches) {
    const bool contained =
        std::any_of(matches.begin(), matches.end(), [&](const FuzzyMatch& o) {
          return (o.start <= m.start && m.end <= o.end) &&
                 !(o.start == m.start && o.end == m.end);
        });
    if (!contained) out.push_back(m);
  }
  return out;
}

}  // namespace termpref
