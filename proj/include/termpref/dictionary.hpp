#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace termpref {

// One-to-many terminology dictionary. Keys are case-folded source terms;
// variants keep their display casing but are deduplicated case-insensitively.
// Immutable after load; safe for concurrent reads.
class TermDictionary {
 public:
  // Folds the source term. Empty source or empty variant throws
  // std::invalid_argument. Re-adding a source merges variant sets.
  void add(std::string_view source, std::span<const std::string> variants);

  // nullptr when the (folded) term is absent; never an empty vector.
  const std::vector<std::string>* find(std::string_view term) const noexcept;

  const std::map<std::string, std::vector<std::string>>& entries() const noexcept {
    return entries_;
  }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  bool operator==(const TermDictionary&) const = default;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

struct DictStats {
  std::size_t term_count = 0;
  double mean_variants = 0.0;
  double std_variants = 0.0;  // population sigma
  std::size_t max_variants = 0;
  std::map<std::size_t, std::size_t> histogram;  // variant count -> #terms
};

// Text format: one `source<TAB>v1|v2|...` entry per line; files ending in
// .json instead hold an object {"source": ["v1", ...]}.
TermDictionary load_dictionary(const std::string& path);
TermDictionary parse_dictionary_tsv(std::string_view text);

std::string serialize_dictionary(const TermDictionary& dict);
void save_dictionary(const TermDictionary& dict, const std::string& path);

DictStats dictionary_stats(const TermDictionary& dict);

// Analytic expectation of picking uniformly among each term's variants:
// mean over examples of 1/|dict[term]|. Examples are (source term,
// expected variant) pairs; both must be present in the dictionary.
double random_baseline_accuracy(
    std::span<const std::pair<std::string, std::string>> examples,
    const TermDictionary& dict);

}  // namespace termpref
