#include "termpref/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "termpref/unicode.hpp"

namespace termpref {

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string> split_variants(std::string_view field) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t bar = field.find('|', pos);
    if (bar == std::string_view::npos) {
      out.emplace_back(field.substr(pos));
      return out;
    }
    out.emplace_back(field.substr(pos, bar - pos));
    pos = bar + 1;
  }
}

}  // namespace

void TermDictionary::add(std::string_view source,
                         std::span<const std::string> variants) {
  const std::string key = uni::fold(source);
  if (key.empty()) {
    throw std::invalid_argument("dictionary: empty source term");
  }
  std::vector<std::string>& slot = entries_[key];
  for (const std::string& v : variants) {
    if (v.empty()) {
      entries_.erase(key);
      throw std::invalid_argument("dictionary: empty variant for term '" +
                                  key + "'");
    }
    const std::string folded = uni::fold(v);
    const bool seen = std::any_of(
        slot.begin(), slot.end(),
        [&](const std::string& have) { return uni::fold(have) == folded; });
    if (!seen) slot.push_back(v);
  }
  if (slot.empty()) {
    entries_.erase(key);
    throw std::invalid_argument("dictionary: no variants for term '" + key +
                                "'");
  }
}

const std::vector<std::string>* TermDictionary::find(
    std::string_view term) const noexcept {
  const auto it = entries_.find(uni::fold(term));
  return it == entries_.end() ? nullptr : &it->second;
}

TermDictionary parse_dictionary_tsv(std::string_view text) {
  TermDictionary dict;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw std::runtime_error("dictionary line " + std::to_string(line_no) +
                               ": missing tab separator");
    }
    try {
      dict.add(line.substr(0, tab), split_variants(line.substr(tab + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("dictionary line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return dict;
}

TermDictionary load_dictionary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open dictionary file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  if (!ends_with(path, ".json")) return parse_dictionary_tsv(text);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("dictionary json parse error in " + path + ": " +
                             e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error("dictionary json must be an object: " + path);
  }
  TermDictionary dict;
  for (const auto& [source, value] : doc.items()) {
    if (!value.is_array()) {
      throw std::runtime_error("dictionary json entry '" + source +
                               "' must be an array of variants");
    }
    std::vector<std::string> variants;
    for (const auto& v : value) {
      if (!v.is_string()) {
        throw std::runtime_error("dictionary json entry '" + source +
                                 "' has a non-string variant");
      }
      variants.push_back(v.get<std::string>());
    }
    dict.add(source, variants);
  }
  return dict;
}

std::string serialize_dictionary(const TermDictionary& dict) {
  std::string out;
  for (const auto& [source, variants] : dict.entries()) {
    out += source;
    out += '\t';
    for (std::size_t i = 0; i < variants.size(); ++i) {
      if (i) out += '|';
      out += variants[i];
    }
    out += '\n';
  }
  return out;
}

void save_dictionary(const TermDictionary& dict, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write dictionary file: " + path);
  }
  out << serialize_dictionary(dict);
}

DictStats dictionary_stats(const TermDictionary& dict) {
  if (dict.empty()) {
    throw std::domain_error("dictionary_stats: empty dictionary");
  }
  DictStats stats;
  stats.term_count = dict.size();
  double sum = 0.0;
  for (const auto& [source, variants] : dict.entries()) {
    const std::size_t k = variants.size();
    stats.histogram[k] += 1;
    stats.max_variants = std::max(stats.max_variants, k);
    sum += static_cast<double>(k);
  }
  stats.mean_variants = sum / static_cast<double>(stats.term_count);
  double ss = 0.0;
  for (const auto& [source, variants] : dict.entries()) {
    const double d =
        static_cast<double>(variants.size()) - stats.mean_variants;
    ss += d * d;
  }
  stats.std_variants = std::sqrt(ss / static_cast<double>(stats.term_count));
  return stats;
}

double random_baseline_accuracy(
    std::span<const std::pair<std::string, std::string>> examples,
    const TermDictionary& dict) {
  if (examples.empty()) {
    throw std::domain_error("random_baseline_accuracy: no examples");
  }
  double sum = 0.0;
  for (const auto& [term, expected] : examples) {
    const std::vector<std::string>* variants = dict.find(term);
    if (!variants) {
      throw std::invalid_argument(
          "random_baseline_accuracy: term not in dictionary: " + term);
    }
    const std::string folded = uni::fold(expected);
    const bool present = std::any_of(
        variants->begin(), variants->end(),
        [&](const std::string& v) { return uni::fold(v) == folded; });
    if (!present) {
      throw std::invalid_argument("random_baseline_accuracy: variant '" +
                                  expected + "' not listed for term: " + term);
    }
    sum += 1.0 / static_cast<double>(variants->size());
  }
  return sum / static_cast<double>(examples.size());
}

}  // namespace termpref
