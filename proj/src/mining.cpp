#include "termpref/mining.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "termpref/rng.hpp"
#include "termpref/unicode.hpp"

namespace termpref {

namespace {

std::vector<std::string> unique_variants(std::span<const FuzzyMatch> matches) {
  std::vector<std::string> names;
  for (const FuzzyMatch& m : matches) names.push_back(m.variant);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

bool folded_sets_intersect(std::span<const std::string> a,
                           std::span<const std::string> b) {
  std::set<std::string> folded;
  for (const std::string& v : a) folded.insert(uni::fold(v));
  return std::any_of(b.begin(), b.end(), [&](const std::string& v) {
    return folded.count(uni::fold(v)) > 0;
  });
}

}  // namespace

std::string to_string(MineOutcome outcome) {
  switch (outcome) {
    case MineOutcome::accepted: return "accepted";
    case MineOutcome::no_source_term: return "no-source-term";
    case MineOutcome::missing_mt_term: return "missing-mt-term";
    case MineOutcome::missing_pe_term: return "missing-pe-term";
    case MineOutcome::same_term: return "same-term";
  }
  throw std::logic_error("unknown mine outcome");
}

std::vector<std::size_t> build_masks(std::string_view target,
                                     std::span<const FuzzyMatch> matches,
                                     const Tokenizer& tokenizer) {
  const std::vector<Token> tokens = tokenizer(target);
  const std::size_t text_len = uni::decode_utf8(target).size();
  std::vector<std::size_t> out;
  for (const FuzzyMatch& m : matches) {
    if (m.end > text_len || m.start >= m.end) {
      throw std::invalid_argument("build_masks: match span [" +
                                  std::to_string(m.start) + ", " +
                                  std::to_string(m.end) +
                                  ") outside target of length " +
                                  std::to_string(text_len));
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].start < m.end && m.start < tokens[i].end) {
        out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MineResult mine_example(const SegmentTriple& triple, const TermDictionary& dict,
                        double threshold, const Tokenizer& tokenizer) {
  if (triple.source.empty() || triple.mt.empty() || triple.pe.empty()) {
    throw std::invalid_argument("mine_example: segment fields must be non-empty");
  }

  // Locate the dictionary term in the source: best score, then leftmost,
  // then the lexicographically smaller key.
  const std::u32string folded_source =
      uni::fold(uni::decode_utf8(triple.source));
  const std::string* best_term = nullptr;
  FuzzyMatch best_match;
  for (const auto& entry : dict.entries()) {
    const std::string& term = entry.first;
    const std::u32string folded_term = uni::fold(uni::decode_utf8(term));
    const FuzzyMatch m = partial_ratio_alignment(
        std::u32string_view(folded_term), std::u32string_view(folded_source));
    if (m.score < threshold) continue;
    if (!best_term || m.score > best_match.score ||
        (m.score == best_match.score && m.start < best_match.start)) {
      best_term = &term;
      best_match = m;
    }
  }
  if (!best_term) return MineResult{MineOutcome::no_source_term, std::nullopt};

  const std::vector<std::string>& variants = *dict.find(*best_term);
  std::vector<FuzzyMatch> l_matches =
      resolve_containment(find_term_matches(triple.mt, variants, threshold));
  if (l_matches.empty()) {
    return MineResult{MineOutcome::missing_mt_term, std::nullopt};
  }
  std::vector<FuzzyMatch> w_matches =
      resolve_containment(find_term_matches(triple.pe, variants, threshold));
  if (w_matches.empty()) {
    return MineResult{MineOutcome::missing_pe_term, std::nullopt};
  }

  PreferenceExample ex;
  ex.x = triple.source;
  ex.y_w = triple.pe;
  ex.y_l = triple.mt;
  ex.source_term = *best_term;
  ex.w_matches = std::move(w_matches);
  ex.l_matches = std::move(l_matches);
  ex.w_variants = unique_variants(ex.w_matches);
  ex.l_variants = unique_variants(ex.l_matches);
  if (folded_sets_intersect(ex.w_variants, ex.l_variants)) {
    return MineResult{MineOutcome::same_term, std::nullopt};
  }
  ex.delta_w = build_masks(ex.y_w, ex.w_matches, tokenizer);
  ex.delta_l = build_masks(ex.y_l, ex.l_matches, tokenizer);
  if (ex.delta_w.empty() || ex.delta_l.empty()) {
    throw std::runtime_error("mine_example: accepted example has an empty mask");
  }
  return MineResult{MineOutcome::accepted, std::move(ex)};
}

MiningResult mine_corpus(std::span<const SegmentTriple> triples,
                         const TermDictionary& dict, double threshold,
                         const Tokenizer& tokenizer) {
  MiningResult out;
  out.report.total = triples.size();
  for (const SegmentTriple& triple : triples) {
    MineResult r = mine_example(triple, dict, threshold, tokenizer);
    if (r.outcome == MineOutcome::accepted) {
      out.report.accepted += 1;
      out.examples.push_back(std::move(*r.example));
      continue;
    }
    out.report.rejected[to_string(r.outcome)] += 1;
    if (r.outcome == MineOutcome::no_source_term) {
      PreferenceExample ex;
      ex.x = triple.source;
      ex.y_w = triple.pe;
      ex.y_l = triple.mt;
      out.non_term_pool.push_back(std::move(ex));
    }
  }
  return out;
}

DatasetSplit split_dataset(std::span<const PreferenceExample> term_pool,
                           std::span<const PreferenceExample> non_term_pool,
                           std::size_t val_size, std::size_t test_size,
                           std::uint64_t seed) {
  for (const PreferenceExample& ex : term_pool) {
    if (!ex.is_term()) {
      throw std::invalid_argument(
          "split_dataset: non-term example in the term pool");
    }
  }
  for (const PreferenceExample& ex : non_term_pool) {
    if (ex.is_term()) {
      throw std::invalid_argument(
          "split_dataset: term example in the non-term pool");
    }
  }
  const std::size_t val_term = (val_size + 1) / 2;
  const std::size_t val_non = val_size / 2;
  const std::size_t test_term = (test_size + 1) / 2;
  const std::size_t test_non = test_size / 2;
  const auto require = [](std::string_view pool, std::size_t need,
                          std::size_t have) {
    if (need > have) {
      throw std::invalid_argument("split_dataset: " + std::string(pool) +
                                  " pool needs " + std::to_string(need) +
                                  " examples but has " + std::to_string(have));
    }
  };
  require("term", val_term + test_term, term_pool.size());
  require("non-term", val_non + test_non, non_term_pool.size());

  std::vector<std::size_t> term_idx(term_pool.size());
  std::vector<std::size_t> non_idx(non_term_pool.size());
  for (std::size_t i = 0; i < term_idx.size(); ++i) term_idx[i] = i;
  for (std::size_t i = 0; i < non_idx.size(); ++i) non_idx[i] = i;
  Rng term_rng(Rng::mix(seed, 1));
  Rng non_rng(Rng::mix(seed, 2));
  term_rng.shuffle(term_idx);
  non_rng.shuffle(non_idx);

  DatasetSplit split;
  std::size_t t = 0;
  for (std::size_t i = 0; i < val_term; ++i) {
    split.validation.push_back(term_pool[term_idx[t++]]);
  }
  for (std::size_t i = 0; i < test_term; ++i) {
    split.test.push_back(term_pool[term_idx[t++]]);
  }
  while (t < term_idx.size()) split.train.push_back(term_pool[term_idx[t++]]);

  std::size_t n = 0;
  for (std::size_t i = 0; i < val_non; ++i) {
    split.validation.push_back(non_term_pool[non_idx[n++]]);
  }
  for (std::size_t i = 0; i < test_non; ++i) {
    split.test.push_back(non_term_pool[non_idx[n++]]);
  }
  return split;
}

double term_coverage(const DatasetSplit& split) {
  std::set<std::string> train_terms;
  for (const PreferenceExample& ex : split.train) {
    if (ex.is_term()) train_terms.insert(ex.source_term);
  }
  std::size_t term_total = 0, covered = 0;
  for (const PreferenceExample& ex : split.test) {
    if (!ex.is_term()) continue;
    ++term_total;
    if (train_terms.count(ex.source_term)) ++covered;
  }
  if (term_total == 0) return 1.0;
  return static_cast<double>(covered) / static_cast<double>(term_total);
}

}  // namespace termpref
