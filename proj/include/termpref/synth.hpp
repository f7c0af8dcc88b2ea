#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "termpref/dictionary.hpp"
#include "termpref/mining.hpp"

namespace termpref {

struct SynthSpec {
  std::size_t n_source_terms = 20;
  std::size_t variants_per_term = 3;  // ambiguity needs >= 2
  std::size_t n_context_cues = 6;
  std::size_t corpus_size = 2000;
  std::uint64_t seed = 0;
};

struct SynthTruth {
  std::size_t segment = 0;
  std::string term;
  std::string correct_variant;  // what the PE uses
  std::string mt_variant;       // the valid-but-wrong choice
};

struct SynthCorpus {
  TermDictionary dict;
  std::vector<SegmentTriple> term_triples;
  std::vector<SynthTruth> truth;  // aligned with term_triples
  std::vector<SegmentTriple> non_term_triples;
  std::vector<std::string> words;  // every word used, unique
};

// Sources read [filler, cue, term, filler]; the cue index selects the
// correct variant (cue mod variants_per_term), the PE uses it and the MT
// a uniformly chosen wrong one. Non-term segments (same count) swap the
// term for a filler and perturb one target filler instead. All words are
// distinct fixed-length strings, so at the default 0.95 threshold fuzzy
// matching reduces to exact word equality. Deterministic in spec.seed.
SynthCorpus gen_synthetic_corpus(const SynthSpec& spec);

}  // namespace termpref
