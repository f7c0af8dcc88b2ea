#include "termpref/synth.hpp"

#include <set>
#include <stdexcept>

#include "termpref/rng.hpp"

namespace termpref {

namespace {

constexpr std::size_t kSourceFillers = 6;

// Base-26 lowercase encoding, left-padded with 'a'.
std::string enc(std::size_t value, std::size_t width) {
  std::string out(width, 'a');
  for (std::size_t i = width; i-- > 0;) {
    out[i] = static_cast<char>('a' + value % 26);
    value /= 26;
  }
  if (value != 0) {
    throw std::invalid_argument("synth: index does not fit its name width");
  }
  return out;
}

}  // namespace

SynthCorpus gen_synthetic_corpus(const SynthSpec& spec) {
  if (spec.n_source_terms == 0 || spec.n_context_cues == 0 ||
      spec.corpus_size == 0) {
    throw std::invalid_argument("synth: counts must be positive");
  }
  if (spec.variants_per_term < 2) {
    throw std::invalid_argument(
        "synth: ambiguity needs at least two variants per term");
  }

  // Every word is exactly 7 characters long and globally unique; with all
  // words distinct, any two differ by indel distance >= 2, which keeps
  // every non-identical fuzzy score at or below 6/7 < 0.95.
  SynthCorpus corpus;
  const auto term_word = [](std::size_t i) { return "term" + enc(i, 3); };
  const auto variant_word = [](std::size_t i, std::size_t j) {
    return "t" + enc(i, 3) + "v" + enc(j, 2);
  };
  const auto cue_word = [](std::size_t c) { return "cue" + enc(c, 4); };
  const auto src_filler = [](std::size_t f) { return "fil" + enc(f, 4); };
  const auto tgt_filler = [](std::size_t f, bool primary) {
    return "ziel" + enc(2 * f + (primary ? 0 : 1), 3);
  };

  for (std::size_t i = 0; i < spec.n_source_terms; ++i) {
    std::vector<std::string> variants;
    for (std::size_t j = 0; j < spec.variants_per_term; ++j) {
      variants.push_back(variant_word(i, j));
    }
    corpus.dict.add(term_word(i), variants);
    corpus.words.push_back(term_word(i));
    corpus.words.insert(corpus.words.end(), variants.begin(), variants.end());
  }
  for (std::size_t c = 0; c < spec.n_context_cues; ++c) {
    corpus.words.push_back(cue_word(c));
  }
  for (std::size_t f = 0; f < kSourceFillers; ++f) {
    corpus.words.push_back(src_filler(f));
    corpus.words.push_back(tgt_filler(f, true));
    corpus.words.push_back(tgt_filler(f, false));
  }
  {
    const std::set<std::string> unique(corpus.words.begin(),
                                       corpus.words.end());
    if (unique.size() != corpus.words.size()) {
      throw std::logic_error("synth: generated word names collide");
    }
    for (const std::string& w : corpus.words) {
      if (w.size() != 7) {
        throw std::logic_error("synth: generated word of wrong length: " + w);
      }
    }
  }

  Rng term_rng = Rng::derive(spec.seed, 1);
  for (std::size_t s = 0; s < spec.corpus_size; ++s) {
    const std::size_t i = s % spec.n_source_terms;  // balanced term coverage
    const std::size_t c = term_rng.uniform_index(spec.n_context_cues);
    const std::size_t a = term_rng.uniform_index(kSourceFillers);
    const std::size_t b = term_rng.uniform_index(kSourceFillers);
    const std::size_t correct = c % spec.variants_per_term;
    std::size_t wrong = term_rng.uniform_index(spec.variants_per_term - 1);
    if (wrong >= correct) ++wrong;

    SegmentTriple triple;
    triple.source =
        src_filler(a) + " " + cue_word(c) + " " + term_word(i) + " " +
        src_filler(b);
    triple.pe = tgt_filler(a, true) + " " + variant_word(i, correct) + " " +
                tgt_filler(b, true);
    triple.mt = tgt_filler(a, true) + " " + variant_word(i, wrong) + " " +
                tgt_filler(b, true);
    corpus.term_triples.push_back(std::move(triple));
    corpus.truth.push_back(SynthTruth{s, term_word(i), variant_word(i, correct),
                                      variant_word(i, wrong)});
  }

  Rng non_rng = Rng::derive(spec.seed, 2);
  for (std::size_t s = 0; s < spec.corpus_size; ++s) {
    const std::size_t c = non_rng.uniform_index(spec.n_context_cues);
    const std::size_t a = non_rng.uniform_index(kSourceFillers);
    const std::size_t e = non_rng.uniform_index(kSourceFillers);
    const std::size_t b = non_rng.uniform_index(kSourceFillers);
    SegmentTriple triple;
    triple.source = src_filler(a) + " " + cue_word(c) + " " + src_filler(e) +
                    " " + src_filler(b);
    triple.pe = tgt_filler(a, true) + " " + tgt_filler(e, true) + " " +
                tgt_filler(b, true);
    triple.mt = tgt_filler(a, true) + " " + tgt_filler(e, false) + " " +
                tgt_filler(b, true);
    corpus.non_term_triples.push_back(std::move(triple));
  }
  return corpus;
}

}  // namespace termpref
