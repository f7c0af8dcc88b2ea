#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "termpref/dictionary.hpp"
#include "termpref/rng.hpp"
#include "termpref/unicode.hpp"
#include "test_util.hpp"

using namespace termpref;

TEST_CASE("shipped dictionary fixture carries the full variant set") {
  const TermDictionary dict = load_dictionary(testutil::data_path("transfer_dict.tsv"));
  CHECK(dict.size() == 1);
  const auto* variants = dict.find("transfer");
  REQUIRE(variants != nullptr);
  CHECK(variants->size() == 27);
  const auto has = [&](std::string_view v) {
    return std::find(variants->begin(), variants->end(), v) != variants->end();
  };
  CHECK(has("Übergabe"));
  CHECK(has("Übertragung"));
  CHECK(has("Weiterleitung"));
  CHECK(has("Warenüberführung"));
  // Lookups fold the queried term.
  CHECK(dict.find("TRANSFER") == variants);
  CHECK(dict.find("nonexistent") == nullptr);
}

TEST_CASE("single-entry text parses") {
  const TermDictionary dict = parse_dictionary_tsv("haus\tHaus\n");
  CHECK(dict.size() == 1);
  REQUIRE(dict.find("haus") != nullptr);
  CHECK(*dict.find("haus") == std::vector<std::string>{"Haus"});
}

TEST_CASE("variants deduplicate case-insensitively keeping first display form") {
  TermDictionary dict;
  const std::vector<std::string> variants = {"Haus", "HAUS", "haus", "Heim"};
  dict.add("home", variants);
  CHECK(*dict.find("home") == std::vector<std::string>{"Haus", "Heim"});
}

TEST_CASE("re-adding a source merges like a set union") {
  TermDictionary dict;
  dict.add("t", std::vector<std::string>{"a", "b"});
  dict.add("T", std::vector<std::string>{"B", "c"});
  REQUIRE(dict.size() == 1);
  const auto got = *dict.find("t");

  std::set<std::string> folded;
  for (const auto& v : got) folded.insert(uni::fold(v));
  CHECK(folded == std::set<std::string>{"a", "b", "c"});
  CHECK(got == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("dictionary rejects empty fields") {
  TermDictionary dict;
  CHECK_THROWS_AS(dict.add("", std::vector<std::string>{"x"}), std::invalid_argument);
  CHECK_THROWS_AS(dict.add("t", std::vector<std::string>{""}), std::invalid_argument);
  CHECK_THROWS_AS(dict.add("t", std::vector<std::string>{}), std::invalid_argument);
}

TEST_CASE("text parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_dictionary_tsv("a\tb\nbroken line\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_AS(load_dictionary("/nonexistent/dict.tsv"), std::runtime_error);
}

TEST_CASE("blank lines and crlf endings are tolerated") {
  const TermDictionary dict = parse_dictionary_tsv("a\tx|y\r\n\nb\tz\r\n");
  CHECK(dict.size() == 2);
  CHECK(dict.find("a")->size() == 2);
  CHECK(dict.find("b")->size() == 1);
}

TEST_CASE("serialize then parse is the identity") {
  TermDictionary dict;
  dict.add("beta", std::vector<std::string>{"Zwei", "zwo"});
  dict.add("alpha", std::vector<std::string>{"Eins"});
  const TermDictionary round = parse_dictionary_tsv(serialize_dictionary(dict));
  CHECK(round == dict);
}

TEST_CASE("json dictionaries load like text ones") {
  const auto dir = testutil::fresh_dir("dictjson");
  testutil::spit(dir / "d.json", R"({"transfer": ["Übergabe", "Transfer"]})");
  const TermDictionary dict = load_dictionary((dir / "d.json").string());
  CHECK(dict.size() == 1);
  CHECK(dict.find("transfer")->size() == 2);
}

TEST_CASE("stats of the fixture dictionary") {
  const TermDictionary dict = load_dictionary(testutil::data_path("transfer_dict.tsv"));
  const DictStats stats = dictionary_stats(dict);
  CHECK(stats.term_count == 1);
  CHECK(stats.mean_variants == 27.0);
  CHECK(stats.std_variants == 0.0);
  CHECK(stats.max_variants == 27);
  CHECK(stats.histogram == std::map<std::size_t, std::size_t>{{27, 1}});
}

TEST_CASE("stats of a two-term dictionary") {
  TermDictionary dict;
  dict.add("a", std::vector<std::string>{"v1", "v2"});
  dict.add("b", std::vector<std::string>{"w1", "w2", "w3", "w4"});
  const DictStats stats = dictionary_stats(dict);
  CHECK(stats.mean_variants == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(stats.std_variants == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats.max_variants == 4);
}

TEST_CASE("stats agree with a two-pass oracle on random dictionaries") {
  Rng rng(2001);
  for (int round = 0; round < 50; ++round) {
    TermDictionary dict;
    std::vector<double> counts;
    const std::size_t terms = 1 + rng.uniform_index(20);
    for (std::size_t t = 0; t < terms; ++t) {
      const std::size_t k = 1 + rng.uniform_index(9);
      std::vector<std::string> variants;
      for (std::size_t v = 0; v < k; ++v) {
        variants.push_back("v" + std::to_string(t) + "_" + std::to_string(v));
      }
      dict.add("term" + std::to_string(t), variants);
      counts.push_back(static_cast<double>(k));
    }
    const DictStats stats = dictionary_stats(dict);
    const oracle::MeanStd want = oracle::mean_std(counts);
    CHECK(stats.mean_variants == doctest::Approx(want.mean).epsilon(1e-12));
    CHECK(stats.std_variants == doctest::Approx(want.stddev).epsilon(1e-12));
    std::size_t histogram_total = 0;
    for (const auto& [k, n] : stats.histogram) histogram_total += n;
    CHECK(histogram_total == stats.term_count);
  }
}

TEST_CASE("stats require a non-empty dictionary") {
  CHECK_THROWS_AS(dictionary_stats(TermDictionary{}), std::domain_error);
}

TEST_CASE("entry order does not depend on insertion order") {
  TermDictionary forward;
  forward.add("a", std::vector<std::string>{"x"});
  forward.add("b", std::vector<std::string>{"y"});
  TermDictionary backward;
  backward.add("b", std::vector<std::string>{"y"});
  backward.add("a", std::vector<std::string>{"x"});
  CHECK(serialize_dictionary(forward) == serialize_dictionary(backward));
}

TEST_CASE("random baseline expectation") {
  TermDictionary dict;
  dict.add("quad", std::vector<std::string>{"q1", "q2", "q3", "q4"});
  const std::vector<std::pair<std::string, std::string>> quad_examples = {
      {"quad", "q1"}, {"quad", "q3"}, {"quad", "q4"}};
  CHECK(random_baseline_accuracy(quad_examples, dict) == 0.25);

  const TermDictionary fixture = load_dictionary(testutil::data_path("transfer_dict.tsv"));
  const std::vector<std::pair<std::string, std::string>> one = {{"transfer", "Übergabe"}};
  CHECK(random_baseline_accuracy(one, fixture) ==
        doctest::Approx(1.0 / 27.0).epsilon(1e-15));

  TermDictionary mixed;
  mixed.add("a", std::vector<std::string>{"a1", "a2"});
  mixed.add("b", std::vector<std::string>{"b1", "b2", "b3", "b4", "b5"});
  mixed.add("c", std::vector<std::string>{"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9", "c10"});
  const std::vector<std::pair<std::string, std::string>> three = {
      {"a", "a1"}, {"b", "b2"}, {"c", "c9"}};
  const double expected = (1.0 / 2.0 + 1.0 / 5.0 + 1.0 / 10.0) / 3.0;
  CHECK(random_baseline_accuracy(three, mixed) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("random baseline validates membership") {
  TermDictionary dict;
  dict.add("known", std::vector<std::string>{"k1", "k2"});
  const std::vector<std::pair<std::string, std::string>> missing_term = {{"ghost", "k1"}};
  CHECK_THROWS_WITH_AS(random_baseline_accuracy(missing_term, dict),
                       doctest::Contains("ghost"), std::invalid_argument);
  const std::vector<std::pair<std::string, std::string>> missing_variant = {{"known", "k9"}};
  CHECK_THROWS_AS(random_baseline_accuracy(missing_variant, dict), std::invalid_argument);
  const std::vector<std::pair<std::string, std::string>> none;
  CHECK_THROWS_AS(random_baseline_accuracy(none, dict), std::domain_error);
}
