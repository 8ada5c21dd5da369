#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "destrank/bm25.hpp"
#include "destrank/errors.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace destrank;
using namespace destrank::sparse;
using testsupport::error_code;

namespace {

using Docs = std::vector<std::vector<std::string>>;

using OracleBm25 = oracle::Bm25;

Docs hand_corpus() {
  return {tokenize("blue sky"), tokenize("blue ocean blue"), tokenize("green field")};
}

Docs random_corpus(std::mt19937& rng, std::size_t n_docs, std::size_t vocab) {
  Docs docs(n_docs);
  for (auto& d : docs) {
    const auto len = 1 + rng() % 30;
    for (std::size_t i = 0; i < len; ++i) d.push_back("w" + std::to_string(rng() % vocab));
  }
  return docs;
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Blue, sky!") == std::vector<std::string>{"blue", "sky"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("youth-friendly activities") == std::vector<std::string>{"youth", "friendly", "activities"});
  CHECK(tokenize("São Paulo") == std::vector<std::string>{"são", "paulo"});
  CHECK(tokenize("A [SEP] b") == std::vector<std::string>{"a", "sep", "b"});
  TokenizerConfig cfg;
  cfg.stopwords = {"the", "of"};
  CHECK(tokenize("The City of Light", cfg) == std::vector<std::string>{"city", "light"});
  cfg.lowercase = false;
  CHECK(tokenize("Rome Rome", cfg) == std::vector<std::string>{"Rome", "Rome"});
}

TEST_CASE("hand corpus statistics") {
  const auto idx = Bm25Index::build(hand_corpus());
  CHECK(idx.size() == 3);
  CHECK(idx.avgdl() == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
  CHECK(idx.doc_freq("blue") == 2);
  CHECK(idx.idf("ocean") == doctest::Approx(std::log(2.5 / 1.5)).epsilon(1e-12));
  CHECK(idx.idf("ocean") == doctest::Approx(0.5108).epsilon(1e-3));
  CHECK(idx.raw_idf("blue") < 0);
  CHECK(idx.idf("blue") == doctest::Approx(0.25 * std::log(2.5 / 1.5)).epsilon(1e-12));
  CHECK(idx.idf("zeppelin") == 0.0);
  CHECK(idx.term_freq(1, "blue") == 2);
}

TEST_CASE("score_paragraph hand values") {
  const auto idx = Bm25Index::build(hand_corpus());
  CHECK(idx.score_paragraph({"ocean"}, 1) == doctest::Approx(0.4526).epsilon(1e-3));
  CHECK(idx.score_paragraph({"zeppelin"}, 1) == 0.0);
  CHECK(idx.score_paragraph({}, 1) == 0.0);
  CHECK(error_code([&] { idx.score_paragraph({"ocean"}, 3); }) == Errc::UnknownParagraph);
}

TEST_CASE("score_all") {
  const auto idx = Bm25Index::build(hand_corpus());
  const auto ocean = idx.score_all({"ocean"});
  REQUIRE(ocean.size() == 3);
  CHECK(std::count_if(ocean.begin(), ocean.end(), [](double s) { return s != 0.0; }) == 1);
  const auto none = idx.score_all({});
  CHECK(std::all_of(none.begin(), none.end(), [](double s) { return s == 0.0; }));
  const auto all = idx.score_all({"blue", "sky", "ocean", "green", "field"});
  CHECK(std::all_of(all.begin(), all.end(), [](double s) { return s > 0.0; }));
}

TEST_CASE("empty corpus is rejected") {
  CHECK(error_code([] { Bm25Index::build(Docs{}); }) == Errc::EmptyCorpus);
  CHECK(error_code([] { Bm25Index::build(Docs{{}, {}}); }) == Errc::EmptyCorpus);
}

TEST_CASE("index matches the oracle on random corpora") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const auto docs = random_corpus(rng, 1 + rng() % 40, 3 + rng() % 50);
    const auto idx = Bm25Index::build(docs);
    const OracleBm25 oracle(docs);
    for (int qn = 0; qn < 10; ++qn) {
      std::vector<std::string> q;
      for (std::size_t i = 0, n = rng() % 6; i < n; ++i) q.push_back("w" + std::to_string(rng() % 60));
      const auto all = idx.score_all(q);
      for (std::size_t d = 0; d < docs.size(); ++d) {
        CHECK(all[d] == idx.score_paragraph(q, d));
        CHECK(all[d] == oracle.score(q, d));
        CHECK(all[d] >= 0.0);
      }
    }
  }
}

TEST_CASE("absent tokens change nothing and scores add over disjoint queries") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto docs = random_corpus(rng, 2 + rng() % 30, 20);
    const auto idx = Bm25Index::build(docs);
    std::vector<std::string> q1, q2;
    for (int i = 0; i < 3; ++i) q1.push_back("w" + std::to_string(rng() % 10));
    for (int i = 0; i < 3; ++i) q2.push_back("w" + std::to_string(10 + rng() % 10));
    auto q1_noise = q1;
    q1_noise.push_back("not-in-index");
    auto both = q1;
    both.insert(both.end(), q2.begin(), q2.end());
    const auto s1 = idx.score_all(q1);
    const auto s2 = idx.score_all(q2);
    const auto s12 = idx.score_all(both);
    CHECK(idx.score_all(q1_noise) == s1);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      CHECK(s12[d] == doctest::Approx(s1[d] + s2[d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("corpus index tokenizes paragraphs") {
  Corpus corpus({Destination{"a", "A", {Paragraph{"a", 0, "Blue sky over the bay"}}},
                 Destination{"b", "B", {Paragraph{"b", 0, "blue ocean, blue"}, Paragraph{"b", 1, "green field"}}}});
  const auto idx = Bm25Index::build(corpus);
  CHECK(idx.size() == 3);
  CHECK(idx.doc_len(1) == 3);
  CHECK(idx.doc_freq("blue") == 2);
}

TEST_CASE("json persistence round-trips exactly") {
  std::mt19937 rng(3);
  const auto docs = random_corpus(rng, 25, 40);
  const auto idx = Bm25Index::build(docs);
  const auto back = Bm25Index::from_json(idx.to_json());
  CHECK(back.size() == idx.size());
  CHECK(back.avgdl() == idx.avgdl());
  CHECK(back.vocabulary_size() == idx.vocabulary_size());
  std::vector<std::string> q = {"w1", "w2", "w7", "w7", "w30"};
  CHECK(back.score_all(q) == idx.score_all(q));
  CHECK(back.to_json() == idx.to_json());
}
