#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dntm/corpus.hpp"
#include "dntm/rng.hpp"

using namespace dntm;

namespace {

Corpus from_plain(const std::string& text, const Vocabulary* vocab = nullptr,
                  LoadStats* stats = nullptr) {
  std::istringstream in(text);
  return load_corpus_plain(in, vocab, stats);
}

Corpus from_bow(const std::string& text) {
  std::istringstream in(text);
  return load_corpus_bow(in);
}

std::vector<std::int32_t> sorted_ids(const Document& doc) {
  auto ids = doc.word_ids;
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("plain loader builds vocabulary in first-occurrence order") {
  const Corpus c = from_plain("a b b\nc a\n");
  CHECK(c.vocab.size() == 3);
  CHECK(c.vocab.id_of("a") == 0);
  CHECK(c.vocab.id_of("b") == 1);
  CHECK(c.vocab.id_of("c") == 2);
  REQUIRE(c.docs.size() == 2);
  CHECK(c.docs[0].word_ids == std::vector<std::int32_t>{0, 1, 1});
  CHECK(c.docs[1].word_ids == std::vector<std::int32_t>{2, 0});
  CHECK(c.vocab.count(0) == 2);
  CHECK(c.vocab.count(1) == 2);
  CHECK(c.vocab.count(2) == 1);
  CHECK_FALSE(c.has_gold_labels());
}

TEST_CASE("plain loader reads leading label fields") {
  const Corpus c = from_plain("sport\tgame team game\ntech\tchip\nsport\tteam\n");
  REQUIRE(c.docs.size() == 3);
  CHECK(c.label_names == std::vector<std::string>{"sport", "tech"});
  CHECK(c.docs[0].gold_label == 0);
  CHECK(c.docs[1].gold_label == 1);
  CHECK(c.docs[2].gold_label == 0);
  CHECK(c.has_gold_labels());
}

TEST_CASE("plain loader drops unknown tokens under a fixed vocabulary") {
  const Corpus base = from_plain("x\n");
  LoadStats stats;
  const Corpus c = from_plain("x y\n", &base.vocab, &stats);
  REQUIRE(c.docs.size() == 1);
  CHECK(c.docs[0].word_ids == std::vector<std::int32_t>{0});
  CHECK(stats.dropped_tokens == 1);
}

TEST_CASE("plain loader omits documents left empty by token drops") {
  const Corpus base = from_plain("x\n");
  LoadStats stats;
  const Corpus c = from_plain("x\ny z\nx x\n", &base.vocab, &stats);
  CHECK(c.docs.size() == 2);
  CHECK(stats.dropped_docs == 1);
  CHECK(stats.dropped_tokens == 2);
}

TEST_CASE("plain loader rejects empty input and empty label fields") {
  CHECK_THROWS_WITH_AS(from_plain(""), "empty corpus", std::runtime_error);
  CHECK_THROWS_WITH_AS(from_plain("\n \n"), "empty corpus", std::runtime_error);
  CHECK_THROWS_WITH_AS(from_plain("ok tokens\n\tno label\n"), "line 2: empty label field",
                       std::runtime_error);
}

TEST_CASE("plain loader skips blank lines without losing line numbers") {
  const Corpus c = from_plain("\na b\n\nc\n");
  CHECK(c.docs.size() == 2);
}

TEST_CASE("identical byte streams load identically") {
  const std::string text = "alpha\tx y z\nbeta\tz z q\n";
  const Corpus a = from_plain(text);
  const Corpus b = from_plain(text);
  REQUIRE(a.docs.size() == b.docs.size());
  for (std::size_t i = 0; i < a.docs.size(); ++i) {
    CHECK(a.docs[i].word_ids == b.docs[i].word_ids);
    CHECK(a.docs[i].gold_label == b.docs[i].gold_label);
  }
  CHECK(a.vocab.words() == b.vocab.words());
  CHECK(a.vocab.counts() == b.vocab.counts());
}

TEST_CASE("vocabulary ids are dense and bidirectional") {
  const Corpus c = from_plain("a b c a\n");
  for (int i = 0; i < c.vocab.size(); ++i) CHECK(c.vocab.id_of(c.vocab.word(i)) == i);
  CHECK(c.vocab.id_of("missing") == -1);
  CHECK_THROWS_AS(Vocabulary({"dup", "dup"}, {1, 1}), std::runtime_error);
}

TEST_CASE("bow loader expands counts into repeated ids") {
  const Corpus c = from_bow("2\n3\n3\n1 1 2\n1 3 1\n2 2 1\n");
  REQUIRE(c.docs.size() == 2);
  CHECK(c.docs[0].word_ids == std::vector<std::int32_t>{0, 0, 2});
  CHECK(c.docs[1].word_ids == std::vector<std::int32_t>{1});
  CHECK(c.vocab.size() == 3);
  CHECK(c.vocab.word(0) == "t1");
  CHECK(c.vocab.count(0) == 2);
  CHECK(c.vocab.count(1) == 1);
}

TEST_CASE("bow loader rejects degenerate or malformed input") {
  CHECK_THROWS_WITH_AS(from_bow("2\n3\n0\n"), "empty corpus", std::runtime_error);
  CHECK_THROWS_WITH_AS(from_bow("1\n2\n1\n1 3 1\n"), "record 1: term id 3 out of range (V=2)",
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(from_bow("2\n2\n1\n3 1 1\n"), "record 1: doc id 3 out of range (D=2)",
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(from_bow("1\n1\n1\n1 1 -2\n"), "record 1: negative count",
                       std::runtime_error);
  CHECK_THROWS_AS(from_bow("1\n1\n2\n1 1 1\n"), std::runtime_error);  // missing record
}

TEST_CASE("bow round-trip preserves word multisets") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int vocab_size = 1 + static_cast<int>(rng.next_below(8));
    const int n_docs = 1 + static_cast<int>(rng.next_below(6));
    Corpus c;
    for (int w = 0; w < vocab_size; ++w) c.vocab.add("w" + std::to_string(w));
    for (int i = 0; i < n_docs; ++i) {
      Document doc;
      const int len = 1 + static_cast<int>(rng.next_below(12));
      for (int j = 0; j < len; ++j)
        doc.word_ids.push_back(static_cast<std::int32_t>(rng.next_below(vocab_size)));
      c.docs.push_back(doc);
    }
    std::ostringstream out;
    write_corpus_bow(c, out);
    const Corpus back = from_bow(out.str());
    REQUIRE(back.docs.size() == c.docs.size());
    for (std::size_t i = 0; i < c.docs.size(); ++i)
      CHECK(sorted_ids(back.docs[i]) == sorted_ids(c.docs[i]));
  }
}

TEST_CASE("short-document filter keeps order, labels, and is idempotent") {
  Corpus c = from_plain("a\tx\nb\tx y\nc\tx y z q r\n");
  std::size_t removed = 0;
  const Corpus f = filter_short_documents(c, 2, &removed);
  CHECK(removed == 1);
  REQUIRE(f.docs.size() == 2);
  CHECK(f.docs[0].word_ids.size() == 2);
  CHECK(f.docs[1].word_ids.size() == 5);
  CHECK(f.docs[0].gold_label == 1);
  CHECK(f.docs[1].gold_label == 2);

  const Corpus again = filter_short_documents(f, 2, &removed);
  CHECK(removed == 0);
  CHECK(again.docs.size() == f.docs.size());

  const Corpus identity = filter_short_documents(c, 1, &removed);
  CHECK(identity.docs.size() == 3);

  CHECK_THROWS_WITH_AS(filter_short_documents(c, 100), "corpus empty after filtering",
                       std::runtime_error);
}

TEST_CASE("labels attach by position") {
  Corpus c = from_plain("x y\nz q\n");
  std::istringstream labels_in("3\n1\n");
  attach_labels(c, load_labels(labels_in));
  CHECK(c.docs[0].gold_label == 3);
  CHECK(c.docs[1].gold_label == 1);

  std::istringstream short_in("3\n");
  CHECK_THROWS_AS(attach_labels(c, load_labels(short_in)), std::runtime_error);
}

TEST_CASE("fake documents have the requested length and valid ids") {
  const Corpus c = from_plain("a b c d\n");
  Rng rng(5);
  for (const FakeMode mode : {FakeMode::kUniform, FakeMode::kUnigram}) {
    for (int len : {1, 2, 17}) {
      const Document doc = sample_fake_document(c.vocab, len, rng, mode);
      CHECK(doc.word_ids.size() == static_cast<std::size_t>(len));
      CHECK_FALSE(doc.gold_label.has_value());
      for (auto id : doc.word_ids) {
        CHECK(id >= 0);
        CHECK(id < c.vocab.size());
      }
    }
  }
}

TEST_CASE("single-word vocabulary always samples that word") {
  const Corpus c = from_plain("only\n");
  Rng rng(9);
  for (const FakeMode mode : {FakeMode::kUniform, FakeMode::kUnigram}) {
    const Document doc = sample_fake_document(c.vocab, 5, rng, mode);
    CHECK(doc.word_ids == std::vector<std::int32_t>{0, 0, 0, 0, 0});
  }
}

TEST_CASE("uniform sampling hits each word at its expected rate") {
  const Corpus c = from_plain("a b c d\n");
  Rng rng(11);
  const int draws = 100000;
  std::vector<int> freq(4, 0);
  const Document doc = sample_fake_document(c.vocab, draws, rng, FakeMode::kUniform);
  for (auto id : doc.word_ids) ++freq[static_cast<std::size_t>(id)];
  const double sigma = std::sqrt(0.25 * 0.75 / draws);
  for (int w = 0; w < 4; ++w)
    CHECK(std::abs(freq[static_cast<std::size_t>(w)] / static_cast<double>(draws) - 0.25) <=
          3.0 * sigma);
}

TEST_CASE("unigram sampling follows the corpus counts") {
  const Corpus c = from_plain("a a a b\n");  // counts 3:1
  Rng rng(13);
  const int draws = 100000;
  UnigramTable table(c.vocab);
  int hits = 0;
  for (int i = 0; i < draws; ++i)
    if (table.sample(rng) == 0) ++hits;
  const double sigma = std::sqrt(0.75 * 0.25 / draws);
  CHECK(std::abs(hits / static_cast<double>(draws) - 0.75) <= 3.0 * sigma);
}

TEST_CASE("fake mode names round-trip") {
  CHECK(fake_mode_from_string("uniform") == FakeMode::kUniform);
  CHECK(fake_mode_from_string("unigram") == FakeMode::kUnigram);
  CHECK(to_string(FakeMode::kUniform) == "uniform");
  CHECK(to_string(FakeMode::kUnigram) == "unigram");
  CHECK_THROWS_AS(fake_mode_from_string("weird"), std::runtime_error);
}

}  // TEST_SUITE
