#include <stdexcept>
#include <cmath>

#include "doctest.h"
#include "dntm/model.hpp"
#include "dntm/rng.hpp"

using namespace dntm;

namespace {

ModelParams zero_params(int vocab_size, int embed_dim, int num_topics) {
  ModelParams p;
  p.vocab_size = vocab_size;
  p.embed_dim = embed_dim;
  p.num_topics = num_topics;
  p.embed.assign(static_cast<std::size_t>(vocab_size) * embed_dim, 0.0);
  p.proj.assign(static_cast<std::size_t>(num_topics) * embed_dim, 0.0);
  p.bias.assign(static_cast<std::size_t>(num_topics), 0.0);
  return p;
}

Document make_doc(std::vector<std::int32_t> ids) {
  Document d;
  d.word_ids = std::move(ids);
  return d;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("initialization is deterministic and range-bounded") {
  Rng a(42), b(42);
  const ModelParams p1 = init_params(100, 16, 7, a, 0.05);
  const ModelParams p2 = init_params(100, 16, 7, b, 0.05);
  CHECK(p1.embed == p2.embed);
  CHECK(p1.proj == p2.proj);
  CHECK(p1.bias == p2.bias);

  for (double x : p1.embed) CHECK(std::abs(x) <= 0.05);
  for (double x : p1.proj) CHECK(std::abs(x) <= 0.05);
  for (double x : p1.bias) CHECK(x == 0.0);
  CHECK(p1.all_finite());
}

TEST_CASE("zero weights and bias give the uniform distribution") {
  const ModelParams p = zero_params(4, 3, 5);
  for (int w = 0; w < 4; ++w) {
    const TopicDist dist = word_topic_dist(p, w);
    for (double x : dist.p) CHECK(x == doctest::Approx(0.2).epsilon(1e-12));
  }
}

TEST_CASE("a large bias dominates the softmax") {
  ModelParams p = zero_params(1, 2, 5);
  p.bias[0] = 10.0;
  const TopicDist dist = word_topic_dist(p, 0);
  const double expected = std::exp(10.0) / (std::exp(10.0) + 4.0);
  CHECK(dist.p[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(dist.p[0] > 0.9998);
}

TEST_CASE("softmax is invariant to a constant logit shift") {
  Rng rng(3);
  ModelParams p = init_params(6, 4, 3, rng, 0.5);
  const TopicDist before = word_topic_dist(p, 2);
  for (auto& b : p.bias) b += 123.0;
  const TopicDist after = word_topic_dist(p, 2);
  for (int k = 0; k < 3; ++k)
    CHECK(after.p[static_cast<std::size_t>(k)] ==
          doctest::Approx(before.p[static_cast<std::size_t>(k)]).epsilon(1e-12));
}

TEST_CASE("softmax survives huge logits") {
  ModelParams p = zero_params(1, 1, 3);
  p.embed[0] = 1.0;
  p.proj = {1e4, -1e4, 0.0};
  const TopicDist dist = word_topic_dist(p, 0);
  double sum = 0.0;
  for (double x : dist.p) {
    CHECK(std::isfinite(x));
    CHECK(x >= 0.0);
    sum += x;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("every word distribution is normalized") {
  Rng rng(17);
  const ModelParams p = init_params(30, 8, 6, rng, 2.0);
  for (int w = 0; w < 30; ++w) {
    const TopicDist dist = word_topic_dist(p, w);
    double sum = 0.0;
    for (double x : dist.p) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("document distribution is the mean over occurrences") {
  Rng rng(5);
  const ModelParams p = init_params(10, 4, 3, rng, 1.0);

  const TopicDist single = doc_topic_dist(p, make_doc({7}));
  const TopicDist word7 = word_topic_dist(p, 7);
  for (int k = 0; k < 3; ++k)
    CHECK(single.p[static_cast<std::size_t>(k)] == word7.p[static_cast<std::size_t>(k)]);

  const TopicDist pair = doc_topic_dist(p, make_doc({2, 9}));
  const TopicDist w2 = word_topic_dist(p, 2);
  const TopicDist w9 = word_topic_dist(p, 9);
  for (int k = 0; k < 3; ++k)
    CHECK(pair.p[static_cast<std::size_t>(k)] ==
          doctest::Approx(0.5 * (w2.p[static_cast<std::size_t>(k)] +
                                 w9.p[static_cast<std::size_t>(k)]))
              .epsilon(1e-12));
}

TEST_CASE("document distribution ignores word order exactly") {
  Rng rng(8);
  const ModelParams p = init_params(12, 5, 4, rng, 1.0);
  const TopicDist a = doc_topic_dist(p, make_doc({1, 5, 5, 9, 2, 1}));
  const TopicDist b = doc_topic_dist(p, make_doc({9, 1, 2, 5, 1, 5}));
  CHECK(a.p == b.p);  // bitwise, not approximate

  double sum = 0.0;
  for (double x : a.p) sum += x;
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("bad inputs are rejected") {
  const ModelParams p = zero_params(3, 2, 2);
  CHECK_THROWS_AS(word_topic_dist(p, -1), std::out_of_range);
  CHECK_THROWS_AS(word_topic_dist(p, 3), std::out_of_range);
  CHECK_THROWS_AS(doc_topic_dist(p, make_doc({})), std::invalid_argument);
}

}  // TEST_SUITE
