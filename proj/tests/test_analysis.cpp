#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dntm/analysis.hpp"
#include "dntm/kmeans.hpp"
#include "dntm/model.hpp"
#include "dntm/rng.hpp"

using namespace dntm;

namespace {

Corpus make_corpus(int vocab_size, std::vector<std::vector<std::int32_t>> docs,
                   std::vector<int> gold = {}) {
  Corpus corpus;
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(vocab_size), 0);
  for (const auto& ids : docs)
    for (std::int32_t w : ids) ++counts[static_cast<std::size_t>(w)];
  std::vector<std::string> words;
  for (int w = 0; w < vocab_size; ++w) {
    words.push_back("w" + std::to_string(w));
    counts[static_cast<std::size_t>(w)] = std::max<std::uint64_t>(counts[w], 1);
  }
  corpus.vocab = Vocabulary(std::move(words), std::move(counts));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Document d;
    d.word_ids = std::move(docs[i]);
    if (i < gold.size()) d.gold_label = gold[i];
    corpus.docs.push_back(std::move(d));
  }
  return corpus;
}

// Parameters that send word w to topic (w % K) almost deterministically:
// embeddings are scaled one-hot vectors and the projection is the identity.
ModelParams sharp_params(int vocab_size, int num_topics, double strength = 50.0) {
  ModelParams p;
  p.vocab_size = vocab_size;
  p.embed_dim = num_topics;
  p.num_topics = num_topics;
  p.embed.assign(static_cast<std::size_t>(vocab_size) * num_topics, 0.0);
  p.proj.assign(static_cast<std::size_t>(num_topics) * num_topics, 0.0);
  p.bias.assign(static_cast<std::size_t>(num_topics), 0.0);
  for (int w = 0; w < vocab_size; ++w)
    p.embed[static_cast<std::size_t>(w) * num_topics + (w % num_topics)] = strength;
  for (int k = 0; k < num_topics; ++k) p.proj[static_cast<std::size_t>(k) * num_topics + k] = 1.0;
  return p;
}

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

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("cluster assignment picks the dominant topic") {
  const ModelParams params = sharp_params(6, 3);
  const Corpus corpus = make_corpus(6, {{0, 0, 3}, {1, 4, 4}, {2, 5, 2}});
  const ClusterAssignment a = assign_clusters(params, corpus);
  CHECK(a.labels == std::vector<int>{0, 1, 2});
}

TEST_CASE("assignment ties resolve to the smallest topic index") {
  const ModelParams params = zero_params(4, 2, 5);  // uniform everywhere
  const Corpus corpus = make_corpus(4, {{0, 1}, {2}, {3, 3, 3}});
  const ClusterAssignment a = assign_clusters(params, corpus);
  CHECK(a.labels == std::vector<int>{0, 0, 0});
}

TEST_CASE("reordering documents reorders the labels with them") {
  const ModelParams params = sharp_params(6, 3);
  Corpus corpus = make_corpus(6, {{0}, {1}, {2}, {3}, {4, 4}});
  const auto before = assign_clusters(params, corpus).labels;
  std::reverse(corpus.docs.begin(), corpus.docs.end());
  auto after = assign_clusters(params, corpus).labels;
  std::reverse(after.begin(), after.end());
  CHECK(after == before);
}

TEST_CASE("posterior rows are distributions") {
  Rng rng(11);
  const ModelParams params = init_params(12, 4, 3, rng, 0.8);
  const Corpus corpus = make_corpus(12, {{0, 1, 2, 3}, {4, 5}, {6, 7, 8, 9, 10, 11}, {0, 11}});
  const WordTopicPosterior post = word_topic_posterior(params, corpus);
  REQUIRE(post.num_topics == 3);
  REQUIRE(post.vocab_size == 12);
  for (int t = 0; t < post.num_topics; ++t) {
    double sum = 0.0;
    for (int w = 0; w < post.vocab_size; ++w) {
      CHECK(post.at(t, w) >= 0.0);
      sum += post.at(t, w);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("a single-word vocabulary concentrates every topic on it") {
  Rng rng(13);
  const ModelParams params = init_params(1, 3, 4, rng, 0.5);
  const Corpus corpus = make_corpus(1, {{0, 0}, {0}});
  const WordTopicPosterior post = word_topic_posterior(params, corpus);
  for (int t = 0; t < 4; ++t) CHECK(post.at(t, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior matches an occurrence-by-occurrence evaluation") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int vocab_size = 3 + static_cast<int>(rng.next_below(8));
    const int num_topics = 2 + static_cast<int>(rng.next_below(3));
    const ModelParams params = init_params(vocab_size, 3, num_topics, rng, 1.0);

    const int n_docs = 1 + static_cast<int>(rng.next_below(5));
    std::vector<std::vector<std::int32_t>> docs(static_cast<std::size_t>(n_docs));
    for (auto& ids : docs) {
      const int len = 1 + static_cast<int>(rng.next_below(7));
      for (int j = 0; j < len; ++j)
        ids.push_back(static_cast<std::int32_t>(rng.next_below(vocab_size)));
    }
    const Corpus corpus = make_corpus(vocab_size, docs);

    // Straight from the definition: every occurrence contributes its topic
    // distribution weighted by 1/(n_docs * doc_length); rows then normalize.
    std::vector<double> joint(static_cast<std::size_t>(num_topics) * vocab_size, 0.0);
    for (const auto& doc : corpus.docs) {
      const double w = 1.0 / (static_cast<double>(n_docs) * static_cast<double>(doc.size()));
      for (std::int32_t word : doc.word_ids) {
        const TopicDist p = word_topic_dist(params, word);
        for (int t = 0; t < num_topics; ++t)
          joint[static_cast<std::size_t>(t) * vocab_size + word] += w * p.p[t];
      }
    }
    for (int t = 0; t < num_topics; ++t) {
      double sum = 0.0;
      for (int w = 0; w < vocab_size; ++w) sum += joint[static_cast<std::size_t>(t) * vocab_size + w];
      for (int w = 0; w < vocab_size; ++w) joint[static_cast<std::size_t>(t) * vocab_size + w] /= sum;
    }

    const WordTopicPosterior post = word_topic_posterior(params, corpus);
    for (int t = 0; t < num_topics; ++t)
      for (int w = 0; w < vocab_size; ++w)
        CHECK(std::abs(post.at(t, w) - joint[static_cast<std::size_t>(t) * vocab_size + w]) <=
              1e-12);
  }
}

TEST_CASE("posterior input validation") {
  Rng rng(19);
  const ModelParams params = init_params(5, 3, 2, rng, 0.5);
  Corpus empty;
  CHECK_THROWS_WITH_AS(word_topic_posterior(params, empty), "empty corpus", std::invalid_argument);
  const Corpus mismatched = make_corpus(4, {{0, 1}});
  CHECK_THROWS_WITH_AS(word_topic_posterior(params, mismatched),
                       "corpus vocabulary does not match parameters", std::invalid_argument);
}

TEST_CASE("top words sort by probability with id tiebreaks") {
  WordTopicPosterior post;
  post.num_topics = 2;
  post.vocab_size = 4;
  post.table = {0.1, 0.4, 0.2, 0.3,      // topic 0: ranked 1,3,2,0
                0.25, 0.25, 0.25, 0.25}; // topic 1: all tied, ranked by id

  const auto ranked = top_words(post, 0, 4);
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0] == std::pair<int, double>{1, 0.4});
  CHECK(ranked[1] == std::pair<int, double>{3, 0.3});
  CHECK(ranked[2] == std::pair<int, double>{2, 0.2});
  CHECK(ranked[3] == std::pair<int, double>{0, 0.1});

  const auto tied = top_words(post, 1, 4);
  for (int i = 0; i < 4; ++i) CHECK(tied[i].first == i);

  // Asking for fewer words returns a prefix of the full ranking.
  const auto prefix = top_words(post, 0, 2);
  REQUIRE(prefix.size() == 2);
  CHECK(prefix[0] == ranked[0]);
  CHECK(prefix[1] == ranked[1]);

  // n larger than the vocabulary clamps.
  CHECK(top_words(post, 0, 100).size() == 4);

  CHECK_THROWS_AS(top_words(post, 2, 3), std::out_of_range);
  CHECK_THROWS_AS(top_words(post, -1, 3), std::out_of_range);
}

TEST_CASE("purity on hand-checked tables") {
  const std::vector<int> perfect_pred{0, 0, 1, 1, 2};
  const std::vector<int> perfect_gold{4, 4, 7, 7, 9};
  CHECK(purity(perfect_pred, perfect_gold) == 1.0);

  const std::vector<int> pred{0, 0, 0, 1, 1, 1};
  const std::vector<int> gold{0, 0, 1, 1, 1, 1};
  CHECK(purity(pred, gold) == 5.0 / 6.0);

  // One predicted cluster over 20 singleton classes.
  std::vector<int> one_cluster(20, 0), all_classes(20);
  for (int i = 0; i < 20; ++i) all_classes[i] = i;
  CHECK(purity(one_cluster, all_classes) == 1.0 / 20.0);

  const std::vector<int> short_pred{0, 1};
  CHECK_THROWS_AS(purity(short_pred, gold), std::invalid_argument);
  CHECK_THROWS_AS(purity({}, {}), std::invalid_argument);
}

TEST_CASE("nmi on hand-checked tables") {
  // Identical up to relabeling: exactly 1.
  const std::vector<int> pred_relab{2, 2, 0, 0, 1};
  const std::vector<int> gold_relab{0, 0, 1, 1, 2};
  CHECK(nmi(pred_relab, gold_relab) == 1.0);

  // Statistically independent partitions: exactly 0.
  const std::vector<int> pred_ind{0, 0, 1, 1};
  const std::vector<int> gold_ind{0, 1, 0, 1};
  CHECK(nmi(pred_ind, gold_ind) == 0.0);

  // A single predicted cluster has zero entropy: defined as 0.
  const std::vector<int> pred_one(4, 0);
  const std::vector<int> gold_four{0, 1, 2, 3};
  CHECK(nmi(pred_one, gold_four) == 0.0);

  // Both sides a single cluster: identical partitions, exactly 1.
  const std::vector<int> pred_const{3, 3};
  const std::vector<int> gold_const{5, 5};
  CHECK(nmi(pred_const, gold_const) == 1.0);

  // Frozen values computed independently from the contingency tables.
  const std::vector<int> p7{0, 0, 0, 1, 1, 1}, g7{0, 0, 1, 1, 1, 1};
  CHECK(nmi(p7, g7) == doctest::Approx(0.47870397138567994).epsilon(1e-12));

  const std::vector<int> p8{0, 0, 1, 1, 2, 2}, g8{0, 0, 0, 1, 1, 1};
  CHECK(nmi(p8, g8) == doctest::Approx(0.5158037429793888).epsilon(1e-12));

  const std::vector<int> p9{0, 1, 1, 1}, g9{0, 0, 1, 1};
  CHECK(nmi(p9, g9) == doctest::Approx(0.3437110184854508).epsilon(1e-12));

  const std::vector<int> p12{0, 0, 1, 1, 2, 2, 0, 1}, g12{0, 1, 0, 1, 0, 1, 0, 1};
  CHECK(nmi(p12, g12) == doctest::Approx(0.04784964496744994).epsilon(1e-12));

  const std::vector<std::pair<std::vector<int>, std::vector<int>>> cases{
      {p7, g7}, {p8, g8}, {p9, g9}, {p12, g12}};
  for (const auto& [p, g] : cases) {
    const double v = nmi(p, g);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("metrics are invariant under relabeling the prediction") {
  const std::vector<int> pred{0, 0, 1, 1, 2, 2, 0, 1};
  const std::vector<int> gold{0, 1, 0, 1, 0, 1, 0, 1};
  std::vector<int> relabeled(pred.size());
  const int map[3] = {2, 0, 1};
  for (std::size_t i = 0; i < pred.size(); ++i) relabeled[i] = map[pred[i]];
  CHECK(purity(relabeled, gold) == purity(pred, gold));
  // Relabeling reorders the floating-point accumulation, so the match is to
  // near machine precision rather than bitwise.
  CHECK(nmi(relabeled, gold) == doctest::Approx(nmi(pred, gold)).epsilon(1e-12));
}

TEST_CASE("gold labels are collected or refused as a whole") {
  Corpus corpus = make_corpus(3, {{0}, {1}, {2}}, {1, 0, 1});
  CHECK(corpus_gold_labels(corpus) == std::vector<int>{1, 0, 1});
  corpus.docs[1].gold_label.reset();
  CHECK_THROWS_WITH_AS(corpus_gold_labels(corpus), "document 1 has no gold label",
                       std::invalid_argument);
}

TEST_CASE("kmeans separates word-disjoint document groups") {
  std::vector<std::vector<std::int32_t>> docs;
  std::vector<int> gold;
  Rng rng(23);
  for (int i = 0; i < 10; ++i) {
    std::vector<std::int32_t> ids;
    for (int j = 0; j < 6; ++j) ids.push_back(static_cast<std::int32_t>(rng.next_below(3)));
    docs.push_back(ids);
    gold.push_back(0);
  }
  for (int i = 0; i < 10; ++i) {
    std::vector<std::int32_t> ids;
    for (int j = 0; j < 6; ++j) ids.push_back(static_cast<std::int32_t>(3 + rng.next_below(3)));
    docs.push_back(ids);
    gold.push_back(1);
  }
  const Corpus corpus = make_corpus(6, docs, gold);

  const KmeansResult result = kmeans_baseline(corpus, 2, /*seed=*/7);
  CHECK(result.iterations >= 1);
  CHECK(result.inertia >= 0.0);
  CHECK(purity(result.assignment.labels, gold) == 1.0);

  // Same seed, same clustering, bit for bit.
  const KmeansResult again = kmeans_baseline(corpus, 2, /*seed=*/7);
  CHECK(again.assignment.labels == result.assignment.labels);
  CHECK(again.inertia == result.inertia);

  CHECK_THROWS_WITH_AS(kmeans_baseline(corpus, 21, 1), "more clusters than documents",
                       std::invalid_argument);
  CHECK_THROWS_AS(kmeans_baseline(corpus, 0, 1), std::invalid_argument);
}

TEST_CASE("kmeans with as many clusters as documents is exact") {
  const Corpus corpus = make_corpus(4, {{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  const KmeansResult result = kmeans_baseline(corpus, 4, 3);
  // Four orthogonal points, four clusters: every document is its own
  // centroid and the inertia collapses to zero.
  CHECK(result.inertia == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<int> sorted = result.assignment.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
}

}  // TEST_SUITE
