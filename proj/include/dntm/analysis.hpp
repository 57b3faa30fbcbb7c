#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dntm/corpus.hpp"
#include "dntm/model.hpp"

namespace dntm {

// One topic id in [0, K) per document, aligned with corpus order.
struct ClusterAssignment {
  std::vector<int> labels;
};

// Row t is the word distribution of topic t: P(w|t), each row summing to 1.
struct WordTopicPosterior {
  int num_topics = 0;
  int vocab_size = 0;
  std::vector<double> table;  // K x V, row-major

  double at(int topic, int word) const {
    return table[static_cast<std::size_t>(topic) * vocab_size + word];
  }
};

// argmax_k of the document average distribution; ties go to the smallest
// topic index.
ClusterAssignment assign_clusters(const ModelParams& params, const Corpus& corpus, int threads = 0);

// Corpus-level joint of topics and words: each word w carries weight
// (1/n) * sum_i count_i(w)/m_i, multiplied into its topic distribution,
// and every topic row is then normalized over words.
WordTopicPosterior word_topic_posterior(const ModelParams& params, const Corpus& corpus,
                                        int threads = 0);

// The n words with the largest P(w|topic), descending probability, ties
// broken by vocabulary id; n is clamped to V.
std::vector<std::pair<int, double>> top_words(const WordTopicPosterior& posterior, int topic,
                                              int n);

// (1/N) * sum over predicted clusters of the size of the largest gold class
// inside the cluster.
double purity(std::span<const int> pred, std::span<const int> gold);

// Mutual information over the contingency table, normalized by the mean of
// the marginal entropies. 0*log0 = 0; identical partitions up to relabeling
// give exactly 1; if only one marginal entropy is zero, 0.
double nmi(std::span<const int> pred, std::span<const int> gold);

// All documents' gold labels; throws if any document lacks one.
std::vector<int> corpus_gold_labels(const Corpus& corpus);

}  // namespace dntm
