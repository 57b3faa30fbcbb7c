#pragma once

#include <span>
#include <vector>

#include "dntm/corpus.hpp"
#include "dntm/rng.hpp"

namespace dntm {

// Length-K probability vector: a topic distribution of a word occurrence or
// a document average.
struct TopicDist {
  std::vector<double> p;
};

// The learnable parameters: word embeddings, topic projection, topic bias.
// The topic distribution of a word w is softmax(proj * embed[w] + bias); it
// depends on the word alone, not on the containing document.
struct ModelParams {
  int vocab_size = 0;  // V
  int embed_dim = 0;   // d
  int num_topics = 0;  // K

  std::vector<double> embed;  // V x d, row-major
  std::vector<double> proj;   // K x d, row-major
  std::vector<double> bias;   // K

  std::span<const double> embed_row(int w) const {
    return {embed.data() + static_cast<std::size_t>(w) * embed_dim,
            static_cast<std::size_t>(embed_dim)};
  }
  std::span<const double> proj_row(int k) const {
    return {proj.data() + static_cast<std::size_t>(k) * embed_dim,
            static_cast<std::size_t>(embed_dim)};
  }

  bool all_finite() const;
};

// embed and proj entries i.i.d. uniform in [-scale, +scale]; bias zero.
// Deterministic given the rng state.
ModelParams init_params(int vocab_size, int embed_dim, int num_topics, Rng& rng,
                        double scale = 0.05);

// Numerically stable in-place softmax (max subtraction).
void softmax_inplace(std::span<double> v);

// logits = proj * embed[word_id] + bias, written to out (size K).
void word_logits(const ModelParams& params, int word_id, std::span<double> out);

// softmax(proj * embed[word_id] + bias). Throws std::out_of_range for bad ids.
TopicDist word_topic_dist(const ModelParams& params, int word_id);

// Arithmetic mean of word_topic_dist over the document's occurrences,
// repeated words counted with multiplicity. Accumulation runs over the
// sorted unique words so the result is exactly permutation-invariant.
TopicDist doc_topic_dist(const ModelParams& params, const Document& doc);

}  // namespace dntm
