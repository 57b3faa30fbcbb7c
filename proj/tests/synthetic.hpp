#pragma once

// Synthetic corpus with an unambiguous optimal clustering: topics own
// disjoint word ranges, every document draws all its words uniformly from
// one topic's range, and the gold label is that topic.

#include <cstdint>
#include <string>

#include "dntm/corpus.hpp"
#include "dntm/rng.hpp"

namespace dntm_tests {

inline dntm::Corpus make_disjoint_topic_corpus(int num_docs, int words_per_doc, int num_topics,
                                               int words_per_topic, std::uint64_t seed) {
  dntm::Corpus corpus;
  for (int t = 0; t < num_topics; ++t)
    for (int w = 0; w < words_per_topic; ++w)
      corpus.vocab.add("t" + std::to_string(t) + "_w" + std::to_string(w));

  dntm::Rng rng(seed);
  corpus.docs.resize(static_cast<std::size_t>(num_docs));
  for (int i = 0; i < num_docs; ++i) {
    const int topic = i % num_topics;
    dntm::Document& doc = corpus.docs[static_cast<std::size_t>(i)];
    doc.gold_label = topic;
    doc.word_ids.reserve(static_cast<std::size_t>(words_per_doc));
    for (int j = 0; j < words_per_doc; ++j) {
      const int w = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(words_per_topic)));
      doc.word_ids.push_back(topic * words_per_topic + w);
    }
  }
  // Refresh vocabulary counts to the actual corpus frequencies.
  dntm::Vocabulary counted;
  for (const auto& doc : corpus.docs)
    for (std::int32_t w : doc.word_ids) counted.add(corpus.vocab.word(w));
  // counted may miss never-drawn words; keep the original full vocabulary,
  // folding in observed counts where available.
  std::vector<std::string> words = corpus.vocab.words();
  std::vector<std::uint64_t> counts(words.size(), 1);
  for (std::size_t w = 0; w < words.size(); ++w) {
    const int id = counted.id_of(words[w]);
    if (id >= 0) counts[w] = counted.count(id);
  }
  corpus.vocab = dntm::Vocabulary(std::move(words), std::move(counts));
  return corpus;
}

}  // namespace dntm_tests
