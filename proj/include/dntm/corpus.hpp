#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dntm/rng.hpp"

namespace dntm {

// Bidirectional word <-> id map with per-token corpus frequencies.
// Ids are dense in [0, V), assigned in first-occurrence order.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Rebuild from a saved word list (+ counts). Throws on duplicate words.
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts);

  // Inserts the token if new, bumps its count, returns its id.
  int add(const std::string& token);
  // -1 when the token is unknown.
  int id_of(const std::string& token) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::uint64_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, int> index_;
};

// A document is a sequence of vocabulary ids. Order carries no semantics;
// the model is permutation-invariant over words.
struct Document {
  std::vector<std::int32_t> word_ids;
  std::optional<int> gold_label;  // evaluation only

  std::size_t size() const { return word_ids.size(); }
};

struct Corpus {
  std::vector<Document> docs;
  Vocabulary vocab;
  // Non-empty when documents carry string labels (plain format); gold_label
  // indexes into this list.
  std::vector<std::string> label_names;

  std::size_t total_tokens() const;
  bool has_gold_labels() const;
};

struct LoadStats {
  std::size_t dropped_tokens = 0;  // unknown tokens under a fixed vocabulary
  std::size_t dropped_docs = 0;    // documents left empty after dropping
};

// Plain format: one document per line, optional leading "label<TAB>",
// tokens whitespace-separated. When fixed_vocab is given, unknown tokens
// are dropped (counted in stats); otherwise the vocabulary is built from
// the stream.
Corpus load_corpus_plain(std::istream& in, const Vocabulary* fixed_vocab = nullptr,
                         LoadStats* stats = nullptr);

// Sparse bag-of-words format: three integer header lines (D, V, NNZ), then
// NNZ lines "docId termId count" with 1-based ids. Documents with no
// entries are omitted. Vocabulary words are synthesized as "t1".."tV".
Corpus load_corpus_bow(std::istream& in);

// Inverse of load_corpus_bow up to word multisets per document.
void write_corpus_bow(const Corpus& corpus, std::ostream& out);

// One integer class id per line.
std::vector<int> load_labels(std::istream& in);

// Attaches labels[i] to docs[i]; sizes must match.
void attach_labels(Corpus& corpus, const std::vector<int>& labels);

// Keeps exactly the documents with size() >= min_doc_len, order preserved.
Corpus filter_short_documents(const Corpus& corpus, std::size_t min_doc_len,
                              std::size_t* removed = nullptr);

enum class FakeMode { kUniform, kUnigram };

FakeMode fake_mode_from_string(const std::string& s);
std::string to_string(FakeMode mode);

// Cumulative-count table for unigram draws proportional to vocab counts.
class UnigramTable {
 public:
  explicit UnigramTable(const Vocabulary& vocab);
  int sample(Rng& rng) const;

 private:
  std::vector<std::uint64_t> cum_;
};

// A document of `length` ids drawn i.i.d. from the vocabulary, uniformly or
// proportional to corpus counts. Pass a prebuilt table to avoid rebuilding
// the unigram CDF on every call.
Document sample_fake_document(const Vocabulary& vocab, std::size_t length, Rng& rng,
                              FakeMode mode = FakeMode::kUniform,
                              const UnigramTable* table = nullptr);

}  // namespace dntm
