#include "dntm/corpus.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dntm {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts)
    : words_(std::move(words)), counts_(std::move(counts)) {
  if (words_.size() != counts_.size()) fail("vocabulary words/counts size mismatch");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    auto [it, inserted] = index_.emplace(words_[i], static_cast<int>(i));
    if (!inserted) fail("duplicate word in vocabulary: " + words_[i]);
  }
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) {
    ++counts_[static_cast<std::size_t>(it->second)];
    return it->second;
  }
  int id = static_cast<int>(words_.size());
  words_.push_back(token);
  counts_.push_back(1);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

std::size_t Corpus::total_tokens() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

bool Corpus::has_gold_labels() const {
  if (docs.empty()) return false;
  return std::all_of(docs.begin(), docs.end(),
                     [](const Document& d) { return d.gold_label.has_value(); });
}

Corpus load_corpus_plain(std::istream& in, const Vocabulary* fixed_vocab, LoadStats* stats) {
  Corpus corpus;
  if (fixed_vocab) corpus.vocab = *fixed_vocab;
  std::unordered_map<std::string, int> label_ids;
  LoadStats local;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;

    std::optional<int> label;
    std::string body = line;
    auto tab = line.find('\t');
    if (tab != std::string::npos) {
      std::string name = trim(line.substr(0, tab));
      if (name.empty()) fail("line " + std::to_string(line_no) + ": empty label field");
      auto [it, inserted] = label_ids.emplace(name, static_cast<int>(corpus.label_names.size()));
      if (inserted) corpus.label_names.push_back(name);
      label = it->second;
      body = line.substr(tab + 1);
    }

    Document doc;
    doc.gold_label = label;
    for (const auto& tok : split_ws(body)) {
      if (fixed_vocab) {
        int id = corpus.vocab.id_of(tok);
        if (id < 0) {
          ++local.dropped_tokens;
        } else {
          doc.word_ids.push_back(id);
        }
      } else {
        doc.word_ids.push_back(corpus.vocab.add(tok));
      }
    }
    if (doc.word_ids.empty()) {
      ++local.dropped_docs;
      continue;
    }
    corpus.docs.push_back(std::move(doc));
  }

  if (corpus.docs.empty()) fail("empty corpus");
  if (stats) *stats = local;
  return corpus;
}

namespace {

// Reads one integer from its own line; used by the BoW header.
std::int64_t read_header_int(std::istream& in, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::int64_t v = 0;
    std::istringstream iss(line);
    if (!(iss >> v)) fail(std::string("malformed header: expected integer ") + what);
    std::string rest;
    if (iss >> rest) fail(std::string("malformed header: trailing data after ") + what);
    return v;
  }
  fail(std::string("malformed header: missing ") + what);
}

}  // namespace

Corpus load_corpus_bow(std::istream& in) {
  const std::int64_t num_docs = read_header_int(in, "D");
  const std::int64_t num_terms = read_header_int(in, "V");
  const std::int64_t nnz = read_header_int(in, "NNZ");
  if (num_docs <= 0 || num_terms <= 0 || nnz <= 0) fail("empty corpus");

  std::vector<std::vector<std::int32_t>> docs(static_cast<std::size_t>(num_docs));
  for (std::int64_t rec = 1; rec <= nnz; ++rec) {
    std::int64_t doc_id = 0, term_id = 0, count = 0;
    if (!(in >> doc_id >> term_id >> count))
      fail("unexpected end of stream at record " + std::to_string(rec));
    if (doc_id < 1 || doc_id > num_docs)
      fail("record " + std::to_string(rec) + ": doc id " + std::to_string(doc_id) +
           " out of range (D=" + std::to_string(num_docs) + ")");
    if (term_id < 1 || term_id > num_terms)
      fail("record " + std::to_string(rec) + ": term id " + std::to_string(term_id) +
           " out of range (V=" + std::to_string(num_terms) + ")");
    if (count < 0) fail("record " + std::to_string(rec) + ": negative count");
    auto& doc = docs[static_cast<std::size_t>(doc_id - 1)];
    doc.insert(doc.end(), static_cast<std::size_t>(count), static_cast<std::int32_t>(term_id - 1));
  }

  Corpus corpus;
  std::vector<std::string> words(static_cast<std::size_t>(num_terms));
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(num_terms), 0);
  for (std::size_t t = 0; t < words.size(); ++t) words[t] = "t" + std::to_string(t + 1);
  for (const auto& doc : docs)
    for (std::int32_t id : doc) ++counts[static_cast<std::size_t>(id)];
  corpus.vocab = Vocabulary(std::move(words), std::move(counts));

  for (auto& doc : docs) {
    if (doc.empty()) continue;  // documents with no entries are omitted
    Document d;
    d.word_ids = std::move(doc);
    corpus.docs.push_back(std::move(d));
  }
  if (corpus.docs.empty()) fail("empty corpus");
  return corpus;
}

void write_corpus_bow(const Corpus& corpus, std::ostream& out) {
  std::vector<std::map<std::int32_t, std::uint64_t>> term_counts(corpus.docs.size());
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    for (std::int32_t id : corpus.docs[i].word_ids) ++term_counts[i][id];
    nnz += term_counts[i].size();
  }
  out << corpus.docs.size() << '\n' << corpus.vocab.size() << '\n' << nnz << '\n';
  for (std::size_t i = 0; i < term_counts.size(); ++i)
    for (const auto& [term, count] : term_counts[i])
      out << (i + 1) << ' ' << (term + 1) << ' ' << count << '\n';
}

std::vector<int> load_labels(std::istream& in) {
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream iss(line);
    int v = 0;
    std::string rest;
    if (!(iss >> v) || (iss >> rest))
      fail("labels file line " + std::to_string(line_no) + ": expected one integer");
    labels.push_back(v);
  }
  return labels;
}

void attach_labels(Corpus& corpus, const std::vector<int>& labels) {
  if (labels.size() != corpus.docs.size())
    fail("labels count mismatch (" + std::to_string(labels.size()) + " labels, " +
         std::to_string(corpus.docs.size()) + " documents)");
  for (std::size_t i = 0; i < labels.size(); ++i) corpus.docs[i].gold_label = labels[i];
}

Corpus filter_short_documents(const Corpus& corpus, std::size_t min_doc_len,
                              std::size_t* removed) {
  if (min_doc_len < 1) fail("min_doc_len must be >= 1");
  Corpus out;
  out.vocab = corpus.vocab;
  out.label_names = corpus.label_names;
  for (const auto& doc : corpus.docs)
    if (doc.size() >= min_doc_len) out.docs.push_back(doc);
  if (removed) *removed = corpus.docs.size() - out.docs.size();
  if (out.docs.empty()) fail("corpus empty after filtering");
  return out;
}

FakeMode fake_mode_from_string(const std::string& s) {
  if (s == "uniform") return FakeMode::kUniform;
  if (s == "unigram") return FakeMode::kUnigram;
  fail("unknown fake mode '" + s + "' (expected uniform or unigram)");
}

std::string to_string(FakeMode mode) {
  return mode == FakeMode::kUniform ? "uniform" : "unigram";
}

UnigramTable::UnigramTable(const Vocabulary& vocab) {
  cum_.reserve(static_cast<std::size_t>(vocab.size()));
  std::uint64_t total = 0;
  for (int i = 0; i < vocab.size(); ++i) {
    total += vocab.count(i);
    cum_.push_back(total);
  }
  if (total == 0) fail("unigram table over a vocabulary with no counts");
}

int UnigramTable::sample(Rng& rng) const {
  std::uint64_t r = rng.next_below(cum_.back());
  auto it = std::upper_bound(cum_.begin(), cum_.end(), r);
  return static_cast<int>(it - cum_.begin());
}

Document sample_fake_document(const Vocabulary& vocab, std::size_t length, Rng& rng,
                              FakeMode mode, const UnigramTable* table) {
  if (vocab.size() < 1) fail("cannot sample from an empty vocabulary");
  if (length < 1) fail("fake document length must be >= 1");
  Document doc;
  doc.word_ids.reserve(length);
  if (mode == FakeMode::kUniform) {
    for (std::size_t j = 0; j < length; ++j)
      doc.word_ids.push_back(static_cast<std::int32_t>(rng.next_below(
          static_cast<std::uint64_t>(vocab.size()))));
  } else {
    std::optional<UnigramTable> local;
    if (!table) local.emplace(vocab);
    const UnigramTable& t = table ? *table : *local;
    for (std::size_t j = 0; j < length; ++j)
      doc.word_ids.push_back(static_cast<std::int32_t>(t.sample(rng)));
  }
  return doc;
}

}  // namespace dntm
