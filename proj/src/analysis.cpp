#include "dntm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dntm {

namespace {

int resolve_threads(int threads) {
#ifdef _OPENMP
  return threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
  return 1;
#endif
}

}  // namespace

ClusterAssignment assign_clusters(const ModelParams& params, const Corpus& corpus, int threads) {
  const int nt = resolve_threads(threads);
  const int n = static_cast<int>(corpus.docs.size());
  ClusterAssignment out;
  out.labels.assign(static_cast<std::size_t>(n), 0);

#pragma omp parallel for num_threads(nt) schedule(static)
  for (int i = 0; i < n; ++i) {
    const TopicDist dist = doc_topic_dist(params, corpus.docs[static_cast<std::size_t>(i)]);
    int best = 0;
    for (int k = 1; k < params.num_topics; ++k)
      if (dist.p[static_cast<std::size_t>(k)] > dist.p[static_cast<std::size_t>(best)]) best = k;
    out.labels[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

WordTopicPosterior word_topic_posterior(const ModelParams& params, const Corpus& corpus,
                                        int threads) {
  if (corpus.docs.empty()) throw std::invalid_argument("empty corpus");
  if (corpus.vocab.size() != params.vocab_size)
    throw std::invalid_argument("corpus vocabulary does not match parameters");
  const int nt = resolve_threads(threads);
  const int K = params.num_topics;
  const int V = params.vocab_size;

  // Word weights: (1/n) * sum_i count_i(w) / m_i.
  std::vector<double> weight(static_cast<std::size_t>(V), 0.0);
  for (const Document& doc : corpus.docs) {
    const double inv_len = 1.0 / static_cast<double>(doc.word_ids.size());
    for (std::int32_t w : doc.word_ids) weight[static_cast<std::size_t>(w)] += inv_len;
  }
  const double inv_n = 1.0 / static_cast<double>(corpus.docs.size());
  for (auto& x : weight) x *= inv_n;

  WordTopicPosterior post;
  post.num_topics = K;
  post.vocab_size = V;
  post.table.assign(static_cast<std::size_t>(K) * V, 0.0);

  // Joint: table[t, w] = P(topic=t | w) * weight[w].
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int w = 0; w < V; ++w) {
    if (weight[static_cast<std::size_t>(w)] == 0.0) continue;
    const TopicDist dist = word_topic_dist(params, w);
    for (int k = 0; k < K; ++k)
      post.table[static_cast<std::size_t>(k) * V + w] =
          dist.p[static_cast<std::size_t>(k)] * weight[static_cast<std::size_t>(w)];
  }

  // Row-normalize into P(w|t).
  for (int k = 0; k < K; ++k) {
    double* row = post.table.data() + static_cast<std::size_t>(k) * V;
    double sum = 0.0;
    for (int w = 0; w < V; ++w) sum += row[w];
    if (!(sum > 0.0)) throw std::runtime_error("topic with zero mass over all words");
    for (int w = 0; w < V; ++w) row[w] /= sum;
  }
  return post;
}

std::vector<std::pair<int, double>> top_words(const WordTopicPosterior& posterior, int topic,
                                              int n) {
  if (topic < 0 || topic >= posterior.num_topics)
    throw std::out_of_range("topic index out of range");
  n = std::min(n, posterior.vocab_size);
  if (n < 0) n = 0;

  std::vector<int> order(static_cast<std::size_t>(posterior.vocab_size));
  for (int w = 0; w < posterior.vocab_size; ++w) order[static_cast<std::size_t>(w)] = w;
  const double* row = posterior.table.data() + static_cast<std::size_t>(topic) * posterior.vocab_size;
  std::partial_sort(order.begin(), order.begin() + n, order.end(), [&](int a, int b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });

  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.emplace_back(order[static_cast<std::size_t>(i)], row[order[static_cast<std::size_t>(i)]]);
  return out;
}

namespace {

// Contingency counts keyed by (pred, gold), plus marginals.
struct Contingency {
  std::map<std::pair<int, int>, std::size_t> cells;
  std::map<int, std::size_t> pred_sizes;
  std::map<int, std::size_t> gold_sizes;
  std::size_t n = 0;
};

Contingency make_contingency(std::span<const int> pred, std::span<const int> gold) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("prediction and gold label lengths differ");
  if (pred.empty()) throw std::invalid_argument("empty label lists");
  Contingency c;
  c.n = pred.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++c.cells[{pred[i], gold[i]}];
    ++c.pred_sizes[pred[i]];
    ++c.gold_sizes[gold[i]];
  }
  return c;
}

}  // namespace

double purity(std::span<const int> pred, std::span<const int> gold) {
  const Contingency c = make_contingency(pred, gold);
  std::map<int, std::size_t> best;  // per predicted cluster, largest cell
  for (const auto& [key, count] : c.cells) {
    auto& b = best[key.first];
    b = std::max(b, count);
  }
  std::size_t agree = 0;
  for (const auto& [cluster, count] : best) agree += count;
  return static_cast<double>(agree) / static_cast<double>(c.n);
}

double nmi(std::span<const int> pred, std::span<const int> gold) {
  const Contingency c = make_contingency(pred, gold);
  const double n = static_cast<double>(c.n);

  // Identical partitions up to relabeling: every cluster maps onto exactly
  // one class and vice versa. Exact 1.0 by definition.
  if (c.cells.size() == c.pred_sizes.size() && c.cells.size() == c.gold_sizes.size()) return 1.0;

  double h_pred = 0.0;
  for (const auto& [label, count] : c.pred_sizes) {
    const double p = static_cast<double>(count) / n;
    h_pred -= p * std::log(p);
  }
  double h_gold = 0.0;
  for (const auto& [label, count] : c.gold_sizes) {
    const double p = static_cast<double>(count) / n;
    h_gold -= p * std::log(p);
  }
  if (h_pred == 0.0 || h_gold == 0.0) return 0.0;

  double mi = 0.0;
  for (const auto& [key, count] : c.cells) {
    const double pij = static_cast<double>(count) / n;
    const double pi = static_cast<double>(c.pred_sizes.at(key.first)) / n;
    const double pj = static_cast<double>(c.gold_sizes.at(key.second)) / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  const double value = mi / (0.5 * (h_pred + h_gold));
  return std::clamp(value, 0.0, 1.0);
}

std::vector<int> corpus_gold_labels(const Corpus& corpus) {
  std::vector<int> out;
  out.reserve(corpus.docs.size());
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    if (!corpus.docs[i].gold_label)
      throw std::invalid_argument("document " + std::to_string(i) + " has no gold label");
    out.push_back(*corpus.docs[i].gold_label);
  }
  return out;
}

}  // namespace dntm
