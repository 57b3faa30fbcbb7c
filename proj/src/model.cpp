#include "dntm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dntm {

bool ModelParams::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(embed) && finite(proj) && finite(bias);
}

ModelParams init_params(int vocab_size, int embed_dim, int num_topics, Rng& rng, double scale) {
  if (vocab_size < 1 || embed_dim < 1 || num_topics < 1)
    throw std::invalid_argument("model dimensions must be >= 1");
  if (!(scale > 0)) throw std::invalid_argument("init scale must be > 0");

  ModelParams params;
  params.vocab_size = vocab_size;
  params.embed_dim = embed_dim;
  params.num_topics = num_topics;
  params.embed.resize(static_cast<std::size_t>(vocab_size) * embed_dim);
  params.proj.resize(static_cast<std::size_t>(num_topics) * embed_dim);
  params.bias.assign(static_cast<std::size_t>(num_topics), 0.0);
  for (auto& x : params.embed) x = rng.next_uniform(-scale, scale);
  for (auto& x : params.proj) x = rng.next_uniform(-scale, scale);
  return params;
}

void softmax_inplace(std::span<double> v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

void word_logits(const ModelParams& params, int word_id, std::span<double> out) {
  const auto e = params.embed_row(word_id);
  for (int k = 0; k < params.num_topics; ++k) {
    const auto w = params.proj_row(k);
    double acc = params.bias[static_cast<std::size_t>(k)];
    for (int j = 0; j < params.embed_dim; ++j) acc += w[static_cast<std::size_t>(j)] * e[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(k)] = acc;
  }
}

TopicDist word_topic_dist(const ModelParams& params, int word_id) {
  if (word_id < 0 || word_id >= params.vocab_size)
    throw std::out_of_range("word id " + std::to_string(word_id) + " out of range (V=" +
                            std::to_string(params.vocab_size) + ")");
  TopicDist dist;
  dist.p.resize(static_cast<std::size_t>(params.num_topics));
  word_logits(params, word_id, dist.p);
  softmax_inplace(dist.p);
  return dist;
}

TopicDist doc_topic_dist(const ModelParams& params, const Document& doc) {
  if (doc.word_ids.empty()) throw std::invalid_argument("empty document");

  // Compact to sorted (word, count) pairs: one softmax per unique word and
  // an accumulation order independent of the order of word_ids.
  std::vector<std::int32_t> ids = doc.word_ids;
  std::sort(ids.begin(), ids.end());

  TopicDist mean;
  mean.p.assign(static_cast<std::size_t>(params.num_topics), 0.0);
  std::size_t i = 0;
  while (i < ids.size()) {
    std::size_t j = i;
    while (j < ids.size() && ids[j] == ids[i]) ++j;
    const double count = static_cast<double>(j - i);
    TopicDist d = word_topic_dist(params, ids[i]);
    for (int k = 0; k < params.num_topics; ++k)
      mean.p[static_cast<std::size_t>(k)] += count * d.p[static_cast<std::size_t>(k)];
    i = j;
  }
  const double inv_len = 1.0 / static_cast<double>(ids.size());
  for (auto& x : mean.p) x *= inv_len;
  return mean;
}

}  // namespace dntm
