#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dntm/corpus.hpp"
#include "dntm/model.hpp"

namespace dntm {

// Term weights for the batch objective. Defaults reproduce the plain
// unweighted sum of the three criteria plus symmetric negative sampling.
struct LossWeights {
  double lambda_ent = 1.0;  // per-word entropy term
  double lambda_kl = 1.0;   // per-word KL-from-document-average term
  double lambda_bal = 1.0;  // across-documents balance entropy term
  double lambda_neg = 1.0;  // fake-document (negative sampling) terms
  double eps = 1e-8;        // clamp inside every log
  double kl_clip = 10.0;    // cap on each fake word's KL term, in nats

  void validate() const;  // throws std::invalid_argument on bad ranges
};

// Gradient carrier; shapes match ModelParams. Only the d_embed rows listed
// in active_words can be nonzero; the kernel zeroes stale rows from the
// previous use before writing, so a buffer can be reused across batches.
struct Gradients {
  std::vector<double> d_embed;  // V x d
  std::vector<double> d_proj;   // K x d
  std::vector<double> d_bias;   // K
  std::vector<std::int32_t> active_words;

  void resize(const ModelParams& params);
};

struct BatchOptions {
  // 0 = all available threads. Deterministic mode pins the reduction order
  // and defaults to one thread; results are then bit-reproducible run to
  // run for a fixed thread count.
  int threads = 0;
  bool deterministic = false;
};

// Per-batch diagnostics (sums over real documents).
struct BatchStats {
  double loss = 0.0;
  double real_entropy_sum = 0.0;  // sum of per-word entropies
  double real_kl_sum = 0.0;       // sum of per-word KL terms
  double balance_entropy = 0.0;   // entropy of the batch average distribution
  std::size_t real_words = 0;
  std::size_t fake_words = 0;
};

// -sum_k p_k log(p_k + eps)
double entropy(std::span<const double> dist, double eps);

// sum_k p_k log((p_k + eps) / (q_k + eps))
double kl_divergence(std::span<const double> p, std::span<const double> q, double eps);

// entropy of the mean of doc_dists; enters the batch loss with a negative
// sign (it is maximized).
double balance_entropy(const std::vector<TopicDist>& doc_dists, double eps);

// The batch objective:
//
//   sum_{real i} sum_{j} [ l_ent*H(p_ij) + l_kl*KL(p_ij || q_i) ]
//     - l_bal * N_real_words * H(Pbar)
//     + l_neg * sum_{fake i} sum_{j} [ -H(p_ij) - min(KL(p_ij || q_i), kl_clip) ]
//
// where p_ij is the topic distribution of occurrence j of document i, q_i
// the document average, Pbar the average of q_i over the real documents of
// the batch, and N_real_words the number of real word occurrences. The
// fake entropy term needs no cap: the eps-clamped entropy is bounded by
// log K already.
double batch_loss(const ModelParams& params, std::span<const Document> real_docs,
                  std::span<const Document> fake_docs, const LossWeights& weights,
                  const BatchOptions& options = {}, BatchStats* stats = nullptr);

// Identical scalar (bit-for-bit) plus exact analytic gradients with respect
// to all parameters.
double batch_loss_and_gradients(const ModelParams& params, std::span<const Document> real_docs,
                                std::span<const Document> fake_docs, const LossWeights& weights,
                                Gradients& grads, const BatchOptions& options = {},
                                BatchStats* stats = nullptr);

std::pair<double, Gradients> batch_loss_and_gradients(const ModelParams& params,
                                                      std::span<const Document> real_docs,
                                                      std::span<const Document> fake_docs,
                                                      const LossWeights& weights,
                                                      const BatchOptions& options = {});

}  // namespace dntm
