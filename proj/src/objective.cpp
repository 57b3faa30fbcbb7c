#include "dntm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dntm {

void LossWeights::validate() const {
  auto bad = [](double x) { return !(std::isfinite(x) && x >= 0.0); };
  if (bad(lambda_ent) || bad(lambda_kl) || bad(lambda_bal) || bad(lambda_neg))
    throw std::invalid_argument("loss weights must be finite and non-negative");
  if (!(eps > 0.0 && eps <= 1e-4))
    throw std::invalid_argument("eps must be in (0, 1e-4]");
  if (!(kl_clip > 0.0)) throw std::invalid_argument("kl_clip must be > 0");
}

void Gradients::resize(const ModelParams& params) {
  d_embed.assign(static_cast<std::size_t>(params.vocab_size) * params.embed_dim, 0.0);
  d_proj.assign(static_cast<std::size_t>(params.num_topics) * params.embed_dim, 0.0);
  d_bias.assign(static_cast<std::size_t>(params.num_topics), 0.0);
  active_words.clear();
}

double entropy(std::span<const double> dist, double eps) {
  double h = 0.0;
  for (double p : dist) h -= p * std::log(p + eps);
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double eps) {
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    kl += p[k] * (std::log(p[k] + eps) - std::log(q[k] + eps));
  return kl;
}

double balance_entropy(const std::vector<TopicDist>& doc_dists, double eps) {
  if (doc_dists.empty()) throw std::invalid_argument("balance entropy of an empty list");
  const std::size_t num_topics = doc_dists.front().p.size();
  std::vector<double> mean(num_topics, 0.0);
  for (const auto& d : doc_dists)
    for (std::size_t k = 0; k < num_topics; ++k) mean[k] += d.p[k];
  const double inv = 1.0 / static_cast<double>(doc_dists.size());
  for (auto& x : mean) x *= inv;
  return entropy(mean, eps);
}

namespace {

int resolve_threads(const BatchOptions& options) {
#ifdef _OPENMP
  if (options.threads > 0) return options.threads;
  if (options.deterministic) return 1;
  return omp_get_max_threads();
#else
  (void)options;
  return 1;
#endif
}

// Batch compacted to unique words. Slots index the distinct words of the
// batch; each document becomes a run of (slot, count) pairs; postings give
// the reverse map slot -> (doc, pair) in document order.
struct BatchLayout {
  int n_real = 0;
  int n_fake = 0;
  int n_docs = 0;
  int n_slots = 0;

  std::vector<std::int32_t> slot_word;   // slot -> vocabulary id
  std::vector<std::int32_t> pair_slot;   // flattened per-doc pairs
  std::vector<double> pair_count;
  std::vector<std::int32_t> doc_begin;   // n_docs + 1 offsets into pair arrays
  std::vector<double> doc_len;           // m_i
  std::vector<std::int32_t> post_doc;    // postings, grouped by slot
  std::vector<std::int32_t> post_pair;
  std::vector<std::int32_t> slot_begin;  // n_slots + 1 offsets into postings

  std::size_t real_word_count = 0;
  std::size_t fake_word_count = 0;
};

BatchLayout build_layout(const ModelParams& params, std::span<const Document> real_docs,
                         std::span<const Document> fake_docs) {
  if (real_docs.empty()) throw std::invalid_argument("empty batch: no real documents");

  BatchLayout bl;
  bl.n_real = static_cast<int>(real_docs.size());
  bl.n_fake = static_cast<int>(fake_docs.size());
  bl.n_docs = bl.n_real + bl.n_fake;

  std::vector<std::int32_t> slot_of(static_cast<std::size_t>(params.vocab_size), -1);
  std::vector<std::int32_t> sorted;
  bl.doc_begin.push_back(0);

  auto add_doc = [&](const Document& doc, bool fake) {
    if (doc.word_ids.empty()) throw std::invalid_argument("empty document in batch");
    sorted = doc.word_ids;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0 || sorted.back() >= params.vocab_size)
      throw std::out_of_range("word id out of range in batch document");
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const std::int32_t word = sorted[i];
      std::int32_t& slot = slot_of[static_cast<std::size_t>(word)];
      if (slot < 0) {
        slot = bl.n_slots++;
        bl.slot_word.push_back(word);
      }
      bl.pair_slot.push_back(slot);
      bl.pair_count.push_back(static_cast<double>(j - i));
      i = j;
    }
    bl.doc_begin.push_back(static_cast<std::int32_t>(bl.pair_slot.size()));
    bl.doc_len.push_back(static_cast<double>(doc.word_ids.size()));
    (fake ? bl.fake_word_count : bl.real_word_count) += doc.word_ids.size();
  };

  for (const auto& d : real_docs) add_doc(d, false);
  for (const auto& d : fake_docs) add_doc(d, true);

  // Postings grouped by slot, document order within each slot.
  std::vector<std::int32_t> fill(static_cast<std::size_t>(bl.n_slots), 0);
  for (std::int32_t s : bl.pair_slot) ++fill[static_cast<std::size_t>(s)];
  bl.slot_begin.assign(static_cast<std::size_t>(bl.n_slots) + 1, 0);
  for (int s = 0; s < bl.n_slots; ++s)
    bl.slot_begin[static_cast<std::size_t>(s) + 1] =
        bl.slot_begin[static_cast<std::size_t>(s)] + fill[static_cast<std::size_t>(s)];
  bl.post_doc.resize(bl.pair_slot.size());
  bl.post_pair.resize(bl.pair_slot.size());
  std::fill(fill.begin(), fill.end(), 0);
  for (int i = 0; i < bl.n_docs; ++i) {
    for (std::int32_t pi = bl.doc_begin[static_cast<std::size_t>(i)];
         pi < bl.doc_begin[static_cast<std::size_t>(i) + 1]; ++pi) {
      const std::int32_t s = bl.pair_slot[static_cast<std::size_t>(pi)];
      const std::int32_t at = bl.slot_begin[static_cast<std::size_t>(s)] + fill[static_cast<std::size_t>(s)]++;
      bl.post_doc[static_cast<std::size_t>(at)] = i;
      bl.post_pair[static_cast<std::size_t>(at)] = pi;
    }
  }
  return bl;
}

double batch_kernel(const ModelParams& params, std::span<const Document> real_docs,
                    std::span<const Document> fake_docs, const LossWeights& w,
                    Gradients* grads, const BatchOptions& options, BatchStats* stats) {
  w.validate();
  const BatchLayout bl = build_layout(params, real_docs, fake_docs);
  const int num_topics = params.num_topics;
  const int embed_dim = params.embed_dim;
  const int nt = resolve_threads(options);
  const double eps = w.eps;

  // --- forward, per unique word: p, log(p + eps), entropy ---------------
  std::vector<double> p(static_cast<std::size_t>(bl.n_slots) * num_topics);
  std::vector<double> logp(static_cast<std::size_t>(bl.n_slots) * num_topics);
  std::vector<double> slot_ent(static_cast<std::size_t>(bl.n_slots));

#pragma omp parallel for num_threads(nt) schedule(static)
  for (int s = 0; s < bl.n_slots; ++s) {
    double* ps = p.data() + static_cast<std::size_t>(s) * num_topics;
    double* ls = logp.data() + static_cast<std::size_t>(s) * num_topics;
    word_logits(params, bl.slot_word[static_cast<std::size_t>(s)], {ps, static_cast<std::size_t>(num_topics)});
    softmax_inplace({ps, static_cast<std::size_t>(num_topics)});
    double h = 0.0;
    for (int k = 0; k < num_topics; ++k) {
      ls[k] = std::log(ps[k] + eps);
      h -= ps[k] * ls[k];
    }
    slot_ent[static_cast<std::size_t>(s)] = h;
  }

  // --- forward, per document: q, log(q + eps), entropy and KL sums ------
  std::vector<double> q(static_cast<std::size_t>(bl.n_docs) * num_topics);
  std::vector<double> logq(static_cast<std::size_t>(bl.n_docs) * num_topics);
  std::vector<double> doc_ent(static_cast<std::size_t>(bl.n_docs));
  std::vector<double> doc_kl(static_cast<std::size_t>(bl.n_docs));
  // Per-pair gate: 1 while a fake word's KL sits below the clip (real pairs
  // are always 1). Gated-off terms contribute the constant kl_clip and no
  // gradient.
  std::vector<unsigned char> pair_gate(bl.pair_slot.size(), 1);

#pragma omp parallel for num_threads(nt) schedule(static)
  for (int i = 0; i < bl.n_docs; ++i) {
    const bool fake = i >= bl.n_real;
    double* qi = q.data() + static_cast<std::size_t>(i) * num_topics;
    double* lqi = logq.data() + static_cast<std::size_t>(i) * num_topics;
    std::fill(qi, qi + num_topics, 0.0);
    const std::int32_t pb = bl.doc_begin[static_cast<std::size_t>(i)];
    const std::int32_t pe = bl.doc_begin[static_cast<std::size_t>(i) + 1];
    for (std::int32_t pi = pb; pi < pe; ++pi) {
      const double* ps = p.data() + static_cast<std::size_t>(bl.pair_slot[static_cast<std::size_t>(pi)]) * num_topics;
      const double c = bl.pair_count[static_cast<std::size_t>(pi)];
      for (int k = 0; k < num_topics; ++k) qi[k] += c * ps[k];
    }
    const double inv_len = 1.0 / bl.doc_len[static_cast<std::size_t>(i)];
    for (int k = 0; k < num_topics; ++k) {
      qi[k] *= inv_len;
      lqi[k] = std::log(qi[k] + eps);
    }

    double ent_sum = 0.0, kl_sum = 0.0;
    for (std::int32_t pi = pb; pi < pe; ++pi) {
      const std::int32_t s = bl.pair_slot[static_cast<std::size_t>(pi)];
      const double* ps = p.data() + static_cast<std::size_t>(s) * num_topics;
      const double* ls = logp.data() + static_cast<std::size_t>(s) * num_topics;
      const double c = bl.pair_count[static_cast<std::size_t>(pi)];
      ent_sum += c * slot_ent[static_cast<std::size_t>(s)];
      double kl = 0.0;
      for (int k = 0; k < num_topics; ++k) kl += ps[k] * (ls[k] - lqi[k]);
      if (fake && kl >= w.kl_clip) {
        pair_gate[static_cast<std::size_t>(pi)] = 0;
        kl = w.kl_clip;
      }
      kl_sum += c * kl;
    }
    doc_ent[static_cast<std::size_t>(i)] = ent_sum;
    doc_kl[static_cast<std::size_t>(i)] = kl_sum;
  }

  // --- batch average over real documents and loss assembly --------------
  // Scalar reductions run serially in document order, so the loss does not
  // depend on the thread count.
  std::vector<double> pbar(static_cast<std::size_t>(num_topics), 0.0);
  for (int i = 0; i < bl.n_real; ++i) {
    const double* qi = q.data() + static_cast<std::size_t>(i) * num_topics;
    for (int k = 0; k < num_topics; ++k) pbar[static_cast<std::size_t>(k)] += qi[k];
  }
  for (auto& x : pbar) x /= static_cast<double>(bl.n_real);
  const double pbar_ent = entropy(pbar, eps);
  const double n_real_words = static_cast<double>(bl.real_word_count);

  double real_ent = 0.0, real_kl = 0.0, fake_ent = 0.0, fake_kl = 0.0;
  for (int i = 0; i < bl.n_real; ++i) {
    real_ent += doc_ent[static_cast<std::size_t>(i)];
    real_kl += doc_kl[static_cast<std::size_t>(i)];
  }
  for (int i = bl.n_real; i < bl.n_docs; ++i) {
    fake_ent += doc_ent[static_cast<std::size_t>(i)];
    fake_kl += doc_kl[static_cast<std::size_t>(i)];
  }

  const double loss = w.lambda_ent * real_ent + w.lambda_kl * real_kl -
                      w.lambda_bal * n_real_words * pbar_ent +
                      w.lambda_neg * (-fake_ent - fake_kl);

  if (stats) {
    stats->loss = loss;
    stats->real_entropy_sum = real_ent;
    stats->real_kl_sum = real_kl;
    stats->balance_entropy = pbar_ent;
    stats->real_words = bl.real_word_count;
    stats->fake_words = bl.fake_word_count;
  }
  if (!grads) return loss;

  // --- backward ----------------------------------------------------------
  Gradients& g = *grads;
  const std::size_t embed_size = static_cast<std::size_t>(params.vocab_size) * embed_dim;
  const std::size_t proj_size = static_cast<std::size_t>(num_topics) * embed_dim;
  if (g.d_embed.size() != embed_size || g.d_proj.size() != proj_size ||
      g.d_bias.size() != static_cast<std::size_t>(num_topics))
    g.resize(params);
  // Zero the rows written by the previous batch, then claim the new ones.
  for (std::int32_t word : g.active_words)
    std::fill_n(g.d_embed.begin() + static_cast<std::size_t>(word) * embed_dim, embed_dim, 0.0);
  g.active_words = bl.slot_word;

  // d(-lambda_bal * N * H(Pbar)) / d q_i, shared by every real document.
  std::vector<double> bal_common(static_cast<std::size_t>(num_topics));
  for (int k = 0; k < num_topics; ++k) {
    const double pk = pbar[static_cast<std::size_t>(k)];
    bal_common[static_cast<std::size_t>(k)] =
        w.lambda_bal * (n_real_words / static_cast<double>(bl.n_real)) *
        (std::log(pk + eps) + pk / (pk + eps));
  }

  // r_i = (dL/dq_i) / m_i. For real documents the KL-through-q sum
  // telescopes: sum_j p_ij = m_i * q_i.
  std::vector<double> r(static_cast<std::size_t>(bl.n_docs) * num_topics);

#pragma omp parallel for num_threads(nt) schedule(static)
  for (int i = 0; i < bl.n_docs; ++i) {
    double* ri = r.data() + static_cast<std::size_t>(i) * num_topics;
    const double* qi = q.data() + static_cast<std::size_t>(i) * num_topics;
    const double inv_len = 1.0 / bl.doc_len[static_cast<std::size_t>(i)];
    if (i < bl.n_real) {
      for (int k = 0; k < num_topics; ++k)
        ri[k] = -w.lambda_kl * qi[k] / (qi[k] + eps) + bal_common[static_cast<std::size_t>(k)] * inv_len;
    } else {
      // Only the pairs still below the clip pull on the document average.
      std::fill(ri, ri + num_topics, 0.0);
      const std::int32_t pb = bl.doc_begin[static_cast<std::size_t>(i)];
      const std::int32_t pe = bl.doc_begin[static_cast<std::size_t>(i) + 1];
      for (std::int32_t pi = pb; pi < pe; ++pi) {
        if (!pair_gate[static_cast<std::size_t>(pi)]) continue;
        const double* ps = p.data() + static_cast<std::size_t>(bl.pair_slot[static_cast<std::size_t>(pi)]) * num_topics;
        const double c = bl.pair_count[static_cast<std::size_t>(pi)];
        for (int k = 0; k < num_topics; ++k) ri[k] += c * ps[k];
      }
      for (int k = 0; k < num_topics; ++k)
        ri[k] = w.lambda_neg * ri[k] / (qi[k] + eps) * inv_len;
    }
  }

  // Per unique word: fold every posting into the logit-space gradient, then
  // the embedding row. Postings are walked in document order, so these are
  // independent of the thread count.
  std::vector<double> gu(static_cast<std::size_t>(bl.n_slots) * num_topics);

#pragma omp parallel for num_threads(nt) schedule(static)
  for (int s = 0; s < bl.n_slots; ++s) {
    const double* ps = p.data() + static_cast<std::size_t>(s) * num_topics;
    const double* ls = logp.data() + static_cast<std::size_t>(s) * num_topics;
    double* gus = gu.data() + static_cast<std::size_t>(s) * num_topics;
    std::vector<double> acc(static_cast<std::size_t>(num_topics), 0.0);

    for (std::int32_t pi = bl.slot_begin[static_cast<std::size_t>(s)];
         pi < bl.slot_begin[static_cast<std::size_t>(s) + 1]; ++pi) {
      const int i = bl.post_doc[static_cast<std::size_t>(pi)];
      const std::int32_t pair = bl.post_pair[static_cast<std::size_t>(pi)];
      const double c = bl.pair_count[static_cast<std::size_t>(pair)];
      const double* lqi = logq.data() + static_cast<std::size_t>(i) * num_topics;
      const double* ri = r.data() + static_cast<std::size_t>(i) * num_topics;
      if (i < bl.n_real) {
        for (int k = 0; k < num_topics; ++k) {
          const double ratio = ps[k] / (ps[k] + eps);
          const double d_ent = -ls[k] - ratio;
          const double d_kl = ls[k] - lqi[k] + ratio;
          acc[static_cast<std::size_t>(k)] += c * (w.lambda_ent * d_ent + w.lambda_kl * d_kl + ri[k]);
        }
      } else {
        const double gate = pair_gate[static_cast<std::size_t>(pair)] ? 1.0 : 0.0;
        for (int k = 0; k < num_topics; ++k) {
          const double ratio = ps[k] / (ps[k] + eps);
          const double d_ent = -ls[k] - ratio;
          const double d_kl = ls[k] - lqi[k] + ratio;
          acc[static_cast<std::size_t>(k)] += c * (w.lambda_neg * (-d_ent - gate * d_kl) + ri[k]);
        }
      }
    }

    // Softmax backward: g_u = p ⊙ (acc - <acc, p>).
    double dot = 0.0;
    for (int k = 0; k < num_topics; ++k) dot += acc[static_cast<std::size_t>(k)] * ps[k];
    for (int k = 0; k < num_topics; ++k) gus[k] = ps[k] * (acc[static_cast<std::size_t>(k)] - dot);

    const std::int32_t word = bl.slot_word[static_cast<std::size_t>(s)];
    double* de = g.d_embed.data() + static_cast<std::size_t>(word) * embed_dim;
    for (int j = 0; j < embed_dim; ++j) {
      double acc_e = 0.0;
      for (int k = 0; k < num_topics; ++k)
        acc_e += gus[k] * params.proj[static_cast<std::size_t>(k) * embed_dim + j];
      de[j] = acc_e;
    }
  }

  // d_proj / d_bias: per-thread partials over contiguous slot ranges,
  // merged in thread order (deterministic for a fixed thread count).
  std::fill(g.d_proj.begin(), g.d_proj.end(), 0.0);
  std::fill(g.d_bias.begin(), g.d_bias.end(), 0.0);
  std::vector<double> proj_parts(static_cast<std::size_t>(nt) * proj_size, 0.0);
  std::vector<double> bias_parts(static_cast<std::size_t>(nt) * num_topics, 0.0);

#pragma omp parallel num_threads(nt)
  {
#ifdef _OPENMP
    const int tid = omp_get_thread_num();
    const int tcount = omp_get_num_threads();
#else
    const int tid = 0;
    const int tcount = 1;
#endif
    const int lo = static_cast<int>(static_cast<long long>(bl.n_slots) * tid / tcount);
    const int hi = static_cast<int>(static_cast<long long>(bl.n_slots) * (tid + 1) / tcount);
    double* dproj = proj_parts.data() + static_cast<std::size_t>(tid) * proj_size;
    double* dbias = bias_parts.data() + static_cast<std::size_t>(tid) * num_topics;
    for (int s = lo; s < hi; ++s) {
      const double* gus = gu.data() + static_cast<std::size_t>(s) * num_topics;
      const double* e = params.embed.data() +
                        static_cast<std::size_t>(bl.slot_word[static_cast<std::size_t>(s)]) * embed_dim;
      for (int k = 0; k < num_topics; ++k) {
        dbias[k] += gus[k];
        double* row = dproj + static_cast<std::size_t>(k) * embed_dim;
        for (int j = 0; j < embed_dim; ++j) row[j] += gus[k] * e[j];
      }
    }
  }
  for (int t = 0; t < nt; ++t) {
    const double* dproj = proj_parts.data() + static_cast<std::size_t>(t) * proj_size;
    const double* dbias = bias_parts.data() + static_cast<std::size_t>(t) * num_topics;
    for (std::size_t x = 0; x < proj_size; ++x) g.d_proj[x] += dproj[x];
    for (int k = 0; k < num_topics; ++k) g.d_bias[static_cast<std::size_t>(k)] += dbias[k];
  }

  return loss;
}

}  // namespace

double batch_loss(const ModelParams& params, std::span<const Document> real_docs,
                  std::span<const Document> fake_docs, const LossWeights& weights,
                  const BatchOptions& options, BatchStats* stats) {
  return batch_kernel(params, real_docs, fake_docs, weights, nullptr, options, stats);
}

double batch_loss_and_gradients(const ModelParams& params, std::span<const Document> real_docs,
                                std::span<const Document> fake_docs, const LossWeights& weights,
                                Gradients& grads, const BatchOptions& options, BatchStats* stats) {
  return batch_kernel(params, real_docs, fake_docs, weights, &grads, options, stats);
}

std::pair<double, Gradients> batch_loss_and_gradients(const ModelParams& params,
                                                      std::span<const Document> real_docs,
                                                      std::span<const Document> fake_docs,
                                                      const LossWeights& weights,
                                                      const BatchOptions& options) {
  Gradients grads;
  grads.resize(params);
  double loss = batch_loss_and_gradients(params, real_docs, fake_docs, weights, grads, options);
  return {loss, std::move(grads)};
}

}  // namespace dntm
