#include "dntm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dntm::reference {

namespace {

// Local softmax so the reference shares no forward code with the kernel.
std::vector<double> word_dist(const ModelParams& params, std::int32_t word) {
  if (word < 0 || word >= params.vocab_size)
    throw std::out_of_range("word id out of range in batch document");
  const int K = params.num_topics;
  const int d = params.embed_dim;
  std::vector<double> u(static_cast<std::size_t>(K));
  const double* e = params.embed.data() + static_cast<std::size_t>(word) * d;
  for (int k = 0; k < K; ++k) {
    double dot = params.bias[static_cast<std::size_t>(k)];
    const double* wk = params.proj.data() + static_cast<std::size_t>(k) * d;
    for (int j = 0; j < d; ++j) dot += wk[j] * e[j];
    u[static_cast<std::size_t>(k)] = dot;
  }
  double mx = u[0];
  for (double x : u) mx = std::max(mx, x);
  double z = 0.0;
  for (auto& x : u) {
    x = std::exp(x - mx);
    z += x;
  }
  for (auto& x : u) x /= z;
  return u;
}

struct DocEval {
  std::vector<std::vector<double>> p;  // one distribution per occurrence
  std::vector<double> q;               // document average
  std::vector<double> ent;             // per-occurrence entropy
  std::vector<double> kl;              // per-occurrence KL (unclipped)
  std::vector<char> gate;              // fake docs: 1 where kl < clip
};

DocEval eval_doc(const ModelParams& params, const Document& doc, const LossWeights& w, bool fake) {
  if (doc.word_ids.empty()) throw std::invalid_argument("empty document in batch");
  const int K = params.num_topics;
  const std::size_t m = doc.word_ids.size();
  DocEval ev;
  ev.p.reserve(m);
  for (std::int32_t word : doc.word_ids) ev.p.push_back(word_dist(params, word));
  ev.q.assign(static_cast<std::size_t>(K), 0.0);
  for (const auto& pj : ev.p)
    for (int k = 0; k < K; ++k) ev.q[static_cast<std::size_t>(k)] += pj[static_cast<std::size_t>(k)];
  for (auto& x : ev.q) x /= static_cast<double>(m);

  ev.ent.resize(m);
  ev.kl.resize(m);
  ev.gate.assign(m, 1);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& pj = ev.p[j];
    double h = 0.0, kl = 0.0;
    for (int k = 0; k < K; ++k) {
      const double pk = pj[static_cast<std::size_t>(k)];
      h -= pk * std::log(pk + w.eps);
      kl += pk * (std::log(pk + w.eps) - std::log(ev.q[static_cast<std::size_t>(k)] + w.eps));
    }
    ev.ent[j] = h;
    ev.kl[j] = kl;
    if (fake && kl >= w.kl_clip) ev.gate[j] = 0;
  }
  return ev;
}

}  // namespace

double batch_loss(const ModelParams& params, std::span<const Document> real_docs,
                  std::span<const Document> fake_docs, const LossWeights& weights,
                  BatchStats* stats) {
  weights.validate();
  if (real_docs.empty()) throw std::invalid_argument("empty batch: no real documents");
  const int K = params.num_topics;

  double real_ent = 0.0, real_kl = 0.0, fake_term = 0.0;
  std::size_t n_real_words = 0, n_fake_words = 0;
  std::vector<double> pbar(static_cast<std::size_t>(K), 0.0);

  for (const auto& doc : real_docs) {
    DocEval ev = eval_doc(params, doc, weights, false);
    for (std::size_t j = 0; j < doc.word_ids.size(); ++j) {
      real_ent += ev.ent[j];
      real_kl += ev.kl[j];
    }
    for (int k = 0; k < K; ++k) pbar[static_cast<std::size_t>(k)] += ev.q[static_cast<std::size_t>(k)];
    n_real_words += doc.word_ids.size();
  }
  for (auto& x : pbar) x /= static_cast<double>(real_docs.size());
  double pbar_ent = 0.0;
  for (int k = 0; k < K; ++k) {
    const double pk = pbar[static_cast<std::size_t>(k)];
    pbar_ent -= pk * std::log(pk + weights.eps);
  }

  for (const auto& doc : fake_docs) {
    DocEval ev = eval_doc(params, doc, weights, true);
    for (std::size_t j = 0; j < doc.word_ids.size(); ++j)
      fake_term += -ev.ent[j] - std::min(ev.kl[j], weights.kl_clip);
    n_fake_words += doc.word_ids.size();
  }

  const double loss = weights.lambda_ent * real_ent + weights.lambda_kl * real_kl -
                      weights.lambda_bal * static_cast<double>(n_real_words) * pbar_ent +
                      weights.lambda_neg * fake_term;
  if (stats) {
    stats->loss = loss;
    stats->real_entropy_sum = real_ent;
    stats->real_kl_sum = real_kl;
    stats->balance_entropy = pbar_ent;
    stats->real_words = n_real_words;
    stats->fake_words = n_fake_words;
  }
  return loss;
}

double batch_loss_and_gradients(const ModelParams& params, std::span<const Document> real_docs,
                                std::span<const Document> fake_docs, const LossWeights& weights,
                                Gradients& grads, BatchStats* stats) {
  weights.validate();
  if (real_docs.empty()) throw std::invalid_argument("empty batch: no real documents");
  const int K = params.num_topics;
  const int d = params.embed_dim;
  const double eps = weights.eps;

  grads.resize(params);  // dense zero; the reference does not track rows

  // First pass: evaluate every document, collect the batch average.
  const std::size_t n_docs = real_docs.size() + fake_docs.size();
  std::vector<DocEval> evals;
  evals.reserve(n_docs);
  std::size_t n_real_words = 0, n_fake_words = 0;
  std::vector<double> pbar(static_cast<std::size_t>(K), 0.0);
  for (const auto& doc : real_docs) {
    evals.push_back(eval_doc(params, doc, weights, false));
    for (int k = 0; k < K; ++k)
      pbar[static_cast<std::size_t>(k)] += evals.back().q[static_cast<std::size_t>(k)];
    n_real_words += doc.word_ids.size();
  }
  for (const auto& doc : fake_docs) {
    evals.push_back(eval_doc(params, doc, weights, true));
    n_fake_words += doc.word_ids.size();
  }
  for (auto& x : pbar) x /= static_cast<double>(real_docs.size());

  double pbar_ent = 0.0;
  for (int k = 0; k < K; ++k) {
    const double pk = pbar[static_cast<std::size_t>(k)];
    pbar_ent -= pk * std::log(pk + eps);
  }

  double real_ent = 0.0, real_kl = 0.0, fake_term = 0.0;
  for (std::size_t i = 0; i < real_docs.size(); ++i)
    for (std::size_t j = 0; j < real_docs[i].word_ids.size(); ++j) {
      real_ent += evals[i].ent[j];
      real_kl += evals[i].kl[j];
    }
  for (std::size_t i = 0; i < fake_docs.size(); ++i) {
    const DocEval& ev = evals[real_docs.size() + i];
    for (std::size_t j = 0; j < fake_docs[i].word_ids.size(); ++j)
      fake_term += -ev.ent[j] - std::min(ev.kl[j], weights.kl_clip);
  }
  const double loss = weights.lambda_ent * real_ent + weights.lambda_kl * real_kl -
                      weights.lambda_bal * static_cast<double>(n_real_words) * pbar_ent +
                      weights.lambda_neg * fake_term;
  if (stats) {
    stats->loss = loss;
    stats->real_entropy_sum = real_ent;
    stats->real_kl_sum = real_kl;
    stats->balance_entropy = pbar_ent;
    stats->real_words = n_real_words;
    stats->fake_words = n_fake_words;
  }

  // d loss / d Pbar_k, then spread onto each real document average.
  std::vector<double> dpbar(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const double pk = pbar[static_cast<std::size_t>(k)];
    dpbar[static_cast<std::size_t>(k)] = weights.lambda_bal * static_cast<double>(n_real_words) *
                                         (std::log(pk + eps) + pk / (pk + eps));
  }

  std::vector<char> touched(static_cast<std::size_t>(params.vocab_size), 0);

  for (std::size_t i = 0; i < n_docs; ++i) {
    const bool fake = i >= real_docs.size();
    const Document& doc = fake ? fake_docs[i - real_docs.size()] : real_docs[i];
    const DocEval& ev = evals[i];
    const double m = static_cast<double>(doc.word_ids.size());

    // dL/dq for this document, occurrence by occurrence.
    std::vector<double> dq(static_cast<std::size_t>(K), 0.0);
    for (std::size_t j = 0; j < doc.word_ids.size(); ++j) {
      const auto& pj = ev.p[j];
      for (int k = 0; k < K; ++k) {
        const double frac = pj[static_cast<std::size_t>(k)] / (ev.q[static_cast<std::size_t>(k)] + eps);
        if (!fake)
          dq[static_cast<std::size_t>(k)] += weights.lambda_kl * (-frac);
        else if (ev.gate[j])
          dq[static_cast<std::size_t>(k)] += weights.lambda_neg * frac;
      }
    }
    if (!fake)
      for (int k = 0; k < K; ++k)
        dq[static_cast<std::size_t>(k)] += dpbar[static_cast<std::size_t>(k)] / static_cast<double>(real_docs.size());

    for (std::size_t j = 0; j < doc.word_ids.size(); ++j) {
      const auto& pj = ev.p[j];
      std::vector<double> dp(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) {
        const double pk = pj[static_cast<std::size_t>(k)];
        const double ratio = pk / (pk + eps);
        const double d_ent = -std::log(pk + eps) - ratio;
        const double d_kl =
            std::log(pk + eps) - std::log(ev.q[static_cast<std::size_t>(k)] + eps) + ratio;
        double val;
        if (!fake)
          val = weights.lambda_ent * d_ent + weights.lambda_kl * d_kl;
        else
          val = weights.lambda_neg * (-d_ent - (ev.gate[j] ? d_kl : 0.0));
        dp[static_cast<std::size_t>(k)] = val + dq[static_cast<std::size_t>(k)] / m;
      }

      // Softmax backward into logits.
      double dot = 0.0;
      for (int k = 0; k < K; ++k) dot += dp[static_cast<std::size_t>(k)] * pj[static_cast<std::size_t>(k)];
      std::vector<double> du(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k)
        du[static_cast<std::size_t>(k)] =
            pj[static_cast<std::size_t>(k)] * (dp[static_cast<std::size_t>(k)] - dot);

      const std::int32_t word = doc.word_ids[j];
      touched[static_cast<std::size_t>(word)] = 1;
      const double* e = params.embed.data() + static_cast<std::size_t>(word) * d;
      double* de = grads.d_embed.data() + static_cast<std::size_t>(word) * d;
      for (int k = 0; k < K; ++k) {
        const double g = du[static_cast<std::size_t>(k)];
        grads.d_bias[static_cast<std::size_t>(k)] += g;
        double* wrow = grads.d_proj.data() + static_cast<std::size_t>(k) * d;
        const double* prow = params.proj.data() + static_cast<std::size_t>(k) * d;
        for (int x = 0; x < d; ++x) {
          wrow[x] += g * e[x];
          de[x] += g * prow[x];
        }
      }
    }
  }

  grads.active_words.clear();
  for (std::int32_t wd = 0; wd < params.vocab_size; ++wd)
    if (touched[static_cast<std::size_t>(wd)]) grads.active_words.push_back(wd);

  return loss;
}

}  // namespace dntm::reference
