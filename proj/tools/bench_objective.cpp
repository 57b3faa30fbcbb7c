// Times the parallel batch kernel against the serial reference on a
// synthetic workload and checks that they agree.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dntm/model.hpp"
#include "dntm/objective.hpp"
#include "dntm/reference.hpp"
#include "dntm/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

std::vector<dntm::Document> make_docs(int count, int words_per_doc, int vocab_size, dntm::Rng& rng) {
  std::vector<dntm::Document> docs(static_cast<std::size_t>(count));
  for (auto& doc : docs) {
    doc.word_ids.resize(static_cast<std::size_t>(words_per_doc));
    for (auto& w : doc.word_ids)
      w = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(vocab_size)));
  }
  return docs;
}

template <class F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int vocab_size = 8000, embed_dim = 50, num_topics = 20;
  int real_docs = 64, words_per_doc = 120;
  int reps = 5;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next_int = [&](int fallback) { return i + 1 < argc ? std::atoi(argv[++i]) : fallback; };
    if (arg == "--vocab") vocab_size = next_int(vocab_size);
    else if (arg == "--dim") embed_dim = next_int(embed_dim);
    else if (arg == "--topics") num_topics = next_int(num_topics);
    else if (arg == "--docs") real_docs = next_int(real_docs);
    else if (arg == "--words") words_per_doc = next_int(words_per_doc);
    else if (arg == "--reps") reps = next_int(reps);
    else {
      std::fprintf(stderr, "usage: %s [--vocab V] [--dim D] [--topics K] [--docs N] [--words M] [--reps R]\n",
                   argv[0]);
      return 2;
    }
  }

  dntm::Rng rng(7);
  const dntm::ModelParams params = dntm::init_params(vocab_size, embed_dim, num_topics, rng);
  const auto real = make_docs(real_docs, words_per_doc, vocab_size, rng);
  const auto fake = make_docs(real_docs, words_per_doc, vocab_size, rng);
  const dntm::LossWeights weights;

  std::printf("batch: %d real + %d fake docs, %d words each, V=%d d=%d K=%d\n", real_docs,
              real_docs, words_per_doc, vocab_size, embed_dim, num_topics);

  dntm::Gradients ref_grads;
  double ref_loss = 0.0;
  const double ref_time = time_best_of(reps, [&] {
    ref_loss = dntm::reference::batch_loss_and_gradients(params, real, fake, weights, ref_grads);
  });
  std::printf("%-28s %8.2f ms\n", "serial reference", ref_time * 1e3);

#ifdef _OPENMP
  std::vector<int> thread_counts;
  for (int t = 1; t <= omp_get_max_threads(); t *= 2) thread_counts.push_back(t);
  if (thread_counts.back() != omp_get_max_threads()) thread_counts.push_back(omp_get_max_threads());
#else
  std::vector<int> thread_counts{1};
#endif

  for (int t : thread_counts) {
    dntm::BatchOptions opts;
    opts.threads = t;
    dntm::Gradients grads;
    double loss = 0.0;
    const double kt = time_best_of(reps, [&] {
      loss = dntm::batch_loss_and_gradients(params, real, fake, weights, grads, opts);
    });

    double max_diff = std::abs(loss - ref_loss);
    for (std::size_t i = 0; i < grads.d_proj.size(); ++i)
      max_diff = std::max(max_diff, std::abs(grads.d_proj[i] - ref_grads.d_proj[i]));
    for (std::size_t i = 0; i < grads.d_bias.size(); ++i)
      max_diff = std::max(max_diff, std::abs(grads.d_bias[i] - ref_grads.d_bias[i]));
    for (std::size_t i = 0; i < grads.d_embed.size(); ++i)
      max_diff = std::max(max_diff, std::abs(grads.d_embed[i] - ref_grads.d_embed[i]));

    char label[64];
    std::snprintf(label, sizeof(label), "parallel kernel, %d thread%s", t, t == 1 ? "" : "s");
    std::printf("%-28s %8.2f ms   speedup vs reference %5.2fx   max |diff| %.3g\n", label,
                kt * 1e3, ref_time / kt, max_diff);
    if (max_diff > 1e-8) {
      std::fprintf(stderr, "kernel disagrees with the reference beyond tolerance\n");
      return 1;
    }
  }
  return 0;
}
