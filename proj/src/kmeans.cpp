#include "dntm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dntm/rng.hpp"

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

struct SparseVec {
  std::vector<std::int32_t> idx;  // sorted
  std::vector<double> val;
  double norm2 = 0.0;
};

// ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2 with c dense.
double dist2(const SparseVec& x, const double* c, double c_norm2) {
  double dot = 0.0;
  for (std::size_t i = 0; i < x.idx.size(); ++i)
    dot += x.val[i] * c[x.idx[i]];
  return x.norm2 - 2.0 * dot + c_norm2;
}

std::vector<SparseVec> tfidf_vectors(const Corpus& corpus) {
  const int v_size = corpus.vocab.size();
  const std::size_t n = corpus.docs.size();
  std::vector<std::int32_t> df(static_cast<std::size_t>(v_size), 0);
  std::vector<SparseVec> x(n);

  std::vector<std::int32_t> sorted;
  for (std::size_t i = 0; i < n; ++i) {
    sorted = corpus.docs[i].word_ids;
    std::sort(sorted.begin(), sorted.end());
    std::size_t a = 0;
    while (a < sorted.size()) {
      std::size_t b = a;
      while (b < sorted.size() && sorted[b] == sorted[a]) ++b;
      x[i].idx.push_back(sorted[a]);
      x[i].val.push_back(static_cast<double>(b - a));  // raw tf, idf applied below
      ++df[static_cast<std::size_t>(sorted[a])];
      a = b;
    }
  }

  std::vector<double> idf(static_cast<std::size_t>(v_size), 0.0);
  for (int w = 0; w < v_size; ++w)
    if (df[static_cast<std::size_t>(w)] > 0)
      idf[static_cast<std::size_t>(w)] =
          std::log(static_cast<double>(n) / static_cast<double>(df[static_cast<std::size_t>(w)]));

  for (auto& vec : x) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < vec.idx.size(); ++i) {
      vec.val[i] *= idf[static_cast<std::size_t>(vec.idx[i])];
      norm2 += vec.val[i] * vec.val[i];
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& v : vec.val) v *= inv;
      vec.norm2 = 1.0;
    }
  }
  return x;
}

}  // namespace

KmeansResult kmeans_baseline(const Corpus& corpus, int num_clusters, std::uint64_t seed,
                             int threads) {
  const std::size_t n = corpus.docs.size();
  if (num_clusters < 1) throw std::invalid_argument("cluster count must be >= 1");
  if (static_cast<std::size_t>(num_clusters) > n)
    throw std::invalid_argument("more clusters than documents");

  const int nt = resolve_threads(threads);
  const int v_size = corpus.vocab.size();
  const int k_count = num_clusters;
  const std::vector<SparseVec> x = tfidf_vectors(corpus);

  std::vector<double> centroids(static_cast<std::size_t>(k_count) * v_size, 0.0);
  std::vector<double> c_norm2(static_cast<std::size_t>(k_count), 0.0);
  auto set_centroid = [&](int k, const SparseVec& vec) {
    double* c = centroids.data() + static_cast<std::size_t>(k) * v_size;
    std::fill(c, c + v_size, 0.0);
    for (std::size_t i = 0; i < vec.idx.size(); ++i) c[vec.idx[i]] = vec.val[i];
    c_norm2[static_cast<std::size_t>(k)] = vec.norm2;
  };

  // k-means++ style seeding: first centroid uniform, then proportional to
  // the squared distance to the nearest chosen centroid.
  Rng rng(seed);
  std::vector<double> best_d2(n);
  set_centroid(0, x[rng.next_below(n)]);
  for (std::size_t i = 0; i < n; ++i) best_d2[i] = dist2(x[i], centroids.data(), c_norm2[0]);
  for (int k = 1; k < k_count; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::max(best_d2[i], 0.0);
    std::size_t pick;
    if (total > 0.0) {
      const double target = rng.next_double() * total;
      double run = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        run += std::max(best_d2[i], 0.0);
        if (run >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.next_below(n);  // all points coincide with chosen centroids
    }
    set_centroid(k, x[pick]);
    const double* c = centroids.data() + static_cast<std::size_t>(k) * v_size;
    for (std::size_t i = 0; i < n; ++i)
      best_d2[i] = std::min(best_d2[i], dist2(x[i], c, c_norm2[static_cast<std::size_t>(k)]));
  }

  KmeansResult result;
  result.assignment.labels.assign(n, 0);
  std::vector<double> doc_d2(n, 0.0);
  std::vector<double> prev_ssq;
  double prev_inertia = -1.0;

  for (int iter = 1; iter <= 100; ++iter) {
    result.iterations = iter;

    // Assignment; ties go to the smallest cluster index.
#pragma omp parallel for num_threads(nt) schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      int best = 0;
      double best_val = dist2(x[static_cast<std::size_t>(i)], centroids.data(), c_norm2[0]);
      for (int k = 1; k < k_count; ++k) {
        const double val = dist2(x[static_cast<std::size_t>(i)],
                                 centroids.data() + static_cast<std::size_t>(k) * v_size,
                                 c_norm2[static_cast<std::size_t>(k)]);
        if (val < best_val) {
          best_val = val;
          best = k;
        }
      }
      result.assignment.labels[static_cast<std::size_t>(i)] = best;
      doc_d2[static_cast<std::size_t>(i)] = best_val;
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += std::max(doc_d2[i], 0.0);
    result.inertia = inertia;

    if (prev_inertia >= 0.0) {
      const double denom = std::max(prev_inertia, 1e-300);
      if (std::abs(prev_inertia - inertia) / denom < 1e-6) break;
    }
    prev_inertia = inertia;
    if (iter == 100) break;

    // Update: mean of member vectors.
    std::vector<std::size_t> members(static_cast<std::size_t>(k_count), 0);
    std::fill(centroids.begin(), centroids.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int k = result.assignment.labels[i];
      ++members[static_cast<std::size_t>(k)];
      double* c = centroids.data() + static_cast<std::size_t>(k) * v_size;
      for (std::size_t j = 0; j < x[i].idx.size(); ++j) c[x[i].idx[j]] += x[i].val[j];
    }
    for (int k = 0; k < k_count; ++k) {
      double* c = centroids.data() + static_cast<std::size_t>(k) * v_size;
      if (members[static_cast<std::size_t>(k)] > 0) {
        const double inv = 1.0 / static_cast<double>(members[static_cast<std::size_t>(k)]);
        double norm2 = 0.0;
        for (int j = 0; j < v_size; ++j) {
          c[j] *= inv;
          norm2 += c[j] * c[j];
        }
        c_norm2[static_cast<std::size_t>(k)] = norm2;
      } else {
        // Reseed an empty cluster to the document farthest from its centroid.
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (doc_d2[i] > doc_d2[far]) far = i;
        set_centroid(k, x[far]);
        doc_d2[far] = 0.0;  // so a second empty cluster picks a different doc
      }
    }
  }

  return result;
}

}  // namespace dntm
