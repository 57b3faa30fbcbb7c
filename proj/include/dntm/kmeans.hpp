#pragma once

#include <cstdint>
#include <vector>

#include "dntm/analysis.hpp"
#include "dntm/corpus.hpp"

namespace dntm {

struct KmeansResult {
  ClusterAssignment assignment;
  double inertia = 0.0;  // sum of squared distances to the owning centroid
  int iterations = 0;
};

// Lloyd's algorithm over L2-normalized tf-idf document vectors (raw term
// frequency, idf = ln(N/df)), seeded k-means++ style from `seed`. Stops
// after 100 iterations or when the relative inertia change drops below
// 1e-6. Empty clusters are reseeded to the document farthest from its
// centroid. Deterministic for a fixed seed.
KmeansResult kmeans_baseline(const Corpus& corpus, int num_clusters, std::uint64_t seed,
                             int threads = 0);

}  // namespace dntm
