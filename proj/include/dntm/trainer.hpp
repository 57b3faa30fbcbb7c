#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dntm/corpus.hpp"
#include "dntm/model.hpp"
#include "dntm/objective.hpp"

namespace dntm {

// Everything a training run needs beyond the corpus itself. Serializable to
// a flat key=value file; parse(write(c)) reproduces c exactly (doubles are
// written with 17 significant digits).
struct TrainConfig {
  int epochs = 50;
  int batch_docs = 64;        // real documents per minibatch
  double fake_ratio = 1.0;    // fake docs per real doc in the batch
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int embed_dim = 50;   // d
  int num_topics = 20;  // K
  double init_scale = 0.05;
  int checkpoint_every = 0;  // epochs between checkpoint callbacks; 0 = final only
  FakeMode fake_mode = FakeMode::kUniform;
  LossWeights weights;
  int threads = 0;            // 0 = all available
  bool deterministic = false; // pin thread count and reduction order
  std::string log_path;       // append-only run log; empty = no log file

  void validate() const;  // throws std::invalid_argument
};

// Serialize to / parse from "key=value" lines ('#' comments and blank lines
// allowed). apply_train_config overlays onto an existing config, so a file
// may set only some keys; unknown keys are an error.
std::string write_train_config(const TrainConfig& config);
void apply_train_config(TrainConfig& config, std::istream& in);
TrainConfig parse_train_config(std::istream& in);

struct EpochRecord {
  int epoch = 0;        // 1-based
  double loss = 0.0;    // mean batch loss
  double entropy = 0.0; // mean per-word entropy over real words
  double kl = 0.0;      // mean per-word KL over real words
  double balance = 0.0; // mean per-batch balance entropy
  double seconds = 0.0; // wall clock for the epoch
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

// Invoked after epochs that hit the checkpoint_every cadence.
using CheckpointSink = std::function<void(int epoch, const ModelParams& params)>;

// Initializes parameters from config.seed, then runs epochs of shuffled
// minibatches with adaptive-moment updates (embedding rows untouched by a
// batch receive no moment decay). Returns the final parameters and the
// per-epoch log. Bit-reproducible for a fixed seed in deterministic mode.
// Throws std::runtime_error on non-finite loss/gradients, naming the batch.
std::pair<ModelParams, TrainLog> train(const Corpus& corpus, const TrainConfig& config,
                                       const CheckpointSink& on_checkpoint = {});

}  // namespace dntm
