#pragma once

#include <span>

#include "dntm/corpus.hpp"
#include "dntm/model.hpp"
#include "dntm/objective.hpp"

namespace dntm::reference {

// Straight-line serial evaluation of the batch objective, written
// independently of the production kernel: one pass per word occurrence, no
// unique-word compaction, no algebraic shortcuts in the backward pass.
// Slower by design; kept as the ground truth the fast kernel is tested
// against.
double batch_loss(const ModelParams& params, std::span<const Document> real_docs,
                  std::span<const Document> fake_docs, const LossWeights& weights,
                  BatchStats* stats = nullptr);

double batch_loss_and_gradients(const ModelParams& params, std::span<const Document> real_docs,
                                std::span<const Document> fake_docs, const LossWeights& weights,
                                Gradients& grads, BatchStats* stats = nullptr);

}  // namespace dntm::reference
