#pragma once

#include <string>

#include "dntm/corpus.hpp"
#include "dntm/model.hpp"

namespace dntm {

// Self-describing single-file snapshot of a trained model: format version,
// dimensions, the vocabulary (words and counts), then the parameter
// matrices as little-endian 64-bit floats in row-major order. Loading
// reproduces parameters bit-exactly and the vocabulary word-for-word.

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
};

// Dimension expectations for load; -1 means "accept any".
struct ExpectedDims {
  std::int64_t vocab_size = -1;
  std::int64_t embed_dim = -1;
  std::int64_t num_topics = -1;
};

// Writes atomically (temp file + rename). Throws std::runtime_error on I/O
// failure, std::invalid_argument if params and vocab disagree on V.
void save_checkpoint(const ModelParams& params, const Vocabulary& vocab, const std::string& path);

// Throws std::runtime_error with a one-line reason: "truncated checkpoint",
// bad magic, unsupported version, dimension mismatch against `expect`,
// trailing bytes, or non-finite parameters.
Checkpoint load_checkpoint(const std::string& path, const ExpectedDims& expect = {});

}  // namespace dntm
