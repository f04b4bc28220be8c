#pragma once

#include <vector>

#include "rimamba/cloud_io.hpp"
#include "rimamba/serializer.hpp"
#include "rimamba/ssm.hpp"
#include "rimamba/tokenizer.hpp"

namespace rimamba {

template <class T>
struct EmbeddingRecord {
  std::vector<T> z_p;  // pooled shape embedding
  std::vector<T> z_i;  // image-side adapter output
  std::vector<T> z_t;  // text-side adapter output
};

struct EncodeOptions {
  TokenizeOptions tokenize;
  /// Skip normalize_cloud (the cloud is already centered and scaled).
  bool assume_normalized = false;
};

/// normalize -> fps -> knn -> patch frames -> serialize. Errors carry the
/// failing stage as a prefix.
SerializedPatches prepare_patches(const PointCloud& cloud, const ModelConfig& config, bool assume_normalized = false);

/// Everything encode() computes, kept for inspection.
template <class T>
struct EncodeTrace {
  SerializedPatches patches;
  TokenSequence<T> tokens;
  Matrix<T> hidden;  // after the last block and the final norm, serialized order
  EmbeddingRecord<T> embedding;
};

/// Full pipeline: patches, tokens (h_0 = geo), L blocks, final RMS norm,
/// mean over tokens -> z_p, adapters -> z_i, z_t; all three L2-normalized.
template <class T>
EmbeddingRecord<T> encode(const PointCloud& cloud, const ModelWeights<T>& weights, const EncodeOptions& options = {});

template <class T>
EncodeTrace<T> encode_traced(const PointCloud& cloud, const ModelWeights<T>& weights, const EncodeOptions& options = {});

/// Runs the block stack and pooling on ready-made tokens.
template <class T>
EmbeddingRecord<T> encode_tokens(const TokenSequence<T>& tokens, const ModelWeights<T>& weights,
                                 Matrix<T>* final_hidden = nullptr);

template <class T>
std::vector<T> l2_normalized(std::vector<T> v);

}  // namespace rimamba
