#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rimamba/frames.hpp"
#include "rimamba/geom3.hpp"
#include "rimamba/nn.hpp"
#include "rimamba/serializer.hpp"

namespace rimamba {

/// Hidden widths of the patch tokenizer MLPs.
struct TokenizerDims {
  std::size_t point_hidden = 128;  // first shared MLP: 3 -> point_hidden -> point_local
  std::size_t point_local = 256;
  std::size_t point_mid = 512;     // second shared MLP: 2*point_local -> point_mid -> C
  std::size_t embed_hidden = 128;  // pos / ori MLPs: in -> embed_hidden -> C
};

template <class T>
struct TokenizerParams {
  Mlp<T> point_local;   // per point, before the first max-pool
  Mlp<T> point_global;  // per point on [pooled, local], before the second max-pool
  Mlp<T> pos;           // 3 -> C
  Mlp<T> ori;           // 9 -> C

  static TokenizerParams make(std::size_t channels, const TokenizerDims& dims = {});
  std::size_t channels() const { return point_global.out_features(); }
  /// Hidden widths implied by the layer shapes (empty params give zeros).
  TokenizerDims dims() const {
    if (point_local.layers.size() < 2 || point_global.layers.empty() || pos.layers.empty()) return {0, 0, 0, 0};
    return {point_local.layers[0].out_features(), point_local.layers[1].out_features(),
            point_global.layers[0].out_features(), pos.layers[0].out_features()};
  }

  template <class U>
  TokenizerParams<U> cast() const {
    return {point_local.template cast<U>(), point_global.template cast<U>(), pos.template cast<U>(),
            ori.template cast<U>()};
  }
};

/// Per-patch embeddings, one row per patch.
template <class T>
struct TokenSequence {
  Matrix<T> geo;
  Matrix<T> pos;
  Matrix<T> ori;
  bool ordered = false;  // rows already permuted into serialization order

  std::size_t num_tokens() const { return geo.rows(); }
};

/// Mini-PointNet over one aligned patch (k x 3): shared MLP, max-pool,
/// concatenate the pooled vector in front of every point feature, second
/// shared MLP, max-pool. Throws SizeError for an empty patch.
template <class T>
std::vector<T> mini_pointnet(const Matrix<T>& aligned_patch, const TokenizerParams<T>& params);

/// Same network over G stacked patches of k rows each; returns G x C.
template <class T>
Matrix<T> mini_pointnet_batch(const Matrix<T>& stacked, std::size_t k, const TokenizerParams<T>& params);

/// MLP over centers already projected into their patch frames (G x 3).
template <class T>
Matrix<T> pos_embed(const Matrix<T>& projected_centers, const Mlp<T>& mlp);

/// MLP over each flattened (row-major) relative pose. One MLP call per pose.
template <class T>
Matrix<T> ori_embed(std::span<const Mat3> relative_poses, const Mlp<T>& mlp);

/// Quadratic baseline: row i*G + j holds MLP(flatten(relative_pose(F_i, F_j))).
template <class T>
Matrix<T> pairwise_ori_baseline(std::span<const Frame> lrfs, const Mlp<T>& mlp);

struct TokenizeOptions {
  /// When false every patch frame is replaced by the identity, which
  /// produces a pose-dependent (non-invariant) ablation.
  bool align_patches = true;
};

/// geo/pos/ori embeddings of every patch, rows in serialization order.
template <class T>
TokenSequence<T> tokenize(const SerializedPatches& sp, const TokenizerParams<T>& params,
                          const TokenizeOptions& options = {});

/// Flattened row-major 3x3 as a 9-vector.
std::array<double, 9> flatten(const Mat3& m);

}  // namespace rimamba
