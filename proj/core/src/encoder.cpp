#include "rimamba/encoder.hpp"

#include <cmath>
#include <string>

#include "rimamba/errors.hpp"
#include "rimamba/frames.hpp"
#include "rimamba/patcher.hpp"

namespace rimamba {

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    rethrow_with_context(e, name);
  }
}

}  // namespace

SerializedPatches prepare_patches(const PointCloud& cloud, const ModelConfig& config, bool assume_normalized) {
  config.validate();
  const std::size_t need = std::max(config.n_patches, config.neighbors);
  if (cloud.size() < need)
    throw SizeError("encode: cloud has " + std::to_string(cloud.size()) + " points, need at least " +
                    std::to_string(need));

  const PointCloud normalized = assume_normalized ? cloud : stage("normalize", [&] { return normalize_cloud(cloud); });
  const auto centers = stage("fps", [&] { return fps(normalized.points, config.n_patches); });
  PatchSet ps = stage("knn", [&] { return knn_group(normalized.points, centers, config.neighbors); });
  auto lrfs = stage("patch frames", [&] { return patch_frames(ps); });
  for (std::size_t i = 0; i < lrfs.size(); ++i)
    if (lrfs[i].degenerate) {
      const auto& l = lrfs[i].eigenvalues;
      throw DegenerateError("patch frames: patch " + std::to_string(i) + " has a degenerate frame (eigenvalues " +
                            std::to_string(l[0]) + ", " + std::to_string(l[1]) + ", " + std::to_string(l[2]) + ")");
    }
  return stage("serialize", [&] { return serialize(std::move(ps), std::move(lrfs), normalized); });
}

template <class T>
std::vector<T> l2_normalized(std::vector<T> v) {
  T ss = T(0);
  for (T x : v) ss += x * x;
  const T n = std::sqrt(ss);
  if (!(n > T(0))) throw ArgumentError("l2_normalized: zero vector");
  for (T& x : v) x /= n;
  return v;
}

template <class T>
EmbeddingRecord<T> encode_tokens(const TokenSequence<T>& tokens, const ModelWeights<T>& weights,
                                 Matrix<T>* final_hidden) {
  if (!tokens.ordered) throw ArgumentError("encode: tokens must be in serialized order");
  Matrix<T> h = tokens.geo;
  for (std::size_t l = 0; l < weights.blocks.size(); ++l) h = ri_mamba_block(h, tokens.pos, tokens.ori, weights.blocks[l], l);
  h = rms_norm<T>(h, weights.final_norm);

  const std::size_t c = h.cols();
  Matrix<T> pooled(1, c);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    auto row = h.row(r);
    for (std::size_t j = 0; j < c; ++j) pooled(0, j) += row[j];
  }
  for (T& v : pooled.values()) v /= static_cast<T>(h.rows());

  EmbeddingRecord<T> rec;
  const Matrix<T> zi = weights.adapter_image.forward(pooled);
  const Matrix<T> zt = weights.adapter_text.forward(pooled);
  rec.z_p = l2_normalized(pooled.values());
  rec.z_i = l2_normalized(zi.values());
  rec.z_t = l2_normalized(zt.values());
  if (final_hidden) *final_hidden = std::move(h);
  return rec;
}

template <class T>
EncodeTrace<T> encode_traced(const PointCloud& cloud, const ModelWeights<T>& weights, const EncodeOptions& options) {
  EncodeTrace<T> trace;
  trace.patches = prepare_patches(cloud, weights.config, options.assume_normalized);
  trace.tokens = stage("tokenize", [&] { return tokenize(trace.patches, weights.tokenizer, options.tokenize); });
  trace.embedding = stage("blocks", [&] { return encode_tokens(trace.tokens, weights, &trace.hidden); });
  return trace;
}

template <class T>
EmbeddingRecord<T> encode(const PointCloud& cloud, const ModelWeights<T>& weights, const EncodeOptions& options) {
  return encode_traced(cloud, weights, options).embedding;
}

#define RIMAMBA_INSTANTIATE(T)                                                                              \
  template std::vector<T> l2_normalized(std::vector<T>);                                                    \
  template EmbeddingRecord<T> encode_tokens(const TokenSequence<T>&, const ModelWeights<T>&, Matrix<T>*);   \
  template EncodeTrace<T> encode_traced(const PointCloud&, const ModelWeights<T>&, const EncodeOptions&);   \
  template EmbeddingRecord<T> encode(const PointCloud&, const ModelWeights<T>&, const EncodeOptions&);

RIMAMBA_INSTANTIATE(float)
RIMAMBA_INSTANTIATE(double)

#undef RIMAMBA_INSTANTIATE

}  // namespace rimamba
