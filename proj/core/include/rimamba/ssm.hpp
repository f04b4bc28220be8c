#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rimamba/nn.hpp"
#include "rimamba/tokenizer.hpp"

namespace rimamba {

struct ModelConfig {
  std::uint32_t n_blocks = 12;
  std::uint32_t dim = 512;
  std::uint32_t n_patches = 64;
  std::uint32_t neighbors = 32;
  std::uint32_t input_points = 10000;
  std::uint32_t state_dim = 16;
  std::uint32_t conv_width = 4;
  std::uint32_t film_bottleneck = 128;

  /// Throws ArgumentError on zero sizes.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Per-layer FiLM generator. gamma = 1 + head[:C], beta = head[C:].
template <class T>
struct FilmParams {
  Linear<T> pos_bottleneck;   // C -> b
  Linear<T> ori_bottleneck;   // C -> b
  Linear<T> prod_bottleneck;  // C -> b, applied to pos * ori
  Mlp<T> head;                // 3b -> b -> 2C
};

template <class T>
struct ScanParams {
  Linear<T> in_proj;      // C -> C
  Matrix<T> conv_weight;  // C x conv_width, tap conv_width-1 multiplies the current token
  std::vector<T> conv_bias;
  Linear<T> dt_proj;      // C -> C, softplus gives the step size
  Linear<T> b_proj;       // C -> state_dim
  Linear<T> c_proj;       // C -> state_dim
  Matrix<T> a_log;        // C x state_dim, A = -exp(a_log)
  std::vector<T> d;       // C
  Linear<T> gate_proj;    // C -> C
  Linear<T> out_proj;     // C -> C

  std::size_t channels() const { return in_proj.out_features(); }
  std::size_t state_dim() const { return a_log.cols(); }
  std::size_t conv_width() const { return conv_weight.cols(); }
};

template <class T>
struct BlockWeights {
  std::vector<T> norm;  // RMS norm weight before the scan
  FilmParams<T> film;
  ScanParams<T> scan;
};

inline constexpr std::uint16_t kWeightsVersion = 1;

template <class T>
struct ModelWeights {
  ModelConfig config;
  std::uint16_t version = kWeightsVersion;
  TokenizerParams<T> tokenizer;
  std::vector<BlockWeights<T>> blocks;
  std::vector<T> final_norm;
  Linear<T> adapter_image;  // z_p -> z_i
  Linear<T> adapter_text;   // z_p -> z_t

  /// Zero-filled weights with every shape implied by `config`.
  static ModelWeights zeros(const ModelConfig& config, const TokenizerDims& dims = {});

  template <class U>
  ModelWeights<U> cast() const;
};

/// h * (1 + gamma) + beta with gamma, beta from pos, ori and pos*ori.
template <class T>
Matrix<T> film(const Matrix<T>& h, const Matrix<T>& pos, const Matrix<T>& ori, const FilmParams<T>& params);

/// Intermediate tensors of one selective_scan call (rows are tokens).
template <class T>
struct ScanTrace {
  Matrix<T> u;      // after in_proj, causal conv and SiLU
  Matrix<T> delta;  // T x C
  Matrix<T> b;      // T x state_dim
  Matrix<T> c;      // T x state_dim
  Matrix<T> y;      // recurrence output plus skip, before the gate
  Matrix<T> gate;   // SiLU(gate_proj(x))
};

/// Causal selective state-space mixer over a token sequence (T x C):
///   u = SiLU(causal_depthwise_conv(in_proj(x)))
///   delta = softplus(dt_proj(u)), B = b_proj(u), C = c_proj(u), A = -exp(a_log)
///   s_t = exp(delta_t A) * s_{t-1} + delta_t B_t u_t,  y_t = <C_t, s_t> + D u_t
///   out = out_proj(y * SiLU(gate_proj(x)))
/// Cost is linear in T.
template <class T>
Matrix<T> selective_scan(const Matrix<T>& x, const ScanParams<T>& params, ScanTrace<T>* trace = nullptr);

/// Reverses token order.
template <class T>
Matrix<T> reverse_tokens(const Matrix<T>& x);

/// Scan direction of zero-based `layer`: layers 0, 2, 4, ... scan left to
/// right, layers 1, 3, 5, ... right to left.
inline bool scans_reversed(std::size_t layer) { return layer % 2 == 1; }

/// One block: FiLM, optional reversal, pre-norm scan with residual, reversal back.
template <class T>
Matrix<T> ri_mamba_block(const Matrix<T>& hidden, const Matrix<T>& pos, const Matrix<T>& ori,
                         const BlockWeights<T>& weights, std::size_t layer);

/// softmax(X X^T / sqrt(C)) X, the quadratic token-mixing reference used by
/// the complexity benchmarks.
template <class T>
Matrix<T> reference_attention(const Matrix<T>& x);

}  // namespace rimamba
