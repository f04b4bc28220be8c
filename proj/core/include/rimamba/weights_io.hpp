#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rimamba/ssm.hpp"

namespace rimamba {

enum class TensorRole { linear_weight, linear_bias, conv_weight, conv_bias, a_log, skip, norm };

/// View of one named tensor inside ModelWeights.
template <class T>
struct TensorView {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::span<T> data;
  TensorRole role;
  std::size_t fan_in;
};

/// Visits every tensor in a fixed order (the file order).
void for_each_tensor(ModelWeights<float>& w, const std::function<void(TensorView<float>&)>& fn);
void for_each_tensor(const ModelWeights<float>& w, const std::function<void(const TensorView<const float>&)>& fn);

/// Linear weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the
/// state matrix is A[c][n] = -(n + 1); skip D = 1; norm weights = 1.
ModelWeights<float> init_weights(const ModelConfig& config, std::uint64_t seed, const TokenizerDims& dims = {});

/// RIMW container: magic, u16 version, 8 u32 config fields, then per tensor
/// u16 name length, name, u8 rank, u32 dims, f32 data (all little-endian).
std::vector<std::uint8_t> encode_weights(const ModelWeights<float>& w);
ModelWeights<float> decode_weights(std::string_view bytes);

void save_weights(const ModelWeights<float>& w, const std::filesystem::path& path);
ModelWeights<float> load_weights(const std::filesystem::path& path);

/// Throws ArgumentError naming the first non-finite or mis-shaped tensor.
void audit_weights(const ModelWeights<float>& w);

/// Zeroes the scan output projections so each block reduces to FiLM.
template <class T>
void zero_scan_outputs(ModelWeights<T>& w) {
  for (auto& blk : w.blocks) {
    std::fill(blk.scan.out_proj.weight.values().begin(), blk.scan.out_proj.weight.values().end(), T(0));
    std::fill(blk.scan.out_proj.bias.begin(), blk.scan.out_proj.bias.end(), T(0));
  }
}

}  // namespace rimamba
