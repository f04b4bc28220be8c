#include "rimamba/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <type_traits>

#include "rimamba/errors.hpp"
#include "rimamba/prng.hpp"

namespace rimamba {

namespace {

template <class W, class Fn>
void visit(W& w, Fn&& fn) {
  using Value = std::conditional_t<std::is_const_v<W>, const float, float>;
  const auto emit = [&](std::string name, std::vector<std::uint32_t> dims, std::span<Value> data, TensorRole role,
                        std::size_t fan_in) {
    TensorView<Value> view{std::move(name), std::move(dims), data, role, fan_in};
    fn(view);
  };
  const auto dim = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  const auto linear = [&](const std::string& prefix, auto& lin) {
    const std::size_t in = lin.in_features();
    emit(prefix + ".weight", {dim(in), dim(lin.out_features())}, std::span<Value>(lin.weight.values()),
         TensorRole::linear_weight, in);
    emit(prefix + ".bias", {dim(lin.out_features())}, std::span<Value>(lin.bias), TensorRole::linear_bias, in);
  };
  const auto mlp = [&](const std::string& prefix, auto& m) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) linear(prefix + "." + std::to_string(l), m.layers[l]);
  };

  mlp("tokenizer.point_local", w.tokenizer.point_local);
  mlp("tokenizer.point_global", w.tokenizer.point_global);
  mlp("tokenizer.pos", w.tokenizer.pos);
  mlp("tokenizer.ori", w.tokenizer.ori);
  for (std::size_t i = 0; i < w.blocks.size(); ++i) {
    auto& blk = w.blocks[i];
    const std::string p = "blocks." + std::to_string(i);
    emit(p + ".norm", {dim(blk.norm.size())}, std::span<Value>(blk.norm), TensorRole::norm, 0);
    linear(p + ".film.pos_bottleneck", blk.film.pos_bottleneck);
    linear(p + ".film.ori_bottleneck", blk.film.ori_bottleneck);
    linear(p + ".film.prod_bottleneck", blk.film.prod_bottleneck);
    mlp(p + ".film.head", blk.film.head);
    auto& s = blk.scan;
    linear(p + ".scan.in_proj", s.in_proj);
    emit(p + ".scan.conv_weight", {dim(s.conv_weight.rows()), dim(s.conv_weight.cols())},
         std::span<Value>(s.conv_weight.values()), TensorRole::conv_weight, s.conv_weight.cols());
    emit(p + ".scan.conv_bias", {dim(s.conv_bias.size())}, std::span<Value>(s.conv_bias), TensorRole::conv_bias,
         s.conv_weight.cols());
    linear(p + ".scan.dt_proj", s.dt_proj);
    linear(p + ".scan.b_proj", s.b_proj);
    linear(p + ".scan.c_proj", s.c_proj);
    emit(p + ".scan.a_log", {dim(s.a_log.rows()), dim(s.a_log.cols())}, std::span<Value>(s.a_log.values()),
         TensorRole::a_log, 0);
    emit(p + ".scan.d", {dim(s.d.size())}, std::span<Value>(s.d), TensorRole::skip, 0);
    linear(p + ".scan.gate_proj", s.gate_proj);
    linear(p + ".scan.out_proj", s.out_proj);
  }
  emit("final_norm", {dim(w.final_norm.size())}, std::span<Value>(w.final_norm), TensorRole::norm, 0);
  linear("adapter_image", w.adapter_image);
  linear("adapter_text", w.adapter_text);
}

constexpr char kMagic[4] = {'R', 'I', 'M', 'W'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("weights: truncated ") + what + " at byte offset " + std::to_string(pos_));
  }
  std::uint64_t uint(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::array<std::uint32_t ModelConfig::*, 8> config_fields() {
  return {&ModelConfig::n_blocks,     &ModelConfig::dim,       &ModelConfig::n_patches,  &ModelConfig::neighbors,
          &ModelConfig::input_points, &ModelConfig::state_dim, &ModelConfig::conv_width, &ModelConfig::film_bottleneck};
}

}  // namespace

void for_each_tensor(ModelWeights<float>& w, const std::function<void(TensorView<float>&)>& fn) { visit(w, fn); }

void for_each_tensor(const ModelWeights<float>& w, const std::function<void(const TensorView<const float>&)>& fn) {
  visit(w, fn);
}

ModelWeights<float> init_weights(const ModelConfig& config, std::uint64_t seed, const TokenizerDims& dims) {
  ModelWeights<float> w = ModelWeights<float>::zeros(config, dims);
  Prng rng(seed);
  for_each_tensor(w, [&](TensorView<float>& t) {
    switch (t.role) {
      case TensorRole::linear_weight:
      case TensorRole::linear_bias:
      case TensorRole::conv_weight:
      case TensorRole::conv_bias: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
        for (float& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
        break;
      }
      case TensorRole::a_log: {
        const std::size_t n = t.dims[1];
        for (std::size_t i = 0; i < t.data.size(); ++i)
          t.data[i] = static_cast<float>(std::log(static_cast<double>(i % n + 1)));
        break;
      }
      case TensorRole::skip:
      case TensorRole::norm:
        for (float& v : t.data) v = 1.0f;
        break;
    }
  });
  return w;
}

std::vector<std::uint8_t> encode_weights(const ModelWeights<float>& w) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u16(out, w.version);
  for (auto field : config_fields()) put_u32(out, w.config.*field);
  for_each_tensor(w, [&](const TensorView<const float>& t) {
    put_u16(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    for (float v : t.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u32(out, bits);
    }
  });
  return out;
}

ModelWeights<float> decode_weights(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("weights: bad magic at byte offset 0");
  const auto version = static_cast<std::uint16_t>(r.uint(2, "version"));
  if (version != kWeightsVersion)
    throw FormatError("weights: unsupported version " + std::to_string(version) + " at byte offset 4");
  ModelConfig config;
  for (auto field : config_fields()) config.*field = static_cast<std::uint32_t>(r.uint(4, "config"));
  try {
    config.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("weights: ") + e.what());
  }

  struct Stored {
    std::vector<std::uint32_t> dims;
    std::string_view data;
    std::size_t offset;
  };
  std::map<std::string, Stored> stored;
  while (!r.done()) {
    const std::size_t at = r.offset();
    const auto len = static_cast<std::size_t>(r.uint(2, "tensor name length"));
    const std::string name(r.take(len, "tensor name"));
    const auto rank = static_cast<std::size_t>(r.uint(1, "tensor rank"));
    std::vector<std::uint32_t> dims(rank);
    std::size_t count = 1;
    for (auto& d : dims) {
      d = static_cast<std::uint32_t>(r.uint(4, "tensor dims"));
      count *= d;
    }
    const std::string_view data = r.take(4 * count, "tensor data");
    if (!stored.emplace(name, Stored{std::move(dims), data, at}).second)
      throw FormatError("weights: duplicate tensor '" + name + "' at byte offset " + std::to_string(at));
  }

  // Tokenizer widths are not part of the config block; read them off the shapes.
  const auto width = [&](const char* name, std::size_t axis) -> std::size_t {
    auto it = stored.find(name);
    if (it == stored.end() || it->second.dims.size() != 2) throw FormatError(std::string("weights: missing tensor '") + name + "'");
    return it->second.dims[axis];
  };
  TokenizerDims dims;
  dims.point_hidden = width("tokenizer.point_local.0.weight", 1);
  dims.point_local = width("tokenizer.point_local.1.weight", 1);
  dims.point_mid = width("tokenizer.point_global.0.weight", 1);
  dims.embed_hidden = width("tokenizer.pos.0.weight", 1);

  ModelWeights<float> w = ModelWeights<float>::zeros(config, dims);
  w.version = version;
  std::size_t filled = 0;
  for_each_tensor(w, [&](TensorView<float>& t) {
    auto it = stored.find(t.name);
    if (it == stored.end()) throw FormatError("weights: missing tensor '" + t.name + "'");
    if (it->second.dims != t.dims)
      throw FormatError("weights: shape mismatch for '" + t.name + "' at byte offset " + std::to_string(it->second.offset));
    std::memcpy(t.data.data(), it->second.data.data(), it->second.data.size());
    if constexpr (std::endian::native == std::endian::big)
      for (float& v : t.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, sizeof v);
      }
    ++filled;
  });
  if (filled != stored.size()) {
    std::map<std::string, bool> known;
    for_each_tensor(w, [&](TensorView<float>& t) { known[t.name] = true; });
    for (const auto& [name, st] : stored)
      if (!known.count(name))
        throw FormatError("weights: unknown tensor '" + name + "' at byte offset " + std::to_string(st.offset));
  }
  return w;
}

void save_weights(const ModelWeights<float>& w, const std::filesystem::path& path) {
  const auto bytes = encode_weights(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ModelWeights<float> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_weights(data);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void audit_weights(const ModelWeights<float>& w) {
  const ModelWeights<float> expected = ModelWeights<float>::zeros(w.config, w.tokenizer.dims());
  std::map<std::string, std::vector<std::uint32_t>> shapes;
  for_each_tensor(expected, [&](const TensorView<const float>& t) { shapes[t.name] = t.dims; });
  std::size_t count = 0;
  for_each_tensor(w, [&](const TensorView<const float>& t) {
    ++count;
    auto it = shapes.find(t.name);
    if (it == shapes.end() || it->second != t.dims) throw ArgumentError("weights: unexpected shape for " + t.name);
    std::size_t total = 1;
    for (auto d : t.dims) total *= d;
    if (total != t.data.size()) throw ArgumentError("weights: size mismatch for " + t.name);
    for (float v : t.data)
      if (!std::isfinite(v)) throw ArgumentError("weights: non-finite value in " + t.name);
  });
  if (count != shapes.size()) throw ArgumentError("weights: tensor count mismatch");
}

}  // namespace rimamba
