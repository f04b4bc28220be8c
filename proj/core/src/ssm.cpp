#include "rimamba/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rimamba/errors.hpp"

namespace rimamba {

void ModelConfig::validate() const {
  const auto require = [](std::uint32_t v, const char* name) {
    if (v == 0) throw ArgumentError(std::string("model config: ") + name + " must be positive");
  };
  require(n_blocks, "n_blocks");
  require(dim, "dim");
  require(n_patches, "n_patches");
  require(neighbors, "neighbors");
  require(input_points, "input_points");
  require(state_dim, "state_dim");
  require(conv_width, "conv_width");
  require(film_bottleneck, "film_bottleneck");
}

template <class T>
ModelWeights<T> ModelWeights<T>::zeros(const ModelConfig& config, const TokenizerDims& dims) {
  config.validate();
  const std::size_t c = config.dim;
  const std::size_t b = config.film_bottleneck;
  const std::size_t n = config.state_dim;

  ModelWeights<T> w;
  w.config = config;
  w.tokenizer = TokenizerParams<T>::make(c, dims);
  w.blocks.resize(config.n_blocks);
  for (auto& blk : w.blocks) {
    blk.norm.assign(c, T(0));
    blk.film.pos_bottleneck = Linear<T>(c, b);
    blk.film.ori_bottleneck = Linear<T>(c, b);
    blk.film.prod_bottleneck = Linear<T>(c, b);
    blk.film.head = Mlp<T>({3 * b, b, 2 * c});
    auto& s = blk.scan;
    s.in_proj = Linear<T>(c, c);
    s.conv_weight = Matrix<T>(c, config.conv_width);
    s.conv_bias.assign(c, T(0));
    s.dt_proj = Linear<T>(c, c);
    s.b_proj = Linear<T>(c, n);
    s.c_proj = Linear<T>(c, n);
    s.a_log = Matrix<T>(c, n);
    s.d.assign(c, T(0));
    s.gate_proj = Linear<T>(c, c);
    s.out_proj = Linear<T>(c, c);
  }
  w.final_norm.assign(c, T(0));
  w.adapter_image = Linear<T>(c, c);
  w.adapter_text = Linear<T>(c, c);
  return w;
}

template <class T>
template <class U>
ModelWeights<U> ModelWeights<T>::cast() const {
  ModelWeights<U> out;
  out.config = config;
  out.version = version;
  out.tokenizer = tokenizer.template cast<U>();
  for (const auto& blk : blocks) {
    BlockWeights<U> nb;
    nb.norm.assign(blk.norm.begin(), blk.norm.end());
    nb.film.pos_bottleneck = blk.film.pos_bottleneck.template cast<U>();
    nb.film.ori_bottleneck = blk.film.ori_bottleneck.template cast<U>();
    nb.film.prod_bottleneck = blk.film.prod_bottleneck.template cast<U>();
    nb.film.head = blk.film.head.template cast<U>();
    const auto& s = blk.scan;
    auto& t = nb.scan;
    t.in_proj = s.in_proj.template cast<U>();
    t.conv_weight = s.conv_weight.template cast<U>();
    t.conv_bias.assign(s.conv_bias.begin(), s.conv_bias.end());
    t.dt_proj = s.dt_proj.template cast<U>();
    t.b_proj = s.b_proj.template cast<U>();
    t.c_proj = s.c_proj.template cast<U>();
    t.a_log = s.a_log.template cast<U>();
    t.d.assign(s.d.begin(), s.d.end());
    t.gate_proj = s.gate_proj.template cast<U>();
    t.out_proj = s.out_proj.template cast<U>();
    out.blocks.push_back(std::move(nb));
  }
  out.final_norm.assign(final_norm.begin(), final_norm.end());
  out.adapter_image = adapter_image.template cast<U>();
  out.adapter_text = adapter_text.template cast<U>();
  return out;
}

template <class T>
Matrix<T> film(const Matrix<T>& h, const Matrix<T>& pos, const Matrix<T>& ori, const FilmParams<T>& params) {
  const std::size_t n = h.rows();
  const std::size_t c = h.cols();
  if (pos.rows() != n || ori.rows() != n || pos.cols() != c || ori.cols() != c)
    throw ArgumentError("film: hidden, pos and ori shapes differ");

  Matrix<T> prod(n, c);
  for (std::size_t i = 0; i < prod.size(); ++i) prod.data()[i] = pos.data()[i] * ori.data()[i];

  const Matrix<T> pb = params.pos_bottleneck.forward(pos);
  const Matrix<T> ob = params.ori_bottleneck.forward(ori);
  const Matrix<T> qb = params.prod_bottleneck.forward(prod);
  const std::size_t b = pb.cols();

  Matrix<T> joined(n, 3 * b);
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = joined.row(r);
    std::copy(pb.row(r).begin(), pb.row(r).end(), dst.begin());
    std::copy(ob.row(r).begin(), ob.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(b));
    std::copy(qb.row(r).begin(), qb.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(2 * b));
  }
  const Matrix<T> mod = params.head.forward(joined);
  if (mod.cols() != 2 * c) throw ArgumentError("film: head must output 2*C channels");

  Matrix<T> out(n, c);
  for (std::size_t r = 0; r < n; ++r) {
    auto hr = h.row(r);
    auto mr = mod.row(r);
    auto o = out.row(r);
    for (std::size_t j = 0; j < c; ++j) o[j] = hr[j] * (T(1) + mr[j]) + mr[c + j];
  }
  return out;
}

template <class T>
Matrix<T> selective_scan(const Matrix<T>& x, const ScanParams<T>& params, ScanTrace<T>* trace) {
  const std::size_t steps = x.rows();
  const std::size_t c = params.channels();
  const std::size_t n = params.state_dim();
  const std::size_t w = params.conv_width();
  if (steps < 1) throw SizeError("selective_scan: empty sequence");
  if (x.cols() != params.in_proj.in_features()) throw ArgumentError("selective_scan: channel mismatch");

  const Matrix<T> xin = params.in_proj.forward(x);

  Matrix<T> u(steps, c);
  for (std::size_t t = 0; t < steps; ++t) {
    auto o = u.row(t);
    for (std::size_t ch = 0; ch < c; ++ch) o[ch] = params.conv_bias[ch];
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t back = w - 1 - j;
      if (back > t) continue;
      auto src = xin.row(t - back);
      for (std::size_t ch = 0; ch < c; ++ch) o[ch] += params.conv_weight(ch, j) * src[ch];
    }
    for (T& v : o) v = silu(v);
  }
  op_counts().macs += static_cast<std::uint64_t>(steps) * c * w;

  Matrix<T> delta = params.dt_proj.forward(u);
  for (T& v : delta.values()) v = softplus(v);
  const Matrix<T> bm = params.b_proj.forward(u);
  const Matrix<T> cm = params.c_proj.forward(u);

  Matrix<T> a(c, n);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = -std::exp(params.a_log.data()[i]);

  Matrix<T> state(c, n);
  Matrix<T> y(steps, c);
  for (std::size_t t = 0; t < steps; ++t) {
    auto dt_row = delta.row(t);
    auto u_row = u.row(t);
    auto b_row = bm.row(t);
    auto c_row = cm.row(t);
    auto y_row = y.row(t);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T dt = dt_row[ch];
      const T du = dt * u_row[ch];
      auto s = state.row(ch);
      auto a_row = a.row(ch);
      T acc = T(0);
      for (std::size_t k = 0; k < n; ++k) {
        s[k] = std::exp(dt * a_row[k]) * s[k] + du * b_row[k];
        acc += c_row[k] * s[k];
      }
      y_row[ch] = acc + params.d[ch] * u_row[ch];
    }
  }
  op_counts().macs += static_cast<std::uint64_t>(steps) * c * n;

  Matrix<T> gate = params.gate_proj.forward(x);
  for (T& v : gate.values()) v = silu(v);
  Matrix<T> gated(steps, c);
  for (std::size_t i = 0; i < gated.size(); ++i) gated.data()[i] = y.data()[i] * gate.data()[i];
  Matrix<T> out = params.out_proj.forward(gated);

  if (trace) {
    trace->u = std::move(u);
    trace->delta = std::move(delta);
    trace->b = bm;
    trace->c = cm;
    trace->y = std::move(y);
    trace->gate = std::move(gate);
  }
  return out;
}

template <class T>
Matrix<T> reverse_tokens(const Matrix<T>& x) {
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(x.rows() - 1 - r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

template <class T>
Matrix<T> ri_mamba_block(const Matrix<T>& hidden, const Matrix<T>& pos, const Matrix<T>& ori,
                         const BlockWeights<T>& weights, std::size_t layer) {
  const bool reversed = scans_reversed(layer);
  Matrix<T> seq = film(hidden, pos, ori, weights.film);
  if (reversed) seq = reverse_tokens(seq);
  const Matrix<T> mixed = selective_scan(rms_norm<T>(seq, weights.norm), weights.scan);
  for (std::size_t i = 0; i < seq.size(); ++i) seq.data()[i] += mixed.data()[i];
  return reversed ? reverse_tokens(seq) : seq;
}

template <class T>
Matrix<T> reference_attention(const Matrix<T>& x) {
  const std::size_t steps = x.rows();
  const std::size_t c = x.cols();

  Linear<T> scores_op;  // x -> x X^T
  scores_op.weight = Matrix<T>(c, steps);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t ch = 0; ch < c; ++ch) scores_op.weight(ch, t) = x(t, ch);
  scores_op.bias.assign(steps, T(0));
  Matrix<T> scores = scores_op.forward(x);

  const T scale = T(1) / std::sqrt(static_cast<T>(c));
  for (std::size_t r = 0; r < steps; ++r) {
    auto row = scores.row(r);
    T mx = row[0] * scale;
    for (T& v : row) {
      v *= scale;
      mx = std::max(mx, v);
    }
    T sum = T(0);
    for (T& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (T& v : row) v /= sum;
  }

  Linear<T> mix_op;  // p -> p X
  mix_op.weight = x;
  mix_op.bias.assign(c, T(0));
  return mix_op.forward(scores);
}

#define RIMAMBA_INSTANTIATE(T)                                                                                 \
  template struct ModelWeights<T>;                                                                             \
  template Matrix<T> film(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, const FilmParams<T>&);         \
  template Matrix<T> selective_scan(const Matrix<T>&, const ScanParams<T>&, ScanTrace<T>*);                    \
  template Matrix<T> reverse_tokens(const Matrix<T>&);                                                         \
  template Matrix<T> ri_mamba_block(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, const BlockWeights<T>&, \
                                    std::size_t);                                                              \
  template Matrix<T> reference_attention(const Matrix<T>&);

RIMAMBA_INSTANTIATE(float)
RIMAMBA_INSTANTIATE(double)

#undef RIMAMBA_INSTANTIATE

template ModelWeights<double> ModelWeights<float>::cast<double>() const;
template ModelWeights<float> ModelWeights<float>::cast<float>() const;
template ModelWeights<float> ModelWeights<double>::cast<float>() const;

}  // namespace rimamba
