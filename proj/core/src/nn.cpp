#include "rimamba/nn.hpp"

#include <algorithm>
#include <string>

#include "rimamba/errors.hpp"

namespace rimamba {

OpCounts& op_counts() {
  thread_local OpCounts counts;
  return counts;
}

namespace {

// Row blocks of 4 times column tiles of kTile accumulate in registers; the
// leftover columns and rows take the plain loops. Every element sums
// bias + x[0] w[0] + x[1] w[1] + ... in that order on every path, so a row's
// result never depends on its position in the batch.
template <class T>
constexpr std::size_t kTile = sizeof(T) == 4 ? 64 : 32;

template <class T>
void tile_4xN(const T* x, std::size_t in, const T* w, const T* b, std::size_t out, std::size_t o, T* y) {
  constexpr std::size_t N = kTile<T>;
  T acc[4][N];
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t j = 0; j < N; ++j) acc[r][j] = b[o + j];
  for (std::size_t k = 0; k < in; ++k) {
    const T* wk = w + k * out + o;
    const T a0 = x[k], a1 = x[in + k], a2 = x[2 * in + k], a3 = x[3 * in + k];
    for (std::size_t j = 0; j < N; ++j) {
      const T wv = wk[j];
      acc[0][j] += a0 * wv;
      acc[1][j] += a1 * wv;
      acc[2][j] += a2 * wv;
      acc[3][j] += a3 * wv;
    }
  }
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t j = 0; j < N; ++j) y[r * out + o + j] = acc[r][j];
}

template <class T>
void tile_1xN(const T* x, std::size_t in, const T* w, const T* b, std::size_t out, std::size_t o, T* y) {
  constexpr std::size_t N = kTile<T>;
  T acc[N];
  for (std::size_t j = 0; j < N; ++j) acc[j] = b[o + j];
  for (std::size_t k = 0; k < in; ++k) {
    const T* wk = w + k * out + o;
    const T a0 = x[k];
    for (std::size_t j = 0; j < N; ++j) acc[j] += a0 * wk[j];
  }
  for (std::size_t j = 0; j < N; ++j) y[o + j] = acc[j];
}

template <class T>
void columns_1(const T* x, std::size_t in, const T* w, const T* b, std::size_t out, std::size_t o0, T* y) {
  for (std::size_t o = o0; o < out; ++o) y[o] = b[o];
  for (std::size_t k = 0; k < in; ++k) {
    const T* wk = w + k * out;
    const T a0 = x[k];
    for (std::size_t o = o0; o < out; ++o) y[o] += a0 * wk[o];
  }
}

template <class T>
void linear_kernel(const T* x, std::size_t n, std::size_t in, const T* w, const T* b, std::size_t out, T* y) {
  constexpr std::size_t N = kTile<T>;
  const std::size_t tiled = out - out % N;
  const std::size_t blocked = n - n % 4;
  // Column tiles outermost so one in x N slice of w stays cached across rows.
  for (std::size_t o = 0; o < tiled; o += N) {
    for (std::size_t i = 0; i < blocked; i += 4) tile_4xN(x + i * in, in, w, b, out, o, y + i * out);
    for (std::size_t i = blocked; i < n; ++i) tile_1xN(x + i * in, in, w, b, out, o, y + i * out);
  }
  if (tiled < out)
    for (std::size_t i = 0; i < n; ++i) columns_1(x + i * in, in, w, b, out, tiled, y + i * out);
}

}  // namespace

template <class T>
void Linear<T>::forward_into(const Matrix<T>& x, Matrix<T>& y) const {
  if (x.cols() != in_features())
    throw ArgumentError("linear: input has " + std::to_string(x.cols()) + " columns, expected " +
                        std::to_string(in_features()));
  if (y.rows() != x.rows() || y.cols() != out_features()) y.resize(x.rows(), out_features());
  linear_kernel(x.data(), x.rows(), in_features(), weight.data(), bias.data(), out_features(), y.data());
  op_counts().macs += static_cast<std::uint64_t>(x.rows()) * in_features() * out_features();
}

template <class T>
Matrix<T> Linear<T>::forward(const Matrix<T>& x) const {
  Matrix<T> y(x.rows(), out_features());
  forward_into(x, y);
  return y;
}

template <class T>
Mlp<T>::Mlp(std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw ArgumentError("mlp: need at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) layers.emplace_back(dims[i], dims[i + 1]);
}

template <class T>
Matrix<T> Mlp<T>::forward(const Matrix<T>& x) const {
  op_counts().mlp_calls += x.rows();
  Matrix<T> cur = layers.front().forward(x);
  for (std::size_t l = 1; l < layers.size(); ++l) {
    for (T& v : cur.values()) v = gelu(v);
    cur = layers[l].forward(cur);
  }
  return cur;
}

template <class T>
std::vector<T> column_max(const Matrix<T>& x) {
  if (x.rows() == 0) throw SizeError("column_max: empty matrix");
  std::vector<T> out(x.row(0).begin(), x.row(0).end());
  for (std::size_t r = 1; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] = std::max(out[c], row[c]);
  }
  return out;
}

template <class T>
Matrix<T> rms_norm(const Matrix<T>& x, std::span<const T> weight, T eps) {
  if (weight.size() != x.cols()) throw ArgumentError("rms_norm: weight size mismatch");
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    T ss = T(0);
    for (T v : in) ss += v * v;
    const T scale = T(1) / std::sqrt(ss / static_cast<T>(x.cols()) + eps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) o[c] = in[c] * scale * weight[c];
  }
  return out;
}

template struct Linear<float>;
template struct Linear<double>;
template struct Mlp<float>;
template struct Mlp<double>;
template std::vector<float> column_max(const Matrix<float>&);
template std::vector<double> column_max(const Matrix<double>&);
template Matrix<float> rms_norm(const Matrix<float>&, std::span<const float>, float);
template Matrix<double> rms_norm(const Matrix<double>&, std::span<const double>, double);

}  // namespace rimamba
