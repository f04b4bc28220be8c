#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rimamba {

/// Dense row-major matrix. Rows are tokens/points, columns are channels.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  void resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, T{});
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Instrumentation for complexity claims. Counters are thread-local, so
/// concurrent encodes do not interfere.
struct OpCounts {
  std::uint64_t mlp_calls = 0;  // one per input row pushed through an Mlp
  std::uint64_t macs = 0;       // multiply-accumulates in linear layers and scans
};

OpCounts& op_counts();

/// Resets the thread's counters on construction; delta() reports what ran since.
class OpCountScope {
 public:
  OpCountScope() { op_counts() = {}; }
  const OpCounts& delta() const { return op_counts(); }
};

/// y = x W + b with W stored in x (in x out). Each output element is
/// accumulated in input-channel order, independent of its row position.
template <class T>
struct Linear {
  Matrix<T> weight;  // in x out
  std::vector<T> bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out) : weight(in, out), bias(out) {}

  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }

  Matrix<T> forward(const Matrix<T>& x) const;
  void forward_into(const Matrix<T>& x, Matrix<T>& y) const;

  template <class U>
  Linear<U> cast() const {
    Linear<U> out;
    out.weight = weight.template cast<U>();
    out.bias.assign(bias.begin(), bias.end());
    return out;
  }
};

/// Stack of Linear layers with GELU between consecutive layers.
template <class T>
struct Mlp {
  std::vector<Linear<T>> layers;

  Mlp() = default;
  /// dims = {in, hidden..., out}
  explicit Mlp(std::span<const std::size_t> dims);
  Mlp(std::initializer_list<std::size_t> dims) : Mlp(std::span<const std::size_t>(dims.begin(), dims.size())) {}

  std::size_t in_features() const { return layers.front().in_features(); }
  std::size_t out_features() const { return layers.back().out_features(); }

  /// Counts one MLP call per row of x.
  Matrix<T> forward(const Matrix<T>& x) const;

  template <class U>
  Mlp<U> cast() const {
    Mlp<U> out;
    for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
    return out;
  }
};

template <class T>
inline T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.70710678118654752440)));
}

template <class T>
inline T silu(T x) {
  return x / (T(1) + std::exp(-x));
}

template <class T>
inline T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

/// Per-column maximum over rows.
template <class T>
std::vector<T> column_max(const Matrix<T>& x);

/// Per-row RMS normalization scaled by `weight`.
template <class T>
Matrix<T> rms_norm(const Matrix<T>& x, std::span<const T> weight, T eps = T(1e-6));

extern template struct Linear<float>;
extern template struct Linear<double>;
extern template struct Mlp<float>;
extern template struct Mlp<double>;

}  // namespace rimamba
