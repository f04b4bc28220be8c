#include "rimamba/tokenizer.hpp"

#include <algorithm>
#include <string>

#include "rimamba/errors.hpp"

namespace rimamba {

std::array<double, 9> flatten(const Mat3& m) { return m.m; }

template <class T>
TokenizerParams<T> TokenizerParams<T>::make(std::size_t channels, const TokenizerDims& dims) {
  TokenizerParams<T> p;
  p.point_local = Mlp<T>({3, dims.point_hidden, dims.point_local});
  p.point_global = Mlp<T>({2 * dims.point_local, dims.point_mid, channels});
  p.pos = Mlp<T>({3, dims.embed_hidden, channels});
  p.ori = Mlp<T>({9, dims.embed_hidden, channels});
  return p;
}

namespace {

template <class T>
Matrix<T> pooled_rows(const Matrix<T>& x, std::size_t k) {
  const std::size_t groups = x.rows() / k;
  Matrix<T> out(groups, x.cols());
  for (std::size_t g = 0; g < groups; ++g) {
    auto o = out.row(g);
    auto first = x.row(g * k);
    std::copy(first.begin(), first.end(), o.begin());
    for (std::size_t j = 1; j < k; ++j) {
      auto r = x.row(g * k + j);
      for (std::size_t c = 0; c < x.cols(); ++c) o[c] = std::max(o[c], r[c]);
    }
  }
  return out;
}

}  // namespace

template <class T>
Matrix<T> mini_pointnet_batch(const Matrix<T>& stacked, std::size_t k, const TokenizerParams<T>& params) {
  if (k < 1) throw SizeError("mini_pointnet: patch must hold at least one point");
  if (stacked.cols() != 3) throw ArgumentError("mini_pointnet: expected 3 columns");
  if (stacked.rows() % k != 0) throw ArgumentError("mini_pointnet: row count is not a multiple of k");

  const Matrix<T> local = params.point_local.forward(stacked);
  const Matrix<T> pooled = pooled_rows(local, k);
  const std::size_t width = local.cols();

  Matrix<T> joined(stacked.rows(), 2 * width);
  for (std::size_t r = 0; r < stacked.rows(); ++r) {
    auto dst = joined.row(r);
    auto g = pooled.row(r / k);
    auto l = local.row(r);
    std::copy(g.begin(), g.end(), dst.begin());
    std::copy(l.begin(), l.end(), dst.begin() + static_cast<std::ptrdiff_t>(width));
  }
  return pooled_rows(params.point_global.forward(joined), k);
}

template <class T>
std::vector<T> mini_pointnet(const Matrix<T>& aligned_patch, const TokenizerParams<T>& params) {
  if (aligned_patch.rows() < 1) throw SizeError("mini_pointnet: patch must hold at least one point");
  const Matrix<T> out = mini_pointnet_batch(aligned_patch, aligned_patch.rows(), params);
  return {out.row(0).begin(), out.row(0).end()};
}

template <class T>
Matrix<T> pos_embed(const Matrix<T>& projected_centers, const Mlp<T>& mlp) {
  if (projected_centers.cols() != 3) throw ArgumentError("pos_embed: expected 3 columns");
  return mlp.forward(projected_centers);
}

template <class T>
Matrix<T> ori_embed(std::span<const Mat3> relative_poses, const Mlp<T>& mlp) {
  Matrix<T> in(relative_poses.size(), 9);
  for (std::size_t i = 0; i < relative_poses.size(); ++i)
    for (std::size_t j = 0; j < 9; ++j) in(i, j) = static_cast<T>(relative_poses[i].m[j]);
  return mlp.forward(in);
}

template <class T>
Matrix<T> pairwise_ori_baseline(std::span<const Frame> lrfs, const Mlp<T>& mlp) {
  const std::size_t g = lrfs.size();
  std::vector<Mat3> poses;
  poses.reserve(g * g);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) poses.push_back(relative_pose(lrfs[i], lrfs[j]));
  return ori_embed<T>(poses, mlp);
}

template <class T>
TokenSequence<T> tokenize(const SerializedPatches& sp, const TokenizerParams<T>& params,
                          const TokenizeOptions& options) {
  const PatchSet& ps = sp.patch_set;
  const std::size_t g = ps.num_patches();
  const std::size_t k = ps.k;
  if (sp.lrfs.size() != g || sp.order.size() != g) throw ArgumentError("tokenize: inconsistent serialized patches");

  // Build inputs directly in serialized order.
  Matrix<T> stacked(g * k, 3);
  Matrix<T> centers(g, 3);
  std::vector<Mat3> poses(g);
  const Frame identity{Mat3::identity(), FrameKind::local};
  for (std::size_t pos = 0; pos < g; ++pos) {
    const std::size_t i = sp.order[pos];
    const Frame& f = options.align_patches ? sp.lrfs[i].frame : identity;
    const auto patch = ps.patch(i);
    for (std::size_t j = 0; j < k; ++j) {
      const Vec3 a = align(patch[j], f);
      for (int c = 0; c < 3; ++c) stacked(pos * k + j, c) = static_cast<T>(a[c]);
    }
    const Vec3 pc = align(ps.centers[i], f);
    for (int c = 0; c < 3; ++c) centers(pos, c) = static_cast<T>(pc[c]);
    poses[pos] = relative_pose(f, sp.grf.frame);
  }

  TokenSequence<T> out;
  out.geo = mini_pointnet_batch(stacked, k, params);
  out.pos = pos_embed(centers, params.pos);
  out.ori = ori_embed<T>(poses, params.ori);
  out.ordered = true;
  return out;
}

#define RIMAMBA_INSTANTIATE(T)                                                                             \
  template struct TokenizerParams<T>;                                                                      \
  template Matrix<T> mini_pointnet_batch(const Matrix<T>&, std::size_t, const TokenizerParams<T>&);        \
  template std::vector<T> mini_pointnet(const Matrix<T>&, const TokenizerParams<T>&);                      \
  template Matrix<T> pos_embed(const Matrix<T>&, const Mlp<T>&);                                           \
  template Matrix<T> ori_embed(std::span<const Mat3>, const Mlp<T>&);                                      \
  template Matrix<T> pairwise_ori_baseline(std::span<const Frame>, const Mlp<T>&);                         \
  template TokenSequence<T> tokenize(const SerializedPatches&, const TokenizerParams<T>&, const TokenizeOptions&);

RIMAMBA_INSTANTIATE(float)
RIMAMBA_INSTANTIATE(double)

#undef RIMAMBA_INSTANTIATE

}  // namespace rimamba
