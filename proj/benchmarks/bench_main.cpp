#include <benchmark/benchmark.h>

#include <vector>

#include "rimamba/encoder.hpp"
#include "rimamba/frames.hpp"
#include "rimamba/patcher.hpp"
#include "rimamba/ssm.hpp"
#include "rimamba/tokenizer.hpp"
#include "rimamba/weights_io.hpp"

using namespace rimamba;

namespace {

constexpr std::size_t kDim = 64;

const ModelWeights<float>& one_block() {
  static const auto w = [] {
    ModelConfig c;
    c.n_blocks = 1;
    c.dim = kDim;
    return init_weights(c, 1);
  }();
  return w;
}

Matrix<float> random_tokens(std::size_t t) {
  Prng rng(t);
  Matrix<float> x(t, kDim);
  for (float& v : x.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

void BM_SelectiveScan(benchmark::State& state) {
  const auto x = random_tokens(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(selective_scan(x, one_block().blocks[0].scan));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SelectiveScan)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_ReferenceAttention(benchmark::State& state) {
  const auto x = random_tokens(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference_attention(x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ReferenceAttention)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

struct Frames {
  std::vector<Frame> locals;
  std::vector<Mat3> poses;
};

Frames random_frames(std::size_t g) {
  Prng rng(g);
  Frames f;
  for (std::size_t i = 0; i < g; ++i) f.locals.push_back({random_rotation(rng), FrameKind::local});
  const Frame grf{random_rotation(rng), FrameKind::global};
  for (const auto& l : f.locals) f.poses.push_back(relative_pose(l, grf));
  return f;
}

void BM_OriPatchwise(benchmark::State& state) {
  const auto f = random_frames(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ori_embed<float>(f.poses, one_block().tokenizer.ori));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OriPatchwise)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

void BM_OriPairwise(benchmark::State& state) {
  const auto f = random_frames(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_ori_baseline<float>(f.locals, one_block().tokenizer.ori));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_OriPairwise)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

void BM_PreparePatches(benchmark::State& state) {
  const ModelConfig cfg;
  Prng rng(3);
  const PointCloud cloud = gen_cloud(CloudKind::two_lobes, cfg.input_points, rng);
  for (auto _ : state) benchmark::DoNotOptimize(prepare_patches(cloud, cfg));
}
BENCHMARK(BM_PreparePatches)->Unit(benchmark::kMillisecond);

template <class T>
void BM_EncodeDefault(benchmark::State& state) {
  const ModelConfig cfg;
  static const auto w = init_weights(cfg, 2).cast<T>();
  Prng rng(4);
  const PointCloud cloud = gen_cloud(CloudKind::helix, cfg.input_points, rng);
  for (auto _ : state) benchmark::DoNotOptimize(encode(cloud, w));
}
BENCHMARK(BM_EncodeDefault<float>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncodeDefault<double>)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
