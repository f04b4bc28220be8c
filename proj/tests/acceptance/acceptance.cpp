// One line per acceptance criterion: PASS/FAIL, the measured quantity and the
// wall time. Exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rimamba/encoder.hpp"
#include "rimamba/frames.hpp"
#include "rimamba/learn_eval.hpp"
#include "rimamba/parallel.hpp"
#include "rimamba/serializer.hpp"
#include "rimamba/ssm.hpp"
#include "rimamba/tokenizer.hpp"
#include "rimamba/weights_io.hpp"
#include "rimamba_cli/commands.hpp"

using namespace rimamba;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const CloudKind kGeneric[] = {CloudKind::ellipsoid, CloudKind::two_lobes, CloudKind::helix};

PointCloud generic_cloud(std::size_t i, std::size_t n, std::uint64_t seed) {
  return testing::make_cloud(kGeneric[i % 3], n, derive_seed(seed, i));
}

template <class T>
double max_abs(const std::vector<T>& a, const std::vector<T>& b) {
  return testing::max_abs_diff(a, b);
}

// ---------------------------------------------------------------- 1

Outcome serialization_invariance() {
  const ModelConfig cfg;  // G = 64, k = 32, N = 10000
  Prng rng(101);
  std::size_t pairs = 0, mismatches = 0;
  for (std::size_t c = 0; c < 34; ++c) {
    const PointCloud cloud = generic_cloud(c, cfg.input_points, 1);
    const auto base = prepare_patches(cloud, cfg);
    for (int r = 0; r < 3; ++r) {
      const auto rot = prepare_patches(rotate_cloud(cloud, random_rotation(rng)), cfg);
      ++pairs;
      if (rot.order != base.order || rot.codes != base.codes) ++mismatches;
    }
  }
  return {pairs >= 100 && mismatches == 0, fmt("%zu/%zu pairs with identical order and codes", pairs - mismatches, pairs)};
}

// ---------------------------------------------------------------- 2

template <class T>
double worst_invariance_deviation(const ModelWeights<T>& w, const std::vector<PointCloud>& clouds, std::size_t rotations) {
  const std::size_t per = rotations + 1;
  std::vector<std::vector<T>> z(clouds.size() * per);
  parallel_for(z.size(), default_threads(), [&](std::size_t t) {
    const std::size_t c = t / per, r = t % per;
    if (r == 0) {
      z[t] = encode(clouds[c], w).z_p;
    } else {
      Prng rng(derive_seed(7000 + c, r));
      z[t] = encode(rotate_cloud(clouds[c], random_rotation(rng)), w).z_p;
    }
  });
  double worst = 0.0;
  for (std::size_t c = 0; c < clouds.size(); ++c)
    for (std::size_t r = 1; r < per; ++r) worst = std::max(worst, max_abs(z[c * per + r], z[c * per]));
  return worst;
}

Outcome embedding_invariance() {
  const ModelConfig cfg;
  const auto wf = init_weights(cfg, 2025);
  const auto wd = wf.cast<double>();
  std::vector<PointCloud> clouds;
  for (std::size_t c = 0; c < 10; ++c) clouds.push_back(generic_cloud(c, cfg.input_points, 2));

  const auto t0 = Clock::now();
  const double dev_f = worst_invariance_deviation(wf, clouds, 20);
  const double t_f = seconds_since(t0);
  const auto t1 = Clock::now();
  const double dev_d = worst_invariance_deviation(wd, clouds, 20);
  const double t_d = seconds_since(t1);
  const bool pass = dev_f <= 1e-4 && dev_d <= 1e-9 && t_f + t_d < 120.0;
  return {pass, fmt("10 clouds x 20 rotations: f32 max |dz_p| %.3e (<= 1e-4, %.1f s), f64 %.3e (<= 1e-9, %.1f s)", dev_f,
                    t_f, dev_d, t_d)};
}

// ---------------------------------------------------------------- 3

Outcome eigensolver() {
  Prng rng(303);
  double worst_value = 0.0, worst_recon = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) m(i, j) = m(j, i) = rng.uniform(-1.0, 1.0);
    const SymEigen e = eig_sym3(m);
    const auto ref = oracle::cubic_eigenvalues(m);
    for (int k = 0; k < 3; ++k) worst_value = std::max(worst_value, std::abs(e.values[k] - ref[k]));
    const Mat3 r = e.vectors * Mat3::diagonal(e.values[0], e.values[1], e.values[2]) * e.vectors.transposed();
    worst_recon = std::max(worst_recon, (r - m).max_abs());
  }
  return {worst_value <= 1e-8 && worst_recon <= 1e-7,
          fmt("1000 matrices: eigenvalue error %.2e (<= 1e-8), reconstruction residual %.2e (<= 1e-7)", worst_value,
              worst_recon)};
}

// ---------------------------------------------------------------- 4

Outcome hilbert_bijection() {
  std::size_t bad_inverse = 0, bad_adjacent = 0, cells = 0;
  for (int p = 1; p <= 3; ++p) {
    const std::uint32_t side = 1u << p;
    const std::uint64_t total = std::uint64_t{1} << (3 * p);
    std::set<std::uint64_t> seen;
    for (std::uint32_t x = 0; x < side; ++x)
      for (std::uint32_t y = 0; y < side; ++y)
        for (std::uint32_t z = 0; z < side; ++z) {
          const HilbertCell c{x, y, z};
          const std::uint64_t h = hilbert_encode(c, p);
          if (h >= total || !(hilbert_decode(h, p) == c)) ++bad_inverse;
          seen.insert(h);
          ++cells;
        }
    if (seen.size() != total) ++bad_inverse;
    for (std::uint64_t h = 0; h + 1 < total; ++h) {
      const HilbertCell a = hilbert_decode(h, p), b = hilbert_decode(h + 1, p);
      std::uint32_t d = 0;
      for (int i = 0; i < 3; ++i) d += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
      if (d != 1) ++bad_adjacent;
    }
  }
  return {bad_inverse == 0 && bad_adjacent == 0,
          fmt("p = 1..3, %zu cells: %zu inverse failures, %zu non-adjacent steps", cells, bad_inverse, bad_adjacent)};
}

// ---------------------------------------------------------------- 5

Matrix<double> random_unit_rows(std::size_t b, std::size_t c, Prng& rng) {
  Matrix<double> m(b, c);
  for (std::size_t r = 0; r < b; ++r) {
    double n = 0.0;
    for (double& v : m.row(r)) {
      v = rng.normal();
      n += v * v;
    }
    for (double& v : m.row(r)) v /= std::sqrt(n);
  }
  return m;
}

std::vector<std::vector<double>> nested(const Matrix<double>& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

std::vector<std::vector<double>> nested(const std::vector<double>& flat, std::size_t b, std::size_t c) {
  std::vector<std::vector<double>> out(b);
  for (std::size_t r = 0; r < b; ++r) out[r].assign(flat.begin() + r * c, flat.begin() + (r + 1) * c);
  return out;
}

Outcome info_nce_gradients() {
  Prng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 2 + rng.below(7);  // 2..8
    const std::size_t c = 2 + rng.below(15);  // 2..16
    const double tau = trial % 2 ? kDefaultTemperature : 0.1 + rng.uniform();
    const auto z = random_unit_rows(b, c, rng);
    const auto f = random_unit_rows(b, c, rng);
    const auto r = info_nce(z, f, tau);
    const auto fd_z = oracle::central_difference(
        [&](const std::vector<double>& v) { return oracle::info_nce_loss(nested(v, b, c), nested(f), tau); },
        z.values(), 1e-5);
    const auto fd_f = oracle::central_difference(
        [&](const std::vector<double>& v) { return oracle::info_nce_loss(nested(z), nested(v, b, c), tau); },
        f.values(), 1e-5);
    double scale = 0.0, diff = 0.0;
    for (double v : fd_z) scale = std::max(scale, std::abs(v));
    for (double v : fd_f) scale = std::max(scale, std::abs(v));
    diff = std::max(testing::max_abs_diff(r.grad_z.values(), fd_z), testing::max_abs_diff(r.grad_f.values(), fd_f));
    worst = std::max(worst, diff / std::max(scale, 1e-300));
  }
  double worst_single = 0.0;
  for (std::size_t c : {1u, 3u, 16u}) {
    const auto z = random_unit_rows(1, c, rng), f = random_unit_rows(1, c, rng);
    worst_single = std::max(worst_single, std::abs(info_nce(z, f, kDefaultTemperature).loss));
  }
  return {worst <= 1e-5 && worst_single == 0.0,
          fmt("50 batches: max relative gradient error %.2e (<= 1e-5); B = 1 loss %.1f (exactly 0)", worst,
              worst_single)};
}

// ---------------------------------------------------------------- 6

template <class T>
Matrix<T> random_tokens(std::size_t t, std::size_t c, Prng& rng) {
  Matrix<T> m(t, c);
  for (T& v : m.values()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return m;
}

Outcome scan_causality() {
  ModelConfig cfg = testing::small_config();
  cfg.dim = 32;
  cfg.state_dim = 8;
  std::size_t causal_breaks = 0, perturbations = 0;
  double oracle_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = init_weights(cfg, seed, testing::small_dims());
    const auto& sp = w.blocks[0].scan;
    Prng rng(seed);
    const auto x = random_tokens<float>(48, cfg.dim, rng);
    const auto base = selective_scan(x, sp);
    for (std::size_t t = 0; t < x.rows(); t += 7) {
      auto y = x;
      for (float& v : y.row(t)) v += 0.5f;
      const auto out = selective_scan(y, sp);
      ++perturbations;
      for (std::size_t s = 0; s < t; ++s)
        if (!std::equal(out.row(s).begin(), out.row(s).end(), base.row(s).begin())) ++causal_breaks;
    }
    ScanTrace<float> trace;
    const auto out = selective_scan(x, sp, &trace);
    std::vector<std::vector<float>> rows;
    for (std::size_t r = 0; r < x.rows(); ++r) rows.emplace_back(x.row(r).begin(), x.row(r).end());
    const auto [ys, outs] = oracle::naive_scan(rows, sp);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      oracle_err = std::max(oracle_err, testing::max_abs_diff(trace.y.row(t), ys[t]));
      oracle_err = std::max(oracle_err, testing::max_abs_diff(out.row(t), outs[t]));
    }
  }
  return {causal_breaks == 0 && oracle_err <= 1e-6,
          fmt("%zu perturbations, %zu earlier rows changed; naive-loop deviation %.2e (<= 1e-6, f32)", perturbations,
              causal_breaks, oracle_err)};
}

// ---------------------------------------------------------------- 7

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

// Seconds per call, looping until at least 20 ms have elapsed.
double time_per_call(const std::function<void()>& fn) {
  std::size_t calls = 0;
  const auto t0 = Clock::now();
  double elapsed = 0.0;
  do {
    fn();
    ++calls;
    elapsed = seconds_since(t0);
  } while (elapsed < 0.02);
  return elapsed / double(calls);
}

Outcome complexity_slopes() {
  ModelConfig cfg;
  cfg.n_blocks = 1;
  cfg.dim = 64;
  const auto w = init_weights(cfg, 77);

  std::vector<double> gs, patchwise, pairwise;
  for (std::size_t g : {64u, 256u, 1024u}) {
    Prng rng(derive_seed(77, g));
    std::vector<Frame> frames(g);
    for (auto& f : frames) f = {random_rotation(rng), FrameKind::local};
    const Frame grf{random_rotation(rng), FrameKind::global};
    std::vector<Mat3> poses;
    for (const auto& f : frames) poses.push_back(relative_pose(f, grf));
    OpCountScope scope;
    ori_embed<float>(poses, w.tokenizer.ori);
    patchwise.push_back(double(scope.delta().mlp_calls));
    op_counts() = {};
    pairwise_ori_baseline<float>(frames, w.tokenizer.ori);
    pairwise.push_back(double(scope.delta().mlp_calls));
    gs.push_back(double(g));
  }

  std::vector<double> ts, scan_s, attn_s;
  for (std::size_t t : {256u, 1024u, 4096u}) {
    Prng rng(derive_seed(78, t));
    const auto x = random_tokens<float>(t, cfg.dim, rng);
    std::vector<double> sr, ar;
    for (int r = 0; r < 5; ++r) {
      sr.push_back(time_per_call([&] { selective_scan(x, w.blocks[0].scan); }));
      ar.push_back(time_per_call([&] { reference_attention(x); }));
    }
    ts.push_back(double(t));
    scan_s.push_back(median(sr));
    attn_s.push_back(median(ar));
  }
  const double s_patch = oracle::loglog_slope(gs, patchwise), s_pair = oracle::loglog_slope(gs, pairwise);
  const double s_scan = oracle::loglog_slope(ts, scan_s), s_attn = oracle::loglog_slope(ts, attn_s);
  return {s_patch <= 1.1 && s_pair >= 1.9 && s_scan <= 1.3 && s_attn >= 1.8,
          fmt("ori calls: patchwise %.3f (<= 1.1), pairwise %.3f (>= 1.9); seconds: scan %.3f (<= 1.3), attention "
              "%.3f (>= 1.8)",
              s_patch, s_pair, s_scan, s_attn)};
}

// ---------------------------------------------------------------- 8

struct Corpus {
  std::vector<PointCloud> database, queries;
  std::vector<std::vector<std::size_t>> relevant;
};

// Five shape families: the three generic kinds plus two anisotropic
// stretches. Each cloud gets its own sample and a +-10% per-axis scale.
Corpus labeled_corpus(std::size_t points, std::uint64_t seed) {
  struct Family {
    CloudKind kind;
    Vec3 scale;
  };
  const Family families[] = {{CloudKind::ellipsoid, {1, 1, 1}},
                             {CloudKind::two_lobes, {1, 1, 1}},
                             {CloudKind::helix, {1, 1, 1}},
                             {CloudKind::ellipsoid, {1.0, 1.4, 0.35}},
                             {CloudKind::helix, {1.0, 1.0, 2.5}}};
  constexpr std::size_t kPerFamily = 40, kQueries = 10;
  Corpus c;
  for (std::size_t f = 0; f < 5; ++f) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < kPerFamily; ++i) {
      Prng rng(derive_seed(seed, f * 1000 + i));
      PointCloud cloud = gen_cloud(families[f].kind, points, rng);
      const Vec3 s{families[f].scale[0] * rng.uniform(0.9, 1.1), families[f].scale[1] * rng.uniform(0.9, 1.1),
                   families[f].scale[2] * rng.uniform(0.9, 1.1)};
      for (Vec3& p : cloud.points) p = {p[0] * s[0], p[1] * s[1], p[2] * s[2]};
      cloud.id = fmt("f%zu_%02zu", f, i);
      if (i < kQueries) {
        c.queries.push_back(std::move(cloud));
      } else {
        members.push_back(c.database.size());
        c.database.push_back(std::move(cloud));
      }
    }
    for (std::size_t q = 0; q < kQueries; ++q) c.relevant.push_back(members);
  }
  return c;
}

Outcome robustness_regimes() {
  ModelConfig cfg;
  cfg.n_blocks = 4;
  cfg.dim = 64;
  cfg.input_points = 2048;
  cfg.film_bottleneck = 16;
  const auto w = init_weights(cfg, 808);
  const Corpus corpus = labeled_corpus(cfg.input_points, 8);
  const Regime regimes[] = {Regime::II, Regime::ISO3, Regime::SO3I, Regime::SO3SO3};

  auto spread = [&](bool align, std::string& listing) {
    EncodeOptions opt;
    opt.tokenize.align_patches = align;
    double lo = 1e9, hi = -1e9;
    for (Regime r : regimes) {
      const auto rep = robustness_protocol(corpus.database, corpus.queries, corpus.relevant, r, w, 99, opt, 5,
                                           EmbeddingHead::shape, default_threads());
      lo = std::min(lo, rep.metrics.map);
      hi = std::max(hi, rep.metrics.map);
      listing += fmt(" %s %.2f", std::string(to_string(r)).c_str(), rep.metrics.map);
    }
    return hi - lo;
  };
  std::string ri, ablation;
  const double s_ri = spread(true, ri);
  const double s_ab = spread(false, ablation);
  return {s_ri <= 0.5 && s_ab >= 10.0, fmt("mAP spread RI %.3f (<= 0.5) [%s ], no-align %.2f (>= 10) [%s ]", s_ri,
                                           ri.c_str() + 1, s_ab, ablation.c_str() + 1)};
}

// ---------------------------------------------------------------- 9

Outcome metric_oracle() {
  const std::vector<RankedQuery> runs{
      {{0, 1, 2, 3, 4}, {0}},     // first relevant at rank 1
      {{1, 0, 2, 3, 4}, {2}},     // rank 3
      {{4, 3, 2, 1, 0}, {0}},     // rank 5
      {{2, 3, 4, 0, 1}, {3}},     // rank 2
      {{0, 1, 2, 3, 4}, {0, 2}},  // ranks 1 and 3
  };
  // Hand values; the sums are written in the order the metrics accumulate.
  struct Expect {
    const char* name;
    double got, want;
  };
  const Expect checks[] = {
      {"RR@1", rr_at_k(runs, 1), 100.0 * 2 / 5},
      {"RR@2", rr_at_k(runs, 2), 100.0 * 3 / 5},
      {"RR@5", rr_at_k(runs, 5), 100.0},
      {"NDCG@5", ndcg_at_k(runs, 5), (1.0 + 0.5 + 1.0 / std::log2(6.0) + 1.0 / std::log2(3.0) + 1.0) / 5.0 * 100.0},
      {"NDCG@2", ndcg_at_k(runs, 2), (1.0 + 0.0 + 0.0 + 1.0 / std::log2(3.0) + 1.0) / 5.0 * 100.0},
      {"mAP", mean_average_precision(runs),
       (1.0 + 1.0 / 3.0 + 1.0 / 5.0 + 0.5 + (1.0 + 2.0 / 3.0) / 2.0) / 5.0 * 100.0},
      {"NDCG@5 rank 3", ndcg_at_k(std::vector<RankedQuery>{{{1, 0, 2}, {2}}}, 5), 50.0},
  };
  std::string bad;
  double worst = 0.0;
  for (const auto& c : checks) {
    const double d = std::abs(c.got - c.want);
    worst = std::max(worst, d);
    // Hand formulas and the implementation may round differently in the last place.
    if (d > 4 * std::numeric_limits<double>::epsilon() * std::abs(c.want)) bad += std::string(" ") + c.name;
  }
  return {bad.empty(), fmt("7 values, max |got - hand| %.1e%s%s", worst, bad.empty() ? "" : "; off:", bad.c_str())};
}

// ---------------------------------------------------------------- 10

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// stdout, stderr and every file below `dir`, keyed by relative path.
struct Snapshot {
  int code = 0;
  std::string out, err;
  std::map<std::string, std::string> files;
  bool operator==(const Snapshot&) const = default;
};

int call_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  args.insert(args.begin(), "rimamba");
  return cli::run(args, out, err);
}

Snapshot run_cli(const std::vector<std::string>& args, const fs::path& dir, const char* threads) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  ::setenv("RIMAMBA_THREADS", threads, 1);
  std::ostringstream out, err;
  Snapshot s;
  s.code = call_cli(args, out, err);
  s.out = out.str();
  s.err = err.str();
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) s.files[fs::relative(e.path(), dir).string()] = read_bytes(e.path());
  return s;
}

Outcome cli_determinism() {
  const fs::path root = testing::temp_dir("acceptance_cli");
  const fs::path in = root / "in", work = root / "work";
  fs::create_directories(in / "q");
  const std::vector<std::string> small{"--blocks", "2", "--dim", "32", "--patches", "32", "--neighbors", "16",
                                       "--points", "1024", "--film-bottleneck", "8", "--seed", "5"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.begin() + 1, small.begin(), small.end());
    return a;
  };

  // Shared inputs: a small labeled corpus and hand-made embeddings.
  std::ostringstream sink;
  ::setenv("RIMAMBA_THREADS", "1", 1);
  const char* kinds[] = {"ellipsoid", "two_lobes", "helix"};
  std::string truth;
  int setup = 0;
  for (int k = 0; k < 3; ++k) {
    setup |= call_cli({"gen", "--kind", kinds[k], "-n", "1024", "--count", "4", "--seed", std::to_string(10 + k), "-o",
              (in / "db").string()},
             sink, sink);
    setup |= call_cli({"gen", "--kind", kinds[k], "-n", "1024", "--seed", std::to_string(20 + k), "-o",
              (in / "q" / (std::string(kinds[k]) + ".pcb1")).string()},
             sink, sink);
    truth += std::string(kinds[k]) + "\t";
    for (int i = 0; i < 4; ++i) truth += fmt("%s%s_%04d", i ? "," : "", kinds[k], i);
    truth += "\n";
  }
  std::ofstream(in / "truth.tsv") << truth;
  setup |= call_cli(with({"embed", "-i", (in / "q").string(), "-o", (in / "q.emb1").string()}), sink, sink);
  setup |= call_cli(with({"embed", "-i", (in / "db").string(), "-o", (in / "db.emb1").string()}), sink, sink);

  if (setup != 0) return {false, "could not build the input corpus: " + sink.str()};

  const std::string w = work.string();
  const std::vector<std::vector<std::string>> commands{
      {"gen", "--kind", "helix", "-n", "500", "--seed", "3", "-o", w + "/one.xyz"},
      {"gen", "--kind", "two_lobes", "-n", "300", "--count", "3", "--seed", "4", "-o", w + "/many"},
      with({"init-weights", "-o", w + "/w.rimw"}),
      with({"embed", "-i", (in / "db").string(), "-o", w + "/db.emb1"}),
      with({"embed", "-i", (in / "q").string(), "--head", "t", "--precision", "f64", "-o", w + "/q.emb1"}),
      with({"check-invariance", "-i", (in / "q").string(), "-r", "3", "--csv", w + "/inv.csv"}),
      {"serialize", "-i", (in / "q" / "helix.pcb1").string(), "-o", w + "/order.csv"},
      {"serialize", "-i", (in / "q" / "ellipsoid.pcb1").string()},
      with({"retrieve", "-q", (in / "q").string(), "-d", (in / "db").string(), "-t", (in / "truth.tsv").string(),
            "--regime", "SO3SO3", "--csv", w + "/ret.csv"}),
      with({"retrieve", "-q", (in / "q").string(), "-d", (in / "db").string(), "-t", (in / "truth.tsv").string(),
            "--regime", "ISO3", "--no-align"}),
      {"retrieve", "-q", (in / "q.emb1").string(), "-d", (in / "db.emb1").string(), "-t", (in / "truth.tsv").string(),
       "--k", "2", "--csv", w + "/ret2.csv"},
      {"bench", "--sizes", "16,32,64", "--lengths", "32,64", "--dim", "16", "--no-timing", "--csv", w + "/bench.csv"},
  };

  std::size_t differing = 0, failed = 0;
  std::string names;
  for (const auto& cmd : commands) {
    const Snapshot a = run_cli(cmd, work, "1");
    const Snapshot b = run_cli(cmd, work, "1");
    const Snapshot c = run_cli(cmd, work, "4");
    if (a.code != 0) {
      ++failed;
      std::fprintf(stderr, "  exit %d: %s%s", a.code, cmd.front().c_str(), a.err.empty() ? "\n" : (": " + a.err).c_str());
    }
    if (!(a == b) || !(a == c)) {
      ++differing;
      names += " " + cmd.front();
    }
  }
  fs::remove_all(root);
  return {differing == 0 && failed == 0,
          fmt("%zu invocations x (1, 1, 4 threads): %zu differ, %zu exited non-zero%s", commands.size(), differing,
              failed, names.c_str())};
}

}  // namespace

// Optional arguments select criteria whose name contains any of them.
int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"serialization invariance", serialization_invariance},
      {"embedding invariance", embedding_invariance},
      {"eigensolver", eigensolver},
      {"hilbert bijection", hilbert_bijection},
      {"infonce gradients", info_nce_gradients},
      {"scan causality", scan_causality},
      {"complexity slopes", complexity_slopes},
      {"robustness regimes", robustness_regimes},
      {"metric oracle", metric_oracle},
      {"cli determinism", cli_determinism},
  };
  int failures = 0;
  std::size_t ran = 0;
  for (const auto& c : criteria) {
    bool selected = argc < 2;
    for (int a = 1; a < argc; ++a) selected = selected || std::string(c.name).find(argv[a]) != std::string::npos;
    if (!selected) continue;
    ++ran;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = seconds_since(t0);
    if (!o.pass) ++failures;
    std::printf("%s  %-26s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, ran);
  return failures == 0 ? 0 : 1;
}
