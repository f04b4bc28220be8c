#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rimamba/ssm.hpp"
#include "rimamba/weights_io.hpp"

using namespace rimamba;

namespace {

ModelConfig tiny_config(std::uint32_t dim, std::uint32_t state) {
  ModelConfig c = testing::small_config();
  c.n_blocks = 2;
  c.dim = dim;
  c.state_dim = state;
  c.film_bottleneck = 4;
  return c;
}

ModelWeights<float> tiny_weights(std::uint32_t dim = 8, std::uint32_t state = 2, std::uint64_t seed = 1) {
  return init_weights(tiny_config(dim, state), seed, {4, 8, 8, 4});
}

template <class T>
Matrix<T> random_tokens(std::size_t t, std::size_t c, Prng& rng, double scale = 1.0) {
  Matrix<T> m(t, c);
  for (T& v : m.values()) v = static_cast<T>(rng.uniform(-scale, scale));
  return m;
}

template <class T>
std::vector<std::vector<T>> rows_of(const Matrix<T>& m) {
  std::vector<std::vector<T>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

template <class T>
void zero_film(FilmParams<T>& p) {
  for (auto& l : p.head.layers) {
    std::fill(l.weight.values().begin(), l.weight.values().end(), T(0));
    std::fill(l.bias.begin(), l.bias.end(), T(0));
  }
}

}  // namespace

TEST_CASE("film with a zero head is the identity") {
  auto w = tiny_weights();
  auto& fp = w.blocks[0].film;
  zero_film(fp);
  Prng rng(1);
  const auto h = random_tokens<float>(6, 8, rng);
  const auto pos = random_tokens<float>(6, 8, rng);
  const auto ori = random_tokens<float>(6, 8, rng);
  CHECK(film(h, pos, ori, fp) == h);
}

TEST_CASE("film of a zero hidden state is beta") {
  auto w = tiny_weights().cast<double>();
  const auto& fp = w.blocks[0].film;
  Prng rng(2);
  const auto pos = random_tokens<double>(3, 8, rng);
  const auto ori = random_tokens<double>(3, 8, rng);
  const auto out = film(Matrix<double>(3, 8), pos, ori, fp);
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> p(pos.row(r).begin(), pos.row(r).end()), o(ori.row(r).begin(), ori.row(r).end()), q(8);
    for (int i = 0; i < 8; ++i) q[i] = p[i] * o[i];
    std::vector<double> joined;
    for (const auto& part : {oracle::linear_forward(fp.pos_bottleneck, p), oracle::linear_forward(fp.ori_bottleneck, o),
                             oracle::linear_forward(fp.prod_bottleneck, q)})
      joined.insert(joined.end(), part.begin(), part.end());
    const auto head = oracle::mlp_forward(fp.head, joined);
    for (int j = 0; j < 8; ++j) CHECK(out(r, j) == doctest::Approx(head[8 + j]).epsilon(1e-12));
  }
}

TEST_CASE("film matches the straight-line oracle") {
  auto w = tiny_weights(8, 2, 4).cast<double>();
  const auto& fp = w.blocks[1].film;
  Prng rng(3);
  const auto h = random_tokens<double>(4, 8, rng);
  const auto pos = random_tokens<double>(4, 8, rng);
  const auto ori = random_tokens<double>(4, 8, rng);
  const auto out = film(h, pos, ori, fp);
  for (std::size_t r = 0; r < 4; ++r) {
    std::vector<double> p(pos.row(r).begin(), pos.row(r).end()), o(ori.row(r).begin(), ori.row(r).end()), q(8);
    for (int i = 0; i < 8; ++i) q[i] = p[i] * o[i];
    std::vector<double> joined;
    for (const auto& part : {oracle::linear_forward(fp.pos_bottleneck, p), oracle::linear_forward(fp.ori_bottleneck, o),
                             oracle::linear_forward(fp.prod_bottleneck, q)})
      joined.insert(joined.end(), part.begin(), part.end());
    const auto head = oracle::mlp_forward(fp.head, joined);
    for (int j = 0; j < 8; ++j) CHECK(std::abs(out(r, j) - (h(r, j) * (1 + head[j]) + head[8 + j])) <= 1e-7);
  }
}

TEST_CASE("selective scan matches the naive per-step loop") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto w = tiny_weights(8, 2, seed);
    const auto& sp = w.blocks[0].scan;
    Prng rng(seed);
    const auto x = random_tokens<float>(5, 8, rng);
    ScanTrace<float> trace;
    const auto out = selective_scan(x, sp, &trace);
    const auto [ys, outs] = oracle::naive_scan(rows_of(x), sp);
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(testing::max_abs_diff(trace.y.row(t), ys[t]) <= 1e-6);
      CHECK(testing::max_abs_diff(out.row(t), outs[t]) <= 1e-6);
    }
  }
}

TEST_CASE("selective scan with a single token") {
  const auto w = tiny_weights(8, 2, 9).cast<double>();
  const auto& sp = w.blocks[0].scan;
  Prng rng(9);
  const auto x = random_tokens<double>(1, 8, rng);
  ScanTrace<double> tr;
  selective_scan(x, sp, &tr);
  for (std::size_t c = 0; c < 8; ++c) {
    double expect = 0.0;
    for (std::size_t n = 0; n < 2; ++n) expect += tr.c(0, n) * tr.delta(0, c) * tr.b(0, n) * tr.u(0, c);
    expect += sp.d[c] * tr.u(0, c);
    CHECK(tr.y(0, c) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("selective scan is strictly causal, bit for bit") {
  const auto w = tiny_weights(16, 4, 3);
  const auto& sp = w.blocks[0].scan;
  Prng rng(5);
  const auto x = random_tokens<float>(12, 16, rng);
  const auto base = selective_scan(x, sp);
  for (std::size_t t : {0u, 5u, 11u}) {
    auto y = x;
    for (float& v : y.row(t)) v += 0.75f;
    const auto out = selective_scan(y, sp);
    for (std::size_t s = 0; s < t; ++s) CHECK(std::equal(out.row(s).begin(), out.row(s).end(), base.row(s).begin()));
    CHECK_FALSE(std::equal(out.row(t).begin(), out.row(t).end(), base.row(t).begin()));
  }
}

TEST_CASE("reversal is an involution and sets the scan direction") {
  Prng rng(6);
  const auto x = random_tokens<float>(7, 3, rng);
  CHECK(reverse_tokens(reverse_tokens(x)) == x);
  CHECK(reverse_tokens(x)(0, 1) == x(6, 1));
  CHECK_FALSE(scans_reversed(0));
  CHECK(scans_reversed(1));
  CHECK_FALSE(scans_reversed(2));
}

TEST_CASE("block with zeroed scan output reduces to film") {
  auto w = tiny_weights(8, 2, 11);
  zero_scan_outputs(w);
  Prng rng(7);
  const auto h = random_tokens<float>(6, 8, rng);
  const auto pos = random_tokens<float>(6, 8, rng);
  const auto ori = random_tokens<float>(6, 8, rng);
  for (std::size_t layer : {0u, 1u}) CHECK(ri_mamba_block(h, pos, ori, w.blocks[layer], layer) == film(h, pos, ori, w.blocks[layer].film));
}

TEST_CASE("backward block equals a forward block on reversed inputs") {
  const auto w = tiny_weights(8, 2, 12);
  Prng rng(8);
  const auto h = random_tokens<float>(6, 8, rng);
  const auto pos = random_tokens<float>(6, 8, rng);
  const auto ori = random_tokens<float>(6, 8, rng);
  const auto back = ri_mamba_block(h, pos, ori, w.blocks[0], 1);
  const auto fwd = ri_mamba_block(reverse_tokens(h), reverse_tokens(pos), reverse_tokens(ori), w.blocks[0], 0);
  CHECK(reverse_tokens(fwd) == back);
}

TEST_CASE("scan work grows linearly in sequence length") {
  const auto w = tiny_weights(16, 4, 13);
  Prng rng(9);
  std::vector<double> lengths, macs;
  for (std::size_t t : {64u, 256u, 1024u}) {
    const auto x = random_tokens<float>(t, 16, rng);
    OpCountScope scope;
    selective_scan(x, w.blocks[0].scan);
    lengths.push_back(double(t));
    macs.push_back(double(scope.delta().macs));
  }
  CHECK(macs[1] == doctest::Approx(4 * macs[0]));
  CHECK(macs[2] == doctest::Approx(16 * macs[0]));
  CHECK(oracle::loglog_slope(lengths, macs) == doctest::Approx(1.0));
}

TEST_CASE("reference attention is quadratic and row-stochastic") {
  Prng rng(10);
  const auto x = random_tokens<double>(5, 4, rng);
  const auto y = reference_attention(x);
  // each output row is a convex combination of input rows
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      double lo = 1e9, hi = -1e9;
      for (std::size_t s = 0; s < 5; ++s) {
        lo = std::min(lo, x(s, c));
        hi = std::max(hi, x(s, c));
      }
      CHECK(y(r, c) >= lo - 1e-12);
      CHECK(y(r, c) <= hi + 1e-12);
    }
  std::vector<double> lengths, macs;
  for (std::size_t t : {64u, 128u, 256u}) {
    OpCountScope scope;
    reference_attention(random_tokens<float>(t, 8, rng));
    lengths.push_back(double(t));
    macs.push_back(double(scope.delta().macs));
  }
  CHECK(oracle::loglog_slope(lengths, macs) == doctest::Approx(2.0).epsilon(0.01));
}
