#include "rimamba/learn_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rimamba/errors.hpp"
#include "rimamba/parallel.hpp"

namespace rimamba {

// ---------------------------------------------------------------- contrastive loss

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

InfoNceResult info_nce(const Matrix<double>& z, const Matrix<double>& f, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("info_nce: temperature must be positive");
  if (z.rows() != f.rows() || z.cols() != f.cols()) throw ArgumentError("info_nce: z and f shapes differ");
  const std::size_t b = z.rows();
  const std::size_t c = z.cols();
  if (b == 0) throw ArgumentError("info_nce: empty batch");

  Matrix<double> logits(b, b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += z(i, k) * f(j, k);
      logits(i, j) = s / tau;
    }

  std::vector<double> row_lse(b), col_lse(b), column(b);
  for (std::size_t i = 0; i < b; ++i) row_lse[i] = log_sum_exp(logits.row(i));
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t i = 0; i < b; ++i) column[i] = logits(i, j);
    col_lse[j] = log_sum_exp(column);
  }

  InfoNceResult out;
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) total += (logits(i, i) - row_lse[i]) + (logits(i, i) - col_lse[i]);
  out.loss = -total / (2.0 * static_cast<double>(b));

  // d loss / d logits
  Matrix<double> g(b, b);
  const double scale = 1.0 / (2.0 * static_cast<double>(b));
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      const double p_row = std::exp(logits(i, j) - row_lse[i]);
      const double p_col = std::exp(logits(i, j) - col_lse[j]);
      g(i, j) = scale * (p_row + p_col - (i == j ? 2.0 : 0.0));
    }

  out.grad_z = Matrix<double>(b, c);
  out.grad_f = Matrix<double>(b, c);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      const double gij = g(i, j) / tau;
      for (std::size_t k = 0; k < c; ++k) {
        out.grad_z(i, k) += gij * f(j, k);
        out.grad_f(j, k) += gij * z(i, k);
      }
    }
  return out;
}

void TrainingBatch::validate() const {
  if (!(tau > 0.0)) throw ArgumentError("batch: temperature must be positive");
  const std::size_t b = z_i.rows();
  const std::size_t c = z_i.cols();
  if (b == 0) throw ArgumentError("batch: empty");
  for (const Matrix<double>* m : {&z_t, &f_i, &f_t})
    if (m->rows() != b || m->cols() != c) throw ArgumentError("batch: embedding shapes differ");
  for (const Matrix<double>* m : {&z_i, &z_t, &f_i, &f_t})
    for (std::size_t r = 0; r < b; ++r) {
      double ss = 0.0;
      for (double v : m->row(r)) ss += v * v;
      if (std::abs(std::sqrt(ss) - 1.0) > 1e-5) throw ArgumentError("batch: row " + std::to_string(r) + " is not unit norm");
    }
}

TotalLossResult total_loss(const TrainingBatch& batch) {
  batch.validate();
  TotalLossResult out;
  out.image = info_nce(batch.z_i, batch.f_i, batch.tau);
  out.text = info_nce(batch.z_t, batch.f_t, batch.tau);
  out.loss = out.image.loss + out.text.loss;
  return out;
}

// ---------------------------------------------------------------- retrieval

std::vector<std::size_t> rank(std::span<const double> query, const Matrix<double>& database) {
  if (database.rows() == 0) throw ArgumentError("rank: empty database");
  if (database.cols() != query.size()) throw ArgumentError("rank: dimension mismatch");
  double qn = 0.0;
  for (double v : query) qn += v * v;
  qn = std::sqrt(qn);

  std::vector<double> score(database.rows());
  for (std::size_t r = 0; r < database.rows(); ++r) {
    double d = 0.0, dn = 0.0;
    auto row = database.row(r);
    for (std::size_t k = 0; k < query.size(); ++k) {
      d += query[k] * row[k];
      dn += row[k] * row[k];
    }
    const double denom = qn * std::sqrt(dn);
    score[r] = denom > 0.0 ? d / denom : 0.0;
  }
  std::vector<std::size_t> order(database.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

std::size_t first_relevant_rank(const RankedQuery& q) {
  const std::set<std::size_t> rel(q.relevant.begin(), q.relevant.end());
  for (std::size_t pos = 0; pos < q.ranking.size(); ++pos)
    if (rel.count(q.ranking[pos])) return pos + 1;
  return 0;
}

namespace {

void check_k(std::size_t k) {
  if (k < 1) throw ArgumentError("k must be at least 1");
}

template <class Fn>
double mean_percent(std::span<const RankedQuery> runs, Fn&& per_query) {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& q : runs) s += per_query(q);
  return 100.0 * s / static_cast<double>(runs.size());
}

}  // namespace

double rr_at_k(std::span<const RankedQuery> runs, std::size_t k) {
  check_k(k);
  return mean_percent(runs, [&](const RankedQuery& q) {
    const std::size_t r = first_relevant_rank(q);
    return r != 0 && r <= k ? 1.0 : 0.0;
  });
}

double ndcg_at_k(std::span<const RankedQuery> runs, std::size_t k) {
  check_k(k);
  return mean_percent(runs, [&](const RankedQuery& q) {
    const std::size_t r = first_relevant_rank(q);
    return r != 0 && r <= k ? 1.0 / std::log2(static_cast<double>(r) + 1.0) : 0.0;
  });
}

double mean_average_precision(std::span<const RankedQuery> runs) {
  return mean_percent(runs, [](const RankedQuery& q) {
    if (q.relevant.empty()) return 0.0;
    const std::set<std::size_t> rel(q.relevant.begin(), q.relevant.end());
    double hits = 0.0, sum = 0.0;
    for (std::size_t pos = 0; pos < q.ranking.size(); ++pos)
      if (rel.count(q.ranking[pos])) {
        hits += 1.0;
        sum += hits / static_cast<double>(pos + 1);
      }
    return sum / static_cast<double>(rel.size());
  });
}

MetricReport evaluate(std::span<const RankedQuery> runs, std::size_t k) {
  MetricReport m;
  m.k = k;
  m.rr_at_1 = rr_at_k(runs, 1);
  m.rr_at_k = rr_at_k(runs, k);
  m.ndcg_at_k = ndcg_at_k(runs, k);
  m.map = mean_average_precision(runs);
  return m;
}

void RetrievalRun::validate() const {
  if (queries.rows() != query_ids.size()) throw ArgumentError("retrieval: query ids and rows differ");
  if (database.rows() != database_ids.size()) throw ArgumentError("retrieval: database ids and rows differ");
  if (relevant.size() != query_ids.size()) throw ArgumentError("retrieval: relevance list per query required");
  if (queries.cols() != database.cols()) throw ArgumentError("retrieval: embedding dimensions differ");
  for (const auto* ids : {&query_ids, &database_ids}) {
    std::set<std::string> unique(ids->begin(), ids->end());
    if (unique.size() != ids->size()) throw ArgumentError("retrieval: duplicate ids");
  }
  for (const auto& rel : relevant)
    for (std::size_t r : rel)
      if (r >= database_ids.size()) throw ArgumentError("retrieval: relevant index out of range");
}

std::vector<RankedQuery> RetrievalRun::ranked() const {
  validate();
  std::vector<RankedQuery> out(query_ids.size());
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    out[q].ranking = rank(queries.row(q), database);
    out[q].relevant = relevant[q];
  }
  return out;
}

std::vector<std::vector<std::size_t>> resolve_relevance(const std::vector<std::string>& query_ids,
                                                        const std::vector<std::string>& database_ids,
                                                        const GroundTruth& truth) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < database_ids.size(); ++i) index.emplace(database_ids[i], i);
  std::vector<std::string> missing;
  std::vector<std::vector<std::size_t>> out(query_ids.size());
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    auto it = truth.find(query_ids[q]);
    if (it == truth.end()) continue;
    for (const auto& id : it->second) {
      auto db = index.find(id);
      if (db == index.end())
        missing.push_back(id);
      else
        out[q].push_back(db->second);
    }
  }
  if (!missing.empty()) {
    std::string msg = "ground truth references ids missing from the database:";
    for (const auto& id : missing) msg += " " + id;
    throw ArgumentError(msg);
  }
  return out;
}

// ---------------------------------------------------------------- regimes

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::II: return "II";
    case Regime::ISO3: return "ISO3";
    case Regime::SO3I: return "SO3I";
    case Regime::SO3SO3: return "SO3SO3";
  }
  return "?";
}

Regime parse_regime(std::string_view s) {
  for (Regime r : {Regime::II, Regime::ISO3, Regime::SO3I, Regime::SO3SO3})
    if (to_string(r) == s) return r;
  throw ArgumentError("unknown regime '" + std::string(s) + "' (expected II, ISO3, SO3I or SO3SO3)");
}

// Regime names read database/query: ISO3 keeps the database canonical and
// rotates the queries.
bool rotates_database(Regime r) { return r == Regime::SO3I || r == Regime::SO3SO3; }
bool rotates_queries(Regime r) { return r == Regime::ISO3 || r == Regime::SO3SO3; }

Mat3 regime_rotation(std::uint64_t seed, bool query_side, std::size_t index) {
  Prng rng(derive_seed(seed, (static_cast<std::uint64_t>(index) << 1) | (query_side ? 1u : 0u)));
  return random_rotation(rng);
}

RobustnessReport robustness_protocol(const std::vector<PointCloud>& database, const std::vector<PointCloud>& queries,
                                     const std::vector<std::vector<std::size_t>>& relevant, Regime regime,
                                     const ModelWeights<float>& weights, std::uint64_t seed,
                                     const EncodeOptions& options, std::size_t k, EmbeddingHead head,
                                     std::size_t threads) {
  const auto embed_side = [&](const std::vector<PointCloud>& clouds, bool query_side, bool rotate) {
    Matrix<double> rows(clouds.size(), weights.config.dim);
    parallel_for(clouds.size(), threads, [&](std::size_t i) {
      const PointCloud input = rotate ? rotate_cloud(clouds[i], regime_rotation(seed, query_side, i)) : clouds[i];
      const auto rec = encode(input, weights, options);
      const auto& v = select_head(rec, head);
      for (std::size_t j = 0; j < v.size(); ++j) rows(i, j) = static_cast<double>(v[j]);
    });
    return rows;
  };

  RetrievalRun run;
  for (const auto& c : queries) run.query_ids.push_back(c.id);
  for (const auto& c : database) run.database_ids.push_back(c.id);
  run.queries = embed_side(queries, true, rotates_queries(regime));
  run.database = embed_side(database, false, rotates_database(regime));
  run.relevant = relevant;

  RobustnessReport report;
  report.regime = regime;
  report.ranked = run.ranked();
  report.metrics = evaluate(report.ranked, k);
  return report;
}

}  // namespace rimamba
