#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rimamba/cloud_io.hpp"
#include "rimamba/encoder.hpp"
#include "rimamba/nn.hpp"

namespace rimamba {

// ---------------------------------------------------------------- contrastive loss

struct InfoNceResult {
  double loss = 0.0;
  Matrix<double> grad_z;  // B x C
  Matrix<double> grad_f;  // B x C
};

inline constexpr double kDefaultTemperature = 0.07;

/// Symmetric InfoNCE between paired rows of z and f:
///   -1/(2B) sum_i [ log softmax_j(z_i.f_j / tau)[i] + log softmax_j(f_i.z_j / tau)[i] ]
/// with analytic gradients. Throws ArgumentError for tau <= 0 or shape mismatch.
InfoNceResult info_nce(const Matrix<double>& z, const Matrix<double>& f, double tau);

struct TrainingBatch {
  Matrix<double> z_i;  // shape-side image-adapter rows
  Matrix<double> z_t;  // shape-side text-adapter rows
  Matrix<double> f_i;  // anchor image embeddings
  Matrix<double> f_t;  // anchor text embeddings
  double tau = kDefaultTemperature;

  /// Throws ArgumentError unless shapes agree, B >= 1, tau > 0 and every row
  /// has unit norm within 1e-5.
  void validate() const;
};

struct TotalLossResult {
  double loss = 0.0;
  InfoNceResult image;
  InfoNceResult text;
};

/// info_nce(z_i, f_i) + info_nce(z_t, f_t).
TotalLossResult total_loss(const TrainingBatch& batch);

// ---------------------------------------------------------------- retrieval

/// Database row indices by descending cosine similarity; exact ties keep
/// insertion order. Throws ArgumentError on an empty database.
std::vector<std::size_t> rank(std::span<const double> query, const Matrix<double>& database);

struct RankedQuery {
  std::vector<std::size_t> ranking;   // database indices, best first
  std::vector<std::size_t> relevant;  // database indices
};

/// 1-based rank of the best-ranked relevant item, or 0 if none is ranked.
std::size_t first_relevant_rank(const RankedQuery& q);

/// Percentage of queries with a relevant item within the top k.
double rr_at_k(std::span<const RankedQuery> runs, std::size_t k);
/// Binary single-target NDCG: 1/log2(r + 1) for the first relevant rank r <= k, IDCG = 1.
double ndcg_at_k(std::span<const RankedQuery> runs, std::size_t k);
/// Mean over queries of the mean precision at each relevant item's rank.
double mean_average_precision(std::span<const RankedQuery> runs);

struct RetrievalRun {
  std::vector<std::string> query_ids;
  Matrix<double> queries;
  std::vector<std::string> database_ids;
  Matrix<double> database;
  std::vector<std::vector<std::size_t>> relevant;  // per query, database indices

  /// Throws ArgumentError on duplicate ids or shape mismatch.
  void validate() const;
  std::vector<RankedQuery> ranked() const;
};

/// query id -> relevant database ids.
using GroundTruth = std::map<std::string, std::vector<std::string>>;

/// Resolves ground-truth ids to database indices. Queries absent from
/// `truth` get no relevant items. Throws ArgumentError listing every
/// relevant id missing from the database.
std::vector<std::vector<std::size_t>> resolve_relevance(const std::vector<std::string>& query_ids,
                                                        const std::vector<std::string>& database_ids,
                                                        const GroundTruth& truth);

struct MetricReport {
  double rr_at_1 = 0.0;
  double rr_at_k = 0.0;
  double ndcg_at_k = 0.0;
  double map = 0.0;
  std::size_t k = 5;
};

MetricReport evaluate(std::span<const RankedQuery> runs, std::size_t k = 5);

// ---------------------------------------------------------------- rotation regimes

/// Which side of the retrieval is randomly rotated: I/I, I/SO(3), SO(3)/I,
/// SO(3)/SO(3) written database/query.
enum class Regime { II, ISO3, SO3I, SO3SO3 };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);
bool rotates_database(Regime r);
bool rotates_queries(Regime r);

/// Rotation applied to item `index` of one side. Depends only on
/// (seed, side, index), so every model sees the same rotations.
Mat3 regime_rotation(std::uint64_t seed, bool query_side, std::size_t index);

enum class EmbeddingHead { shape, image, text };

template <class T>
const std::vector<T>& select_head(const EmbeddingRecord<T>& rec, EmbeddingHead head) {
  return head == EmbeddingHead::image ? rec.z_i : head == EmbeddingHead::text ? rec.z_t : rec.z_p;
}

struct RobustnessReport {
  Regime regime = Regime::II;
  MetricReport metrics;
  std::vector<RankedQuery> ranked;
};

/// Encodes both sides (rotated per regime), ranks every query against the
/// database and scores it. `relevant` is per query, database indices.
/// Clouds are encoded on `threads` workers; the result does not depend on it.
RobustnessReport robustness_protocol(const std::vector<PointCloud>& database, const std::vector<PointCloud>& queries,
                                     const std::vector<std::vector<std::size_t>>& relevant, Regime regime,
                                     const ModelWeights<float>& weights, std::uint64_t seed,
                                     const EncodeOptions& options = {}, std::size_t k = 5,
                                     EmbeddingHead head = EmbeddingHead::shape, std::size_t threads = 1);

// ---------------------------------------------------------------- files

/// EMB1: magic, u32 n, u32 d, then per record u16 id length, UTF-8 id,
/// d x f32 (little-endian).
struct EmbeddingFile {
  std::vector<std::string> ids;
  Matrix<float> rows;  // n x d
};

std::vector<std::uint8_t> encode_emb1(const EmbeddingFile& file);
EmbeddingFile decode_emb1(std::string_view bytes);
void save_emb1(const EmbeddingFile& file, const std::filesystem::path& path);
EmbeddingFile load_emb1(const std::filesystem::path& path);
bool is_emb1_file(const std::filesystem::path& path);

/// Lines of `query_id<TAB>relevant_id[,relevant_id...]`; blank lines and
/// '#' comments are skipped.
GroundTruth parse_ground_truth(std::string_view text);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace rimamba
