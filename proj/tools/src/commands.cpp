#include "rimamba_cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "rimamba/encoder.hpp"
#include "rimamba/errors.hpp"
#include "rimamba/parallel.hpp"
#include "rimamba/weights_io.hpp"

namespace fs = std::filesystem;

namespace rimamba::cli {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::vector<PointCloud> load_clouds(const std::vector<std::string>& inputs) {
  const auto files = expand_inputs(inputs);
  if (files.empty()) throw ArgumentError("no input clouds");
  std::vector<PointCloud> clouds;
  std::set<std::string> ids;
  for (const auto& f : files) {
    clouds.push_back(load_cloud(f));
    if (!ids.insert(clouds.back().id).second) throw ArgumentError("duplicate cloud id '" + clouds.back().id + "'");
  }
  return clouds;
}

template <class T>
EmbeddingRecord<T> encode_as(const PointCloud& c, const ModelWeights<T>& w) {
  return encode(c, w);
}

bool is_emb1_input(const std::vector<std::string>& inputs) {
  return inputs.size() == 1 && fs::is_regular_file(inputs[0]) && is_emb1_file(inputs[0]);
}

Mat3 invariance_rotation(std::uint64_t seed, std::size_t index) {
  Prng rng(derive_seed(seed, index));
  return random_rotation(rng);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Seconds per call, calling fn until at least 20 ms have elapsed.
template <class Fn>
double time_per_call(Fn&& fn) {
  using clock = std::chrono::steady_clock;
  std::size_t iters = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    fn();
    ++iters;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < 0.02);
  return elapsed / static_cast<double>(iters);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

ModelWeights<float> ModelSource::load() const {
  if (weights_path) {
    auto w = load_weights(*weights_path);
    audit_weights(w);
    return w;
  }
  config.validate();
  return init_weights(config, seed);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  static const std::set<std::string> exts{".xyz", ".txt", ".pcb1", ".pcb"};
  std::vector<std::string> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && exts.count(e.path().extension().string())) found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      out.push_back(in);
    } else {
      throw IoError("no such file or directory: '" + in + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- embed

int cmd_embed(const EmbedOptions& o, std::size_t threads, std::ostream& out, std::ostream& err) {
  const auto clouds = load_clouds(o.inputs);
  const auto weights = o.model.load();
  const auto weights64 = o.precision == Precision::f64 ? weights.cast<double>() : ModelWeights<double>{};

  const std::size_t dim = weights.config.dim;
  std::vector<std::vector<float>> rows(clouds.size());
  std::vector<std::string> failures(clouds.size());
  parallel_for(clouds.size(), threads, [&](std::size_t i) {
    try {
      if (o.precision == Precision::f64) {
        const auto& v = select_head(encode_as(clouds[i], weights64), o.head);
        rows[i].assign(v.begin(), v.end());
      } else {
        rows[i] = select_head(encode_as(clouds[i], weights), o.head);
      }
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  EmbeddingFile file;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < clouds.size(); ++i) ok += failures[i].empty();
  file.rows = Matrix<float>(ok, dim);
  std::size_t r = 0;
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    if (!failures[i].empty()) {
      err << "error: " << clouds[i].id << ": " << failures[i] << "\n";
      continue;
    }
    file.ids.push_back(clouds[i].id);
    std::copy(rows[i].begin(), rows[i].end(), file.rows.row(r++).begin());
  }
  save_emb1(file, o.out);
  out << "embedded " << ok << " of " << clouds.size() << " clouds (dim " << dim << ") -> " << o.out << "\n";
  return ok == clouds.size() ? kOk : kValidation;
}

// ---------------------------------------------------------------- check-invariance

int cmd_check_invariance(const InvarianceOptions& o, std::size_t threads, std::ostream& out, std::ostream& err) {
  if (!o.identity && o.rotations == 0) throw ArgumentError("--rotations must be >= 1");
  const auto clouds = load_clouds(o.inputs);
  const auto weights = o.model.load();
  const auto weights64 = o.precision == Precision::f64 ? weights.cast<double>() : ModelWeights<double>{};
  const std::size_t n_rot = o.identity ? 1 : o.rotations;

  const auto embed = [&](const PointCloud& c) -> std::vector<double> {
    if (o.precision == Precision::f64) return encode_as(c, weights64).z_p;
    const auto z = encode_as(c, weights).z_p;
    return {z.begin(), z.end()};
  };

  // Task (i, 0) is the unrotated reference, (i, r + 1) rotation r.
  const std::size_t per = n_rot + 1;
  std::vector<std::vector<double>> z(clouds.size() * per);
  std::vector<std::string> errors(z.size());
  std::vector<bool> degenerate(z.size(), false);
  parallel_for(z.size(), threads, [&](std::size_t t) {
    const std::size_t i = t / per, r = t % per;
    try {
      if (r == 0) {
        z[t] = embed(clouds[i]);
      } else {
        const Mat3 rot = o.identity ? Mat3::identity() : invariance_rotation(o.model.seed, r - 1);
        z[t] = embed(rotate_cloud(clouds[i], rot));
      }
    } catch (const DegenerateError& e) {
      degenerate[t] = true;
      errors[t] = e.what();
    } catch (const Error& e) {
      errors[t] = e.what();
    }
  });

  std::ostringstream csv;
  csv << "cloud_id,max_deviation,status\n";
  out << "cloud                     max |dz|_inf   status\n";
  bool all_ok = true;
  std::size_t passed = 0, skipped = 0;
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    std::string status;
    double dev = 0.0;
    std::string why;
    for (std::size_t r = 0; r < per && why.empty(); ++r)
      if (!errors[i * per + r].empty()) {
        why = errors[i * per + r];
        status = degenerate[i * per + r] ? "skipped" : "error";
      }
    if (why.empty()) {
      for (std::size_t r = 1; r < per; ++r)
        for (std::size_t c = 0; c < z[i * per].size(); ++c)
          dev = std::max(dev, std::abs(z[i * per + r][c] - z[i * per][c]));
      status = dev <= o.tolerance ? "pass" : "fail";
    }
    if (status == "skipped") {
      ++skipped;
      err << "warning: " << clouds[i].id << " skipped (degenerate): " << why << "\n";
    } else if (status == "error") {
      err << "error: " << clouds[i].id << ": " << why << "\n";
    }
    if (status == "pass") ++passed;
    if (status == "fail" || status == "error") all_ok = false;

    std::string id = clouds[i].id;
    id.resize(std::max<std::size_t>(id.size(), 24), ' ');
    const bool measured = status == "pass" || status == "fail";
    out << id << "  " << (measured ? sci(dev) : std::string("      -  ")) << "      " << status << "\n";
    csv << clouds[i].id << "," << (measured ? format_number(dev) : "") << "," << status << "\n";
  }
  out << passed << " passed, " << skipped << " skipped, " << (clouds.size() - passed - skipped)
      << " failed; tolerance " << sci(o.tolerance) << ", " << (o.identity ? 1 : o.rotations)
      << (o.identity ? " identity rotation" : " rotations") << "\n";
  if (o.csv) write_text(*o.csv, csv.str());
  return all_ok ? kOk : kValidation;
}

// ---------------------------------------------------------------- serialize

int cmd_serialize(const SerializeOptions& o, std::ostream& out, std::ostream&) {
  const PointCloud cloud = load_cloud(o.input);
  const SerializedPatches sp = prepare_patches(cloud, o.config);
  const auto ranks = sp.ranks();
  std::ostringstream csv;
  csv << "patch_index,hilbert_code,rank\n";
  for (std::size_t i = 0; i < sp.order.size(); ++i) csv << i << "," << sp.codes[i] << "," << ranks[i] << "\n";
  if (o.out) {
    write_text(*o.out, csv.str());
    out << "serialized " << sp.order.size() << " patches of " << cloud.id << " -> " << *o.out << "\n";
  } else {
    out << csv.str();
  }
  return kOk;
}

// ---------------------------------------------------------------- retrieve

int cmd_retrieve(const RetrieveOptions& o, std::size_t threads, std::ostream& out, std::ostream&) {
  if (o.k < 1) throw ArgumentError("--k must be >= 1");
  const GroundTruth truth = load_ground_truth(o.truth);

  const bool emb_q = is_emb1_input(o.queries), emb_db = is_emb1_input(o.database);
  if (emb_q != emb_db) throw ArgumentError("queries and database must both be EMB1 files or both be clouds");

  std::vector<RankedQuery> ranked;
  if (emb_q) {
    if (o.regime != Regime::II) throw ArgumentError("precomputed embeddings cannot be rotated; use --regime II");
    const EmbeddingFile q = load_emb1(o.queries[0]);
    const EmbeddingFile db = load_emb1(o.database[0]);
    RetrievalRun run{q.ids, q.rows.cast<double>(), db.ids, db.rows.cast<double>(), {}};
    run.relevant = resolve_relevance(run.query_ids, run.database_ids, truth);
    ranked = run.ranked();
  } else {
    const auto queries = load_clouds(o.queries);
    const auto database = load_clouds(o.database);
    std::vector<std::string> qids, dbids;
    for (const auto& c : queries) qids.push_back(c.id);
    for (const auto& c : database) dbids.push_back(c.id);
    const auto relevant = resolve_relevance(qids, dbids, truth);
    EncodeOptions enc;
    enc.tokenize.align_patches = o.align_patches;
    ranked = robustness_protocol(database, queries, relevant, o.regime, o.model.load(), o.model.seed, enc, o.k,
                                 o.head, threads)
                 .ranked;
  }

  const MetricReport m = evaluate(ranked, o.k);
  const std::string k = std::to_string(o.k);
  const auto row = [&](std::string label, const std::string& value) {
    label.resize(std::max<std::size_t>(label.size() + 1, 9), ' ');
    out << label << value << "\n";
  };
  row("regime", std::string(to_string(o.regime)));
  row("queries", std::to_string(ranked.size()));
  row("RR@1", fixed(m.rr_at_1, 2));
  row("RR@" + k, fixed(m.rr_at_k, 2));
  row("NDCG@" + k, fixed(m.ndcg_at_k, 2));
  row("mAP", fixed(m.map, 2));
  if (o.csv) {
    std::ostringstream csv;
    csv << "regime,k,queries,rr_at_1,rr_at_k,ndcg_at_k,map\n"
        << to_string(o.regime) << "," << o.k << "," << ranked.size() << "," << format_number(m.rr_at_1) << ","
        << format_number(m.rr_at_k) << "," << format_number(m.ndcg_at_k) << "," << format_number(m.map) << "\n";
    write_text(*o.csv, csv.str());
  }
  return kOk;
}

// ---------------------------------------------------------------- bench

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream&) {
  if (o.sizes.size() < 2 || o.lengths.size() < 2) throw ArgumentError("bench needs at least two sizes and lengths");
  if (o.repeats < 1) throw ArgumentError("--repeats must be >= 1");

  ModelConfig cfg;
  cfg.n_blocks = 1;
  cfg.dim = o.dim;
  const auto w = init_weights(cfg, o.seed);
  const auto& ori_mlp = w.tokenizer.ori;
  const auto& scan = w.blocks[0].scan;

  std::ostringstream csv, timing;
  csv << "series,size,mlp_calls,macs\n";
  timing << "series,size,median_seconds\n";
  out << "orientation embedding (MLP calls)\n       G     patchwise      pairwise\n";

  std::vector<double> gs, patchwise, pairwise;
  for (std::size_t g : o.sizes) {
    Prng rng(derive_seed(o.seed, g));
    std::vector<Frame> frames(g);
    for (auto& f : frames) f = {random_rotation(rng), FrameKind::local};
    const Frame grf{random_rotation(rng), FrameKind::global};
    std::vector<Mat3> poses;
    for (const auto& f : frames) poses.push_back(relative_pose(f, grf));

    OpCountScope scope;
    ori_embed<float>(poses, ori_mlp);
    const OpCounts pw_patch = scope.delta();
    op_counts() = {};
    pairwise_ori_baseline<float>(frames, ori_mlp);
    const OpCounts pw_pair = scope.delta();

    gs.push_back(double(g));
    patchwise.push_back(double(pw_patch.mlp_calls));
    pairwise.push_back(double(pw_pair.mlp_calls));
    csv << "ori_patchwise," << g << "," << pw_patch.mlp_calls << "," << pw_patch.macs << "\n"
        << "ori_pairwise," << g << "," << pw_pair.mlp_calls << "," << pw_pair.macs << "\n";
    char line[96];
    std::snprintf(line, sizeof line, "%8zu  %12llu  %12llu\n", g, static_cast<unsigned long long>(pw_patch.mlp_calls),
                  static_cast<unsigned long long>(pw_pair.mlp_calls));
    out << line;
  }
  const double s_patch = loglog_slope(gs, patchwise), s_pair = loglog_slope(gs, pairwise);

  out << "token mixing (multiply-accumulates" << (o.timing ? ", median seconds" : "") << ")\n"
      << "       T      scan MACs  attention MACs" << (o.timing ? "      scan s  attention s" : "") << "\n";
  std::vector<double> ts, scan_macs, attn_macs, scan_t, attn_t;
  for (std::size_t t : o.lengths) {
    Prng rng(derive_seed(o.seed, 1000000 + t));
    Matrix<float> x(t, o.dim);
    for (float& v : x.values()) v = static_cast<float>(rng.uniform(-1, 1));
    OpCountScope scope;
    selective_scan(x, scan);
    const auto sm = scope.delta().macs;
    op_counts() = {};
    reference_attention(x);
    const auto am = scope.delta().macs;
    ts.push_back(double(t));
    scan_macs.push_back(double(sm));
    attn_macs.push_back(double(am));
    csv << "scan," << t << ",0," << sm << "\n" << "attention," << t << ",0," << am << "\n";

    char line[160];
    int len = std::snprintf(line, sizeof line, "%8zu  %13llu  %14llu", t, static_cast<unsigned long long>(sm),
                            static_cast<unsigned long long>(am));
    if (o.timing) {
      std::vector<double> sr, ar;
      for (std::size_t r = 0; r < o.repeats; ++r) {
        sr.push_back(time_per_call([&] { selective_scan(x, scan); }));
        ar.push_back(time_per_call([&] { reference_attention(x); }));
      }
      scan_t.push_back(median(sr));
      attn_t.push_back(median(ar));
      timing << "scan," << t << "," << format_number(scan_t.back()) << "\n"
             << "attention," << t << "," << format_number(attn_t.back()) << "\n";
      std::snprintf(line + len, sizeof line - static_cast<std::size_t>(len), "  %10.3e  %11.3e", scan_t.back(),
                    attn_t.back());
    }
    out << line << "\n";
  }

  struct Check {
    const char* name;
    double slope;
    bool upper;  // slope must be <= bound, else >= bound
    double bound;
  };
  std::vector<Check> checks{{"ori_patchwise_calls", s_patch, true, 1.1},
                            {"ori_pairwise_calls", s_pair, false, 1.9},
                            {"scan_macs", loglog_slope(ts, scan_macs), true, 1.1},
                            {"attention_macs", loglog_slope(ts, attn_macs), false, 1.9}};
  if (o.timing) {
    checks.push_back({"scan_seconds", loglog_slope(ts, scan_t), true, 1.3});
    checks.push_back({"attention_seconds", loglog_slope(ts, attn_t), false, 1.8});
  }

  bool ok = true;
  out << "log-log slopes\n";
  for (const auto& c : checks) {
    const bool pass = c.upper ? c.slope <= c.bound : c.slope >= c.bound;
    ok = ok && pass;
    char line[128];
    std::snprintf(line, sizeof line, "  %-20s %6.3f  (%s %.1f)  %s\n", c.name, c.slope, c.upper ? "<=" : ">=", c.bound,
                  pass ? "ok" : "FAIL");
    out << line;
    const bool timed = std::string_view(c.name).ends_with("_seconds");
    (timed ? timing : csv) << "slope," << c.name << ",," << format_number(c.slope) << "\n";
  }
  if (o.csv) write_text(*o.csv, csv.str());
  if (o.timing && o.timing_csv) write_text(*o.timing_csv, timing.str());
  return ok ? kOk : kValidation;
}

// ---------------------------------------------------------------- gen / init-weights

int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream&) {
  if (o.count < 1) throw ArgumentError("--count must be >= 1");
  const auto format_of = [&](const fs::path& p) {
    const std::string f = o.format ? *o.format : (p.extension() == ".xyz" || p.extension() == ".txt" ? "xyz" : "pcb1");
    if (f == "xyz") return CloudFormat::xyz_ascii;
    if (f == "pcb1") return CloudFormat::pcb1_binary;
    throw ArgumentError("unknown format '" + f + "' (expected xyz or pcb1)");
  };
  if (o.count == 1) {
    Prng rng(o.seed);
    PointCloud c = gen_cloud(o.kind, o.points, rng);
    save_cloud(c, o.out, format_of(o.out));
    out << "wrote " << o.points << " points -> " << o.out << "\n";
    return kOk;
  }
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create directory '" + o.out + "': " + ec.message());
  const CloudFormat fmt = format_of(fs::path(o.out) / "x");
  const std::string ext = fmt == CloudFormat::xyz_ascii ? ".xyz" : ".pcb1";
  for (std::size_t i = 0; i < o.count; ++i) {
    Prng rng(derive_seed(o.seed, i));
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04zu", std::string(to_string(o.kind)).c_str(), i);
    save_cloud(gen_cloud(o.kind, o.points, rng), fs::path(o.out) / (name + ext), fmt);
  }
  out << "wrote " << o.count << " clouds of " << o.points << " points -> " << o.out << "\n";
  return kOk;
}

int cmd_init_weights(const InitWeightsOptions& o, std::ostream& out, std::ostream&) {
  o.config.validate();
  const auto w = init_weights(o.config, o.seed);
  save_weights(w, o.out);
  out << "wrote weights (" << o.config.n_blocks << " blocks, dim " << o.config.dim << ") -> " << o.out << "\n";
  return kOk;
}

}  // namespace rimamba::cli
