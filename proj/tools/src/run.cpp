#include <ostream>

#include <CLI11.hpp>

#include "rimamba/errors.hpp"
#include "rimamba/parallel.hpp"
#include "rimamba_cli/commands.hpp"

namespace rimamba::cli {

namespace {

void add_config_options(CLI::App& app, ModelConfig& c) {
  app.add_option("--blocks", c.n_blocks, "Number of blocks L")->capture_default_str();
  app.add_option("--dim", c.dim, "Channel width C")->capture_default_str();
  app.add_option("--patches", c.n_patches, "Patch count G")->capture_default_str();
  app.add_option("--neighbors", c.neighbors, "Points per patch k")->capture_default_str();
  app.add_option("--points", c.input_points, "Nominal input size N")->capture_default_str();
  app.add_option("--state-dim", c.state_dim, "Scan state size")->capture_default_str();
  app.add_option("--conv-width", c.conv_width, "Causal convolution width")->capture_default_str();
  app.add_option("--film-bottleneck", c.film_bottleneck, "FiLM bottleneck width")->capture_default_str();
}

void add_model_options(CLI::App& app, ModelSource& m) {
  app.add_option("--weights", m.weights_path, "RIMW weight file (default: random weights from --seed)");
  app.add_option("--seed", m.seed, "Seed for random weights and rotations")->capture_default_str();
  add_config_options(app, m.config);
}

const std::map<std::string, EmbeddingHead> kHeads{
    {"p", EmbeddingHead::shape}, {"i", EmbeddingHead::image}, {"t", EmbeddingHead::text}};
const std::map<std::string, Precision> kPrecisions{{"f32", Precision::f32}, {"f64", Precision::f64}};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotation-invariant point-cloud encoder toolkit", "rimamba"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rimamba 0.1.0");

  EmbedOptions embed;
  auto* c_embed = app.add_subcommand("embed", "Encode clouds into an EMB1 embedding file");
  c_embed->add_option("--input,-i", embed.inputs, "Cloud files or directories")->required();
  c_embed->add_option("--out,-o", embed.out, "Output EMB1 file")->required();
  c_embed->add_option("--head", embed.head, "Embedding head: p (shape), i (image), t (text)")
      ->transform(CLI::CheckedTransformer(kHeads).description(""))
      ->type_name("{p,i,t}");
  c_embed->add_option("--precision", embed.precision, "Arithmetic: f32 or f64")
      ->transform(CLI::CheckedTransformer(kPrecisions).description(""))
      ->type_name("{f32,f64}");
  add_model_options(*c_embed, embed.model);

  InvarianceOptions inv;
  auto* c_inv = app.add_subcommand("check-invariance", "Compare embeddings of rotated copies of each cloud");
  c_inv->add_option("--input,-i", inv.inputs, "Cloud files or directories")->required();
  c_inv->add_option("--rotations,-r", inv.rotations, "Random rotations per cloud")->capture_default_str();
  c_inv->add_flag("--identity", inv.identity, "Use the identity instead of random rotations");
  c_inv->add_option("--tolerance", inv.tolerance, "Maximum allowed |dz_p|_inf")->capture_default_str();
  c_inv->add_option("--precision", inv.precision, "Arithmetic: f32 or f64")
      ->transform(CLI::CheckedTransformer(kPrecisions).description(""))
      ->type_name("{f32,f64}");
  c_inv->add_option("--csv", inv.csv, "Also write the report as CSV");
  add_model_options(*c_inv, inv.model);

  SerializeOptions ser;
  auto* c_ser = app.add_subcommand("serialize", "Dump the Hilbert serialization of one cloud as CSV");
  c_ser->add_option("--input,-i", ser.input, "Cloud file")->required();
  c_ser->add_option("--out,-o", ser.out, "CSV output (default: stdout)");
  add_config_options(*c_ser, ser.config);

  RetrieveOptions ret;
  bool no_align = false;
  auto* c_ret = app.add_subcommand("retrieve", "Rank a database for every query and report RR@1, RR@k, NDCG@k, mAP");
  c_ret->add_option("--queries,-q", ret.queries, "EMB1 file, or cloud files/directories")->required();
  c_ret->add_option("--database,-d", ret.database, "EMB1 file, or cloud files/directories")->required();
  c_ret->add_option("--truth,-t", ret.truth, "Ground truth: query_id<TAB>relevant_id[,...] per line")->required();
  c_ret->add_option("--k", ret.k, "Cutoff for RR@k and NDCG@k")->capture_default_str();
  std::string regime = "II";
  c_ret->add_option("--regime", regime, "Rotation regime (database/query): II, ISO3, SO3I, SO3SO3")
      ->check(CLI::IsMember({"II", "ISO3", "SO3I", "SO3SO3"}))
      ->capture_default_str();
  c_ret->add_option("--head", ret.head, "Embedding head: p, i or t")->transform(CLI::CheckedTransformer(kHeads).description(""))
      ->type_name("{p,i,t}");
  c_ret->add_flag("--no-align", no_align, "Disable patch alignment (non-invariant ablation)");
  c_ret->add_option("--csv", ret.csv, "Also write the metrics as CSV");
  add_model_options(*c_ret, ret.model);

  BenchOptions bench;
  bool no_timing = false;
  auto* c_bench = app.add_subcommand("bench", "Operation counts and timing: patchwise vs pairwise, scan vs attention");
  c_bench->add_option("--sizes", bench.sizes, "Patch counts G")->delimiter(',')->capture_default_str();
  c_bench->add_option("--lengths", bench.lengths, "Sequence lengths T")->delimiter(',')->capture_default_str();
  c_bench->add_option("--repeats", bench.repeats, "Timing repeats (median)")->capture_default_str();
  c_bench->add_option("--dim", bench.dim, "Channel width")->capture_default_str();
  c_bench->add_option("--seed", bench.seed, "Seed")->capture_default_str();
  c_bench->add_flag("--no-timing", no_timing, "Skip wall-clock measurements");
  c_bench->add_option("--csv", bench.csv, "Operation counts and slopes as CSV (deterministic)");
  c_bench->add_option("--timing-csv", bench.timing_csv, "Wall-clock medians and slopes as CSV");

  GenOptions gen;
  auto* c_gen = app.add_subcommand("gen", "Generate synthetic clouds");
  std::string kind;
  c_gen->add_option("--kind", kind, "Shape family")
      ->check(CLI::IsMember({"ellipsoid", "box_surface", "two_lobes", "helix"}))
      ->required();
  c_gen->add_option("--points,-n", gen.points, "Points per cloud")->capture_default_str();
  c_gen->add_option("--count", gen.count, "Number of clouds (more than one writes a directory)")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  c_gen->add_option("--format", gen.format, "xyz or pcb1 (default: from the extension)");
  c_gen->add_option("--out,-o", gen.out, "Output file or directory")->required();

  InitWeightsOptions initw;
  auto* c_init = app.add_subcommand("init-weights", "Write randomly initialized weights");
  c_init->add_option("--seed", initw.seed, "Seed")->capture_default_str();
  c_init->add_option("--out,-o", initw.out, "Output RIMW file")->required();
  add_config_options(*c_init, initw.config);

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }
  ret.align_patches = !no_align;
  ret.regime = parse_regime(regime);
  if (*c_gen) gen.kind = parse_cloud_kind(kind);
  bench.timing = !no_timing;

  const std::size_t threads = default_threads();
  try {
    if (*c_embed) return cmd_embed(embed, threads, out, err);
    if (*c_inv) return cmd_check_invariance(inv, threads, out, err);
    if (*c_ser) return cmd_serialize(ser, out, err);
    if (*c_ret) return cmd_retrieve(ret, threads, out, err);
    if (*c_bench) return cmd_bench(bench, out, err);
    if (*c_gen) return cmd_gen(gen, out, err);
    if (*c_init) return cmd_init_weights(initw, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kValidation;
}

}  // namespace rimamba::cli
