#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rimamba/learn_eval.hpp"
#include "rimamba/ssm.hpp"

namespace rimamba::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

/// Where the network weights come from: a RIMW file, or init_weights(config, seed).
struct ModelSource {
  std::optional<std::string> weights_path;
  ModelConfig config;
  std::uint64_t seed = 0;

  ModelWeights<float> load() const;
};

enum class Precision { f32, f64 };

struct EmbedOptions {
  std::vector<std::string> inputs;
  ModelSource model;
  std::string out;
  EmbeddingHead head = EmbeddingHead::shape;
  Precision precision = Precision::f32;
};

struct InvarianceOptions {
  std::vector<std::string> inputs;
  ModelSource model;
  std::size_t rotations = 20;
  bool identity = false;  // use the identity for every "rotation"
  double tolerance = 1e-4;
  Precision precision = Precision::f32;
  std::optional<std::string> csv;
};

struct SerializeOptions {
  std::string input;
  ModelConfig config;
  std::optional<std::string> out;
};

struct RetrieveOptions {
  std::vector<std::string> queries;
  std::vector<std::string> database;
  std::string truth;
  std::size_t k = 5;
  Regime regime = Regime::II;
  ModelSource model;
  EmbeddingHead head = EmbeddingHead::shape;
  bool align_patches = true;
  std::optional<std::string> csv;
};

struct BenchOptions {
  std::vector<std::size_t> sizes{64, 256, 1024};
  std::vector<std::size_t> lengths{256, 1024, 4096};
  std::size_t repeats = 5;
  std::uint32_t dim = 64;
  std::uint64_t seed = 0;
  bool timing = true;
  std::optional<std::string> csv;
  std::optional<std::string> timing_csv;
};

struct GenOptions {
  CloudKind kind = CloudKind::two_lobes;
  std::size_t points = 10000;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::string> format;
};

struct InitWeightsOptions {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::string out;
};

/// Each command writes its human-readable report to `out`, diagnostics to
/// `err`, and returns an ExitCode. Library errors propagate to run().
int cmd_embed(const EmbedOptions& o, std::size_t threads, std::ostream& out, std::ostream& err);
int cmd_check_invariance(const InvarianceOptions& o, std::size_t threads, std::ostream& out, std::ostream& err);
int cmd_serialize(const SerializeOptions& o, std::ostream& out, std::ostream& err);
int cmd_retrieve(const RetrieveOptions& o, std::size_t threads, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err);
int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err);
int cmd_init_weights(const InitWeightsOptions& o, std::ostream& out, std::ostream& err);

/// Parses argv (args[0] is the program name), runs the command and maps
/// errors to exit codes: I/O and format errors give 2, everything else 1.
/// Worker count comes from RIMAMBA_THREADS.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Cloud files named directly, plus every .xyz/.txt/.pcb1/.pcb file inside
/// named directories (sorted by name).
std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace rimamba::cli
