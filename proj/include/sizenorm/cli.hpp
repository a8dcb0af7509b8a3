#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sizenorm/eval.hpp"
#include "sizenorm/optimize.hpp"
#include "sizenorm/sizetype.hpp"
#include "sizenorm/synth.hpp"

namespace sizenorm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

enum class Backend { Qp, Gd, Both };

struct PipelineConfig {
  std::filesystem::path out_dir = ".";
  // Interchange files; relative paths resolve against out_dir.
  std::filesystem::path sales = "sales.tsv";
  std::filesystem::path truth = "truth_map.tsv";
  std::filesystem::path truth_sizetypes = "truth_sizetypes.tsv";
  std::filesystem::path sizetypes = "sizetypes.tsv";
  std::filesystem::path freq = "freq.tsv";
  std::filesystem::path map_qp = "map_qp.tsv";
  std::filesystem::path map_gd = "map_gd.tsv";
  std::filesystem::path reference;  // empty: the synthetic truth map
  std::filesystem::path solve_report = "solve_report.json";
  std::filesystem::path eval_report = "eval_report.json";
  std::filesystem::path cases = "cases.tsv";
  std::filesystem::path block_out = "block.tsv";
  bool sales_given = false;  // pipeline synthesizes data unless a sales file was named

  ClusteringParams clustering;
  ProblemParams problem;
  QpOptions qp;
  GdOptions gd;
  SynthConfig synth;
  Backend backend = Backend::Qp;
  std::uint64_t seed = 42;

  double max_skip_fraction = 0.5;
  unsigned threads = 1;
  std::optional<Date> train_from, train_to;  // [from, to)
  std::optional<Date> eval_from, eval_to;
  std::size_t max_cases = 0;
  bool abstain_cross_component = false;
  std::optional<std::pair<std::string, std::string>> block;  // size types of a block to export
  bool verbose = false;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  /// Throws ConfigError on out-of-range parameters.
  void validate() const;
};

/// Applies a JSON config document over `config`. Unknown keys are errors.
void apply_config_json(PipelineConfig& config, const std::string& json_text);

// Stage commands. They throw sizenorm::Error subclasses on failure; the
// messages written to `log` are human-readable progress lines.
void cmd_synth(const PipelineConfig& config, std::ostream& log);
void cmd_infer_sizetypes(const PipelineConfig& config, std::ostream& log);
void cmd_build_freq(const PipelineConfig& config, std::ostream& log);
void cmd_normalize(const PipelineConfig& config, std::ostream& log);
void cmd_evaluate(const PipelineConfig& config, std::ostream& log);
void cmd_pipeline(PipelineConfig config, std::ostream& log);

/// Infers size types for every brand in the sales, brands in sorted order.
SizeTypeInference infer_catalog(std::span<const SaleRecord> sales, const ClusteringParams& params);

/// Entry point behind the `sizenorm` binary.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sizenorm::cli
