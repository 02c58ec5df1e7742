#pragma once

// Subcommands of the asc binary. Each takes a fully resolved RunConfig,
// writes its outputs under config.output and returns the process exit code:
// 0 when no error occurred, 1 when some inputs failed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "asc/asceval.hpp"
#include "asc/causal.hpp"
#include "asc/taxonomy.hpp"
#include "asc/viz.hpp"

namespace asc {

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> taxonomy;
  AggregationStatistic stat;
  std::size_t resamples = 500;
  std::optional<std::uint64_t> seed;
  PoolMode pool = PoolMode::Node;
  std::vector<std::string> treatments = default_treatments();
  std::vector<std::string> confounders = default_confounders();
  std::vector<RenderMode> render_modes = {RenderMode::Partial, RenderMode::Complete, RenderMode::Sequence};
  std::vector<OutputFormat> formats = {OutputFormat::Html};
  bool show_scores = true;
  int precision = 2;
  std::size_t workers = 1;
  bool skip_whitespace_tokens = false;
  bool per_snippet = false;
  bool dump_alignment = false;
};

inline constexpr const char* kTaxonomyEnv = "ASC_TAXONOMY";

// Explicit path, then $ASC_TAXONOMY, then the embedded default.
Taxonomy resolve_taxonomy(const RunConfig& config);
std::string taxonomy_source(const RunConfig& config);

// Effective configuration echoed into every output header.
nlohmann::ordered_json config_echo(const RunConfig& config, std::string_view command, const Taxonomy& taxonomy);

int cmd_features(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);
int cmd_causal(const RunConfig& config, std::ostream& log);
int cmd_viz(const RunConfig& config, std::ostream& log);
// Checks every record and reports all violations instead of stopping at the
// first. Writes validation.json when an output directory is set.
int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& log);
// Writes the resolved taxonomy in config format to `destination`, or to
// `out` when destination is empty.
int cmd_taxonomy_export(const RunConfig& config, const std::filesystem::path& destination, std::ostream& out);

}  // namespace asc
