// asc: command-line front end for the AsC toolkit.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asc/cli.hpp"
#include "asc/error.hpp"
#include "asc/parallel.hpp"

namespace {

struct RawOptions {
  std::string input;
  std::string output;
  std::string taxonomy;
  std::string stat = "median";
  std::string agg_mode = "token";
  std::size_t resamples = 500;
  std::int64_t seed = -1;
  std::string pool = "node";
  std::vector<std::string> treatments;
  std::vector<std::string> confounders;
  std::vector<std::string> render{"partial", "complete", "sequence"};
  std::vector<std::string> formats{"html"};
  bool no_scores = false;
  int precision = 2;
  std::size_t workers = asc::default_workers();
  bool skip_whitespace = false;
  bool per_snippet = false;
  bool dump_alignment = false;
};

asc::RunConfig to_config(const RawOptions& raw) {
  asc::RunConfig c;
  c.input = raw.input;
  c.output = raw.output;
  if (!raw.taxonomy.empty()) c.taxonomy = raw.taxonomy;
  c.stat.kind = asc::parse_stat(raw.stat);
  c.stat.mode = asc::parse_agg_mode(raw.agg_mode);
  c.resamples = raw.resamples;
  if (raw.seed >= 0) c.seed = static_cast<std::uint64_t>(raw.seed);
  c.pool = asc::parse_pool(raw.pool);
  if (!raw.treatments.empty()) c.treatments = raw.treatments;
  if (!raw.confounders.empty()) c.confounders = raw.confounders;
  c.render_modes.clear();
  for (const auto& m : raw.render) c.render_modes.push_back(asc::parse_render_mode(m));
  c.formats.clear();
  for (const auto& f : raw.formats) c.formats.push_back(asc::parse_output_format(f));
  c.show_scores = !raw.no_scores;
  c.precision = raw.precision;
  c.workers = std::max<std::size_t>(1, raw.workers);
  c.skip_whitespace_tokens = raw.skip_whitespace;
  c.per_snippet = raw.per_snippet;
  c.dump_alignment = raw.dump_alignment;
  return c;
}

void add_io(CLI::App* cmd, RawOptions& raw, bool output_required) {
  cmd->add_option("--input,-i", raw.input, "Corpus file (one JSON record per line)")->required();
  auto* out = cmd->add_option("--output,-o", raw.output, "Output directory (created if absent)");
  if (output_required) out->required();
  cmd->add_option("--taxonomy", raw.taxonomy, "Taxonomy config (default: $ASC_TAXONOMY, then built-in)");
  cmd->add_option("--workers", raw.workers, "Parallel workers (default: available cores)")->check(CLI::PositiveNumber);
  cmd->add_flag("--skip-whitespace-tokens", raw.skip_whitespace, "Ignore whitespace-only tokens when aligning");
}

void add_aggregation(CLI::App* cmd, RawOptions& raw) {
  cmd->add_option("--stat", raw.stat, "Node aggregation statistic")
      ->check(CLI::IsMember({"median", "mean", "max"}))
      ->capture_default_str();
  cmd->add_option("--agg-mode", raw.agg_mode, "Aggregate tokens per node, or children scores for internal nodes")
      ->check(CLI::IsMember({"token", "hierarchical"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AsC toolkit: syntax-grounded evaluation of code language models"};
  app.require_subcommand(1);
  RawOptions raw;

  auto* features = app.add_subcommand("features", "Compute code features and missing losses");
  add_io(features, raw, true);

  auto* eval = app.add_subcommand("eval", "Corpus-level concept scores with bootstrapped medians");
  add_io(eval, raw, true);
  add_aggregation(eval, raw);
  eval->add_option("--resamples", raw.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--seed", raw.seed, "Bootstrap seed")->required()->check(CLI::NonNegativeNumber);
  eval->add_option("--pool", raw.pool, "Pool node scores or per-snippet aggregates")
      ->check(CLI::IsMember({"node", "snippet"}))
      ->capture_default_str();
  eval->add_flag("--per-snippet", raw.per_snippet, "Also write one report per snippet");
  eval->add_flag("--dump-alignment", raw.dump_alignment, "Write node -> token alignments to alignment.jsonl");

  auto* causal = app.add_subcommand("causal", "Correlations and adjusted treatment effects on loss");
  add_io(causal, raw, true);
  add_aggregation(causal, raw);
  causal->add_option("--treatments", raw.treatments, "Node types, category names or 'global'")->delimiter(',');
  causal->add_option("--confounders", raw.confounders, "Feature names used as confounders")->delimiter(',');

  auto* viz = app.add_subcommand("viz", "Render color-coded trees and token sequences");
  add_io(viz, raw, true);
  add_aggregation(viz, raw);
  viz->add_option("--render", raw.render, "Modes: partial, complete, sequence")->delimiter(',');
  viz->add_option("--format", raw.formats, "Formats: dot, svg, html")->delimiter(',');
  viz->add_flag("--no-scores", raw.no_scores, "Label nodes with their type only");
  viz->add_option("--precision", raw.precision, "Decimal places for scores")->check(CLI::Range(0, 17));

  auto* validate = app.add_subcommand("validate", "Check every record and list all violations");
  validate->add_option("--input,-i", raw.input, "Corpus file")->required();
  validate->add_option("--output,-o", raw.output, "Directory for validation.json");

  auto* taxonomy = app.add_subcommand("taxonomy", "Taxonomy utilities");
  taxonomy->require_subcommand(1);
  auto* tax_export = taxonomy->add_subcommand("export", "Print or write the effective taxonomy config");
  tax_export->add_option("--taxonomy", raw.taxonomy, "Taxonomy config to re-export");
  tax_export->add_option("--output,-o", raw.output, "Destination file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  asc::RunConfig config;
  try {
    config = to_config(raw);
  } catch (const asc::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  if (*features) return asc::cmd_features(config, std::cerr);
  if (*eval) return asc::cmd_eval(config, std::cerr);
  if (*causal) return asc::cmd_causal(config, std::cerr);
  if (*viz) return asc::cmd_viz(config, std::cerr);
  if (*validate) return asc::cmd_validate(config, std::cout, std::cerr);
  if (*tax_export) {
    config.output.clear();
    return asc::cmd_taxonomy_export(config, raw.output, std::cout);
  }
  return 2;
}
