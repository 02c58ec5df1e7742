#pragma once

// Node scoring (theta), local and corpus-level concept reports, and
// snippet cross-entropy.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "asc/alignment.hpp"
#include "asc/corpus.hpp"
#include "asc/syntax.hpp"
#include "asc/taxonomy.hpp"

namespace asc {

enum class StatKind { Median, Mean, Max };
enum class AggMode { Token, Hierarchical };
enum class PoolMode { Node, Snippet };

struct AggregationStatistic {
  StatKind kind = StatKind::Median;
  AggMode mode = AggMode::Token;

  bool operator==(const AggregationStatistic&) const = default;
};

std::string_view stat_name(StatKind kind);
std::string_view mode_name(AggMode mode);
std::string_view pool_name(PoolMode pool);
// Throw ConfigError for unknown names.
StatKind parse_stat(std::string_view name);
AggMode parse_agg_mode(std::string_view name);
PoolMode parse_pool(std::string_view name);

inline constexpr double kConfidentThreshold = 0.6;
inline constexpr double kErroneousThreshold = 0.5;
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr int kSchemaVersion = 1;

// Median with midpoint for even lengths, mean or max. Empty input gives
// nullopt.
std::optional<double> aggregate_node(std::span<const double> values, StatKind kind);
inline std::optional<double> aggregate_node(std::span<const double> values, AggregationStatistic stat) {
  return aggregate_node(values, stat.kind);
}

struct NodeAnnotation {
  std::optional<double> score;
  ConceptCategory category = ConceptCategory::Uncategorized;
  std::uint32_t token_count = 0;

  bool operator==(const NodeAnnotation&) const = default;
};

struct AnnotatedTree {
  SyntaxTree tree;
  std::vector<NodeAnnotation> nodes;  // indexed by NodeId
  AggregationStatistic stat;
};

AnnotatedTree annotate(const SyntaxTree& tree, const Alignment& alignment, const std::vector<TokenRecord>& tokens,
                       const Taxonomy& taxonomy, AggregationStatistic stat);

enum class Flag { None, Confident, Erroneous };
std::string_view flag_name(Flag flag);
Flag flag_for(double score);

enum class EntryKind { Concept, Category, Global };
std::string_view entry_kind_name(EntryKind kind);

struct ReportEntry {
  std::string key;
  EntryKind kind = EntryKind::Concept;
  double score = 0.0;
  std::size_t count = 0;
  Flag flag = Flag::None;

  bool operator==(const ReportEntry&) const = default;
};

struct EvalWarning {
  std::string key;
  std::string message;

  bool operator==(const EvalWarning&) const = default;
};

enum class Scope { Snippet, Corpus };

struct EvalReport {
  Scope scope = Scope::Snippet;
  std::string snippet_id;  // empty for corpus scope
  AggregationStatistic stat;
  PoolMode pool = PoolMode::Node;
  std::size_t resamples = 0;   // 0 for snippet scope
  std::uint64_t seed = 0;
  std::size_t snippets = 0;
  std::string taxonomy_version;
  std::vector<ReportEntry> concepts;    // sorted by key
  std::vector<ReportEntry> categories;  // in category order
  std::optional<ReportEntry> global;
  std::vector<EvalWarning> warnings;

  const ReportEntry* concept_entry(std::string_view node_type) const;
  const ReportEntry* category_entry(ConceptCategory category) const;

  bool operator==(const EvalReport&) const = default;
};

// Parses, aligns and annotates a snippet. Throws EncodingError for invalid
// UTF-8 sources.
AnnotatedTree analyze_snippet(const SnippetRecord& snippet, const Taxonomy& taxonomy, AggregationStatistic stat,
                              AlignOptions align_options = {});

// Report over an already annotated tree.
EvalReport snippet_report(const AnnotatedTree& annotated, std::string snippet_id, const Taxonomy& taxonomy);

struct LocalEval {
  AnnotatedTree annotated;
  EvalReport report;
};

LocalEval local_eval(const SnippetRecord& snippet, const Taxonomy& taxonomy, AggregationStatistic stat = {},
                     AlignOptions align_options = {});

struct GlobalOptions {
  std::size_t resamples = 500;
  std::uint64_t seed = 0;
  PoolMode pool = PoolMode::Node;
  std::size_t workers = 1;
  AlignOptions align;
};

// Median of `resamples` medians, each over `pool.size()` draws with
// replacement from `pool`. Consumes rng draws in a fixed order.
double bootstrap_median(std::span<const double> pool, std::size_t resamples, std::mt19937_64& rng);

// Uniform integer in [0, n) by rejection; independent of the standard
// library's distribution implementation.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

EvalReport global_eval(const std::vector<SnippetRecord>& corpus, const Taxonomy& taxonomy,
                       AggregationStatistic stat = {}, const GlobalOptions& options = {});

// Mean of -ln(max(ntp, 1e-12)) over tokens with ntp. Throws NumericError
// when no token carries an ntp.
double cross_entropy(const std::vector<TokenRecord>& tokens);

nlohmann::ordered_json to_json(const ReportEntry& entry);
nlohmann::ordered_json to_json(const EvalReport& report);
// key,kind,score,count,flag for concepts, then categories, then global.
std::string to_csv(const EvalReport& report);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);
std::string csv_field(std::string_view field);

}  // namespace asc
