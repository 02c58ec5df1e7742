#include "asc/asceval.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "asc/error.hpp"
#include "asc/parallel.hpp"

namespace asc {

namespace {

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return (lower + upper) / 2.0;
}

constexpr std::size_t kCategoryCount = kAllCategories.size();

// Score samples gathered from one snippet, grouped by report key.
struct SnippetPools {
  std::map<std::string, std::vector<double>, std::less<>> concepts;
  std::array<std::vector<double>, kCategoryCount> categories;
  std::vector<double> all;
};

SnippetPools collect_pools(const AnnotatedTree& annotated) {
  SnippetPools pools;
  for (NodeId id = 0; id < annotated.nodes.size(); ++id) {
    const NodeAnnotation& a = annotated.nodes[id];
    if (!a.score) continue;
    pools.concepts[annotated.tree.node(id).node_type].push_back(*a.score);
    pools.categories[static_cast<std::size_t>(a.category)].push_back(*a.score);
    pools.all.push_back(*a.score);
  }
  return pools;
}

ReportEntry make_entry(std::string key, EntryKind kind, double score, std::size_t count) {
  return ReportEntry{std::move(key), kind, score, count, flag_for(score)};
}

}  // namespace

std::string_view stat_name(StatKind kind) {
  switch (kind) {
    case StatKind::Median: return "median";
    case StatKind::Mean: return "mean";
    case StatKind::Max: return "max";
  }
  return "median";
}

std::string_view mode_name(AggMode mode) { return mode == AggMode::Token ? "token" : "hierarchical"; }
std::string_view pool_name(PoolMode pool) { return pool == PoolMode::Node ? "node" : "snippet"; }

StatKind parse_stat(std::string_view name) {
  if (name == "median") return StatKind::Median;
  if (name == "mean") return StatKind::Mean;
  if (name == "max") return StatKind::Max;
  throw ConfigError("unknown statistic '" + std::string(name) + "' (expected median, mean or max)");
}

AggMode parse_agg_mode(std::string_view name) {
  if (name == "token") return AggMode::Token;
  if (name == "hierarchical") return AggMode::Hierarchical;
  throw ConfigError("unknown aggregation mode '" + std::string(name) + "' (expected token or hierarchical)");
}

PoolMode parse_pool(std::string_view name) {
  if (name == "node") return PoolMode::Node;
  if (name == "snippet") return PoolMode::Snippet;
  throw ConfigError("unknown pool mode '" + std::string(name) + "' (expected node or snippet)");
}

std::optional<double> aggregate_node(std::span<const double> values, StatKind kind) {
  if (values.empty()) return std::nullopt;
  switch (kind) {
    case StatKind::Median: {
      std::vector<double> copy(values.begin(), values.end());
      return median_inplace(copy);
    }
    case StatKind::Mean: {
      const double sum = std::accumulate(values.begin(), values.end(), 0.0);
      return std::clamp(sum / static_cast<double>(values.size()), 0.0, 1.0);
    }
    case StatKind::Max: return *std::max_element(values.begin(), values.end());
  }
  return std::nullopt;
}

AnnotatedTree annotate(const SyntaxTree& tree, const Alignment& alignment, const std::vector<TokenRecord>& tokens,
                       const Taxonomy& taxonomy, AggregationStatistic stat) {
  AnnotatedTree out{tree, std::vector<NodeAnnotation>(tree.size()), stat};
  // Children always carry larger preorder ids than their parent, so a
  // reverse sweep sees every child before its parent.
  for (std::size_t i = tree.size(); i-- > 0;) {
    const auto id = static_cast<NodeId>(i);
    const SyntaxNode& n = tree.node(id);
    NodeAnnotation& a = out.nodes[id];
    a.category = taxonomy.categorize(n.node_type);
    a.token_count = static_cast<std::uint32_t>(alignment.tokens_of(id).size());
    if (stat.mode == AggMode::Token || n.is_terminal()) {
      a.score = aggregate_node(node_ntp(alignment, tokens, id), stat.kind);
    } else {
      std::vector<double> child_scores;
      for (NodeId c : n.children) {
        if (out.nodes[c].score) child_scores.push_back(*out.nodes[c].score);
      }
      // Tokens can sit between children (whitespace, straddlers); fall back
      // to them so a node with scored tokens never ends up unscored.
      a.score = child_scores.empty() ? aggregate_node(node_ntp(alignment, tokens, id), stat.kind)
                                     : aggregate_node(child_scores, stat.kind);
    }
  }
  return out;
}

std::string_view flag_name(Flag flag) {
  switch (flag) {
    case Flag::Confident: return "confident";
    case Flag::Erroneous: return "erroneous";
    case Flag::None: break;
  }
  return "";
}

Flag flag_for(double score) {
  if (score >= kConfidentThreshold) return Flag::Confident;
  if (score < kErroneousThreshold) return Flag::Erroneous;
  return Flag::None;
}

std::string_view entry_kind_name(EntryKind kind) {
  switch (kind) {
    case EntryKind::Concept: return "concept";
    case EntryKind::Category: return "category";
    case EntryKind::Global: return "global";
  }
  return "concept";
}

const ReportEntry* EvalReport::concept_entry(std::string_view node_type) const {
  auto it = std::lower_bound(concepts.begin(), concepts.end(), node_type,
                             [](const ReportEntry& e, std::string_view k) { return e.key < k; });
  return it != concepts.end() && it->key == node_type ? &*it : nullptr;
}

const ReportEntry* EvalReport::category_entry(ConceptCategory category) const {
  for (const ReportEntry& e : categories) {
    if (e.key == category_name(category)) return &e;
  }
  return nullptr;
}

AnnotatedTree analyze_snippet(const SnippetRecord& snippet, const Taxonomy& taxonomy, AggregationStatistic stat,
                              AlignOptions align_options) {
  SyntaxTree tree = parse(snippet.source);
  Alignment alignment = align(tree, snippet.tokens, align_options);
  return annotate(tree, alignment, snippet.tokens, taxonomy, stat);
}

EvalReport snippet_report(const AnnotatedTree& annotated, std::string snippet_id, const Taxonomy& taxonomy) {
  EvalReport report;
  report.scope = Scope::Snippet;
  report.snippet_id = std::move(snippet_id);
  report.stat = annotated.stat;
  report.snippets = 1;
  report.taxonomy_version = taxonomy.version();

  SnippetPools pools = collect_pools(annotated);
  for (auto& [key, values] : pools.concepts) {
    report.concepts.push_back(make_entry(key, EntryKind::Concept, *aggregate_node(values, annotated.stat.kind),
                                         values.size()));
  }
  for (ConceptCategory c : kAllCategories) {
    const auto& values = pools.categories[static_cast<std::size_t>(c)];
    if (values.empty()) continue;
    report.categories.push_back(make_entry(std::string(category_name(c)), EntryKind::Category,
                                           *aggregate_node(values, annotated.stat.kind), values.size()));
  }
  if (!pools.all.empty()) {
    report.global = make_entry("global", EntryKind::Global, *aggregate_node(pools.all, annotated.stat.kind),
                               pools.all.size());
  } else {
    report.warnings.push_back({"global", "no token with an ntp value; nothing to score"});
  }
  return report;
}

LocalEval local_eval(const SnippetRecord& snippet, const Taxonomy& taxonomy, AggregationStatistic stat,
                     AlignOptions align_options) {
  AnnotatedTree annotated = analyze_snippet(snippet, taxonomy, stat, align_options);
  EvalReport report = snippet_report(annotated, snippet.id, taxonomy);
  return {std::move(annotated), std::move(report)};
}

std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw NumericError("cannot sample from an empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

double bootstrap_median(std::span<const double> pool, std::size_t resamples, std::mt19937_64& rng) {
  if (pool.empty()) throw NumericError("bootstrap over an empty pool");
  if (resamples == 0) throw ConfigError("bootstrap needs at least one resample");
  std::vector<double> medians(resamples);
  std::vector<double> draw(pool.size());
  for (std::size_t r = 0; r < resamples; ++r) {
    for (double& d : draw) d = pool[uniform_index(rng, pool.size())];
    medians[r] = median_inplace(draw);
  }
  return median_inplace(medians);
}

EvalReport global_eval(const std::vector<SnippetRecord>& corpus, const Taxonomy& taxonomy, AggregationStatistic stat,
                       const GlobalOptions& options) {
  if (corpus.empty()) throw ConfigError("global evaluation needs a non-empty corpus");
  if (options.resamples == 0) throw ConfigError("bootstrap needs at least one resample");

  std::vector<SnippetPools> per_snippet(corpus.size());
  parallel_for(corpus.size(), options.workers, [&](std::size_t i) {
    AnnotatedTree annotated = analyze_snippet(corpus[i], taxonomy, stat, options.align);
    SnippetPools pools = collect_pools(annotated);
    if (options.pool == PoolMode::Snippet) {
      // One sample per snippet and key: the snippet-level aggregate.
      SnippetPools reduced;
      for (auto& [key, values] : pools.concepts) reduced.concepts[key] = {*aggregate_node(values, stat.kind)};
      for (std::size_t c = 0; c < kCategoryCount; ++c) {
        if (!pools.categories[c].empty()) reduced.categories[c] = {*aggregate_node(pools.categories[c], stat.kind)};
      }
      if (!pools.all.empty()) reduced.all = {*aggregate_node(pools.all, stat.kind)};
      pools = std::move(reduced);
    }
    per_snippet[i] = std::move(pools);
  });

  // Merge in snippet order so pool contents never depend on scheduling.
  SnippetPools merged;
  for (SnippetPools& p : per_snippet) {
    for (auto& [key, values] : p.concepts) {
      auto& dst = merged.concepts[key];
      dst.insert(dst.end(), values.begin(), values.end());
    }
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      merged.categories[c].insert(merged.categories[c].end(), p.categories[c].begin(), p.categories[c].end());
    }
    merged.all.insert(merged.all.end(), p.all.begin(), p.all.end());
  }

  EvalReport report;
  report.scope = Scope::Corpus;
  report.stat = stat;
  report.pool = options.pool;
  report.resamples = options.resamples;
  report.seed = options.seed;
  report.snippets = corpus.size();
  report.taxonomy_version = taxonomy.version();

  // One stream, consumed in key order: concepts (sorted), categories, global.
  std::mt19937_64 rng(options.seed);
  for (auto& [key, values] : merged.concepts) {
    report.concepts.push_back(
        make_entry(key, EntryKind::Concept, bootstrap_median(values, options.resamples, rng), values.size()));
  }
  for (ConceptCategory c : kAllCategories) {
    const auto& values = merged.categories[static_cast<std::size_t>(c)];
    if (values.empty()) continue;
    report.categories.push_back(make_entry(std::string(category_name(c)), EntryKind::Category,
                                           bootstrap_median(values, options.resamples, rng), values.size()));
  }
  if (!merged.all.empty()) {
    report.global = make_entry("global", EntryKind::Global,
                               bootstrap_median(merged.all, options.resamples, rng), merged.all.size());
  } else {
    report.warnings.push_back({"global", "empty pool: no scored node in the corpus"});
  }
  return report;
}

double cross_entropy(const std::vector<TokenRecord>& tokens) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TokenRecord& t : tokens) {
    if (!t.ntp) continue;
    sum += -std::log(std::max(*t.ntp, kProbabilityFloor));
    ++n;
  }
  if (n == 0) throw NumericError("cross-entropy undefined: no token carries an ntp value");
  return sum / static_cast<double>(n);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

nlohmann::ordered_json to_json(const ReportEntry& entry) {
  nlohmann::ordered_json j;
  j["key"] = entry.key;
  j["kind"] = entry_kind_name(entry.kind);
  j["score"] = entry.score;
  j["count"] = entry.count;
  j["flag"] = entry.flag == Flag::None ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(flag_name(entry.flag));
  return j;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["scope"] = report.scope == Scope::Snippet ? "snippet" : "corpus";
  if (report.scope == Scope::Snippet) j["snippet_id"] = report.snippet_id;
  nlohmann::ordered_json config;
  config["stat"] = stat_name(report.stat.kind);
  config["mode"] = mode_name(report.stat.mode);
  if (report.scope == Scope::Corpus) {
    config["pool"] = pool_name(report.pool);
    config["resamples"] = report.resamples;
    config["seed"] = report.seed;
  }
  config["grammar_version"] = kGrammarVersion;
  config["taxonomy_version"] = report.taxonomy_version;
  j["config"] = std::move(config);
  j["thresholds"] = {{"confident", kConfidentThreshold}, {"erroneous", kErroneousThreshold}};
  j["snippets"] = report.snippets;
  j["global"] = report.global ? to_json(*report.global) : nlohmann::ordered_json(nullptr);
  auto& cats = j["categories"] = nlohmann::ordered_json::array();
  for (const ReportEntry& e : report.categories) cats.push_back(to_json(e));
  auto& concepts = j["concepts"] = nlohmann::ordered_json::array();
  for (const ReportEntry& e : report.concepts) concepts.push_back(to_json(e));
  auto& warnings = j["warnings"] = nlohmann::ordered_json::array();
  for (const EvalWarning& w : report.warnings) warnings.push_back({{"key", w.key}, {"message", w.message}});
  return j;
}

std::string to_csv(const EvalReport& report) {
  std::string out = "key,kind,score,count,flag\n";
  auto row = [&](const ReportEntry& e) {
    out += csv_field(e.key);
    out += ',';
    out += entry_kind_name(e.kind);
    out += ',';
    out += format_double(e.score);
    out += ',';
    out += std::to_string(e.count);
    out += ',';
    out += flag_name(e.flag);
    out += '\n';
  };
  for (const ReportEntry& e : report.concepts) row(e);
  for (const ReportEntry& e : report.categories) row(e);
  if (report.global) row(*report.global);
  return out;
}

}  // namespace asc
