#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "asc/asceval.hpp"
#include "asc/error.hpp"
#include "asc/viz.hpp"
#include "testkit.hpp"

using namespace asc;

namespace {

const Taxonomy& tax() { return Taxonomy::builtin(); }

NodeId first_of(const SyntaxTree& t, std::string_view type) {
  for (NodeId i = 0; i < t.size(); ++i) {
    if (t.node(i).node_type == type) return i;
  }
  FAIL("node type not found");
  return 0;
}

const std::vector<AggregationStatistic>& all_stats() {
  static const std::vector<AggregationStatistic> kAll = {
      {StatKind::Median, AggMode::Token}, {StatKind::Mean, AggMode::Token}, {StatKind::Max, AggMode::Token},
      {StatKind::Median, AggMode::Hierarchical}, {StatKind::Mean, AggMode::Hierarchical},
      {StatKind::Max, AggMode::Hierarchical}};
  return kAll;
}

SnippetRecord with_all_ntp(SnippetRecord s, double v) {
  for (std::size_t i = 1; i < s.tokens.size(); ++i) s.tokens[i].ntp = v;
  return s;
}

}  // namespace

TEST_CASE("aggregate_node definitions") {
  for (StatKind k : {StatKind::Median, StatKind::Mean, StatKind::Max}) {
    CHECK(aggregate_node(std::vector<double>{0.37}, k) == 0.37);
    CHECK_FALSE(aggregate_node(std::vector<double>{}, k).has_value());
  }
  CHECK(aggregate_node(std::vector<double>{0.1, 0.2, 0.9}, StatKind::Median) == 0.2);
  CHECK(aggregate_node(std::vector<double>{0.9, 0.1, 0.2}, StatKind::Median) == 0.2);
  CHECK(aggregate_node(std::vector<double>{0.1, 0.2, 0.4, 0.9}, StatKind::Median) == doctest::Approx(0.3));
  CHECK(aggregate_node(std::vector<double>{0.1, 0.2, 0.9}, StatKind::Max) == 0.9);
  CHECK(aggregate_node(std::vector<double>{0.2, 0.4}, StatKind::Mean) == doctest::Approx(0.3));
  CHECK(aggregate_node(std::vector<double>{0.1, 0.2}, AggregationStatistic{}) == doctest::Approx(0.15));
  CHECK(AggregationStatistic{}.kind == StatKind::Median);
  CHECK(AggregationStatistic{}.mode == AggMode::Token);
}

TEST_CASE("hierarchical mean reproduces the parameters example") {
  const SnippetRecord s = testkit::count_chars_snippet();
  const AnnotatedTree a = analyze_snippet(s, tax(), {StatKind::Mean, AggMode::Hierarchical});
  const NodeId params = first_of(a.tree, "parameters");
  std::vector<double> child_scores;
  for (NodeId c : a.tree.node(params).children) child_scores.push_back(a.nodes[c].score.value());
  REQUIRE(child_scores.size() == 5);
  const std::vector<double> expected = {0.07, 0.4, 0.5, 0.1, 0.1};
  for (std::size_t i = 0; i < 5; ++i) CHECK(child_scores[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(std::fabs(*a.nodes[params].score - 0.234) < 1e-12);
  CHECK(format_score(a.nodes[params].score, 2) == "0.23");
}

TEST_CASE("all-ones snippet scores 1.0 everywhere in every mode") {
  std::mt19937_64 rng(3);
  const SnippetRecord s = with_all_ntp(testkit::random_snippet(rng, "ones"), 1.0);
  for (const auto& stat : all_stats()) {
    const LocalEval e = local_eval(s, tax(), stat);
    for (const auto& n : e.annotated.nodes) {
      if (n.score) CHECK(*n.score == 1.0);
    }
    for (const auto& c : e.report.concepts) CHECK(c.score == 1.0);
    for (const auto& c : e.report.categories) CHECK(c.score == 1.0);
  }
}

TEST_CASE("property: token-mode medians equal a recomputation from raw spans") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 50; ++i) {
    const SnippetRecord s = testkit::random_snippet(rng, "r", 5, 200, true);
    const AnnotatedTree a = analyze_snippet(s, tax(), {});
    for (NodeId id = 0; id < a.tree.size(); ++id) {
      const auto oracle = testkit::brute_token_median(a.tree, s.tokens, id);
      REQUIRE(a.nodes[id].score.has_value() == oracle.has_value());
      if (oracle) CHECK(*a.nodes[id].score == *oracle);
    }
  }
}

TEST_CASE("property: score present iff some aligned token has an ntp, in every mode") {
  std::mt19937_64 rng(78);
  for (int i = 0; i < 30; ++i) {
    const SnippetRecord s = testkit::random_snippet(rng, "r", 5, 200, true);
    for (const auto& stat : all_stats()) {
      const AnnotatedTree a = analyze_snippet(s, tax(), stat);
      for (NodeId id = 0; id < a.tree.size(); ++id) {
        const bool has = testkit::brute_token_median(a.tree, s.tokens, id).has_value();
        CHECK(a.nodes[id].score.has_value() == has);
        if (a.nodes[id].score) {
          CHECK(*a.nodes[id].score >= 0.0);
          CHECK(*a.nodes[id].score <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("single if statement drives the Decision category") {
  const SnippetRecord s = with_all_ntp(testkit::simple_snippet("d", "if a:\n    b\n", {0.5}), 0.7);
  const LocalEval e = local_eval(s, tax());
  const ReportEntry* decision = e.report.category_entry(ConceptCategory::Decision);
  REQUIRE(decision != nullptr);
  CHECK(decision->score == doctest::Approx(0.7));
  REQUIRE(e.report.concept_entry("if_statement") != nullptr);
  CHECK(e.report.concept_entry("if_statement")->count == 1);
  CHECK(e.report.concept_entry("if_statement")->flag == Flag::Confident);
}

TEST_CASE("property: local report equals a group-by over node scores") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 30; ++i) {
    const SnippetRecord s = testkit::random_snippet(rng, "g", 5, 200, true);
    for (const auto& stat : all_stats()) {
      const LocalEval e = local_eval(s, tax(), stat);
      std::map<std::string, std::vector<double>> by_type;
      std::map<std::string, std::vector<double>> by_cat;
      for (NodeId id = 0; id < e.annotated.tree.size(); ++id) {
        if (!e.annotated.nodes[id].score) continue;
        const std::string& type = e.annotated.tree.node(id).node_type;
        by_type[type].push_back(*e.annotated.nodes[id].score);
        by_cat[std::string(category_name(tax().categorize(type)))].push_back(*e.annotated.nodes[id].score);
      }
      REQUIRE(e.report.concepts.size() == by_type.size());
      for (const auto& entry : e.report.concepts) {
        const auto& values = by_type.at(entry.key);
        CHECK(entry.count == values.size());
        double expected = 0.0;
        if (stat.kind == StatKind::Median) expected = *testkit::sorted_median(values);
        if (stat.kind == StatKind::Max) expected = *std::max_element(values.begin(), values.end());
        if (stat.kind == StatKind::Mean) {
          for (double v : values) expected += v;
          expected /= static_cast<double>(values.size());
        }
        CHECK(entry.score == doctest::Approx(expected).epsilon(1e-12));
      }
      REQUIRE(e.report.categories.size() == by_cat.size());
      for (const auto& entry : e.report.categories) CHECK(entry.count == by_cat.at(entry.key).size());
    }
  }
}

TEST_CASE("property: raising one ntp never lowers any node score") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 40; ++i) {
    const SnippetRecord s = testkit::random_snippet(rng, "m", 5, 120);
    SnippetRecord up = s;
    const std::size_t k = 1 + std::uniform_int_distribution<std::size_t>(0, s.tokens.size() - 2)(rng);
    up.tokens[k].ntp = std::min(1.0, *up.tokens[k].ntp + 0.3);
    for (const auto& stat : all_stats()) {
      const AnnotatedTree a = analyze_snippet(s, tax(), stat);
      const AnnotatedTree b = analyze_snippet(up, tax(), stat);
      for (NodeId id = 0; id < a.tree.size(); ++id) {
        if (a.nodes[id].score) CHECK(*b.nodes[id].score >= *a.nodes[id].score);
      }
    }
  }
}

TEST_CASE("token and hierarchical mean agree on a flat node") {
  const SnippetRecord s = testkit::simple_snippet("flat", "x=[1,2,3]", {0.2, 0.9, 0.4, 0.6, 0.3, 0.8, 0.5, 0.7});
  const AnnotatedTree t = analyze_snippet(s, tax(), {StatKind::Mean, AggMode::Token});
  const AnnotatedTree h = analyze_snippet(s, tax(), {StatKind::Mean, AggMode::Hierarchical});
  const NodeId list = first_of(t.tree, "list");
  for (NodeId c : t.tree.node(list).children) REQUIRE(t.nodes[c].token_count == 1);
  CHECK(*t.nodes[list].score == doctest::Approx(*h.nodes[list].score).epsilon(1e-15));
}

TEST_CASE("thresholds") {
  CHECK(flag_for(0.6) == Flag::Confident);
  CHECK(flag_for(0.65) == Flag::Confident);
  CHECK(flag_for(0.5999) == Flag::None);
  CHECK(flag_for(0.5) == Flag::None);
  CHECK(flag_for(0.4999) == Flag::Erroneous);
}

TEST_CASE("bootstrap of a constant pool is the constant") {
  std::vector<SnippetRecord> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(testkit::planted_snippet("c" + std::to_string(i), 0.7310585786300049));
  const EvalReport r = global_eval(corpus, tax(), {}, {500, 42, PoolMode::Node, 2});
  REQUIRE(r.global.has_value());
  CHECK(r.global->score == 0.7310585786300049);
  for (const auto& e : r.concepts) CHECK(e.score == 0.7310585786300049);
}

TEST_CASE("global evaluation is deterministic for a seed and independent of workers") {
  std::mt19937_64 rng(5150);
  std::vector<SnippetRecord> corpus;
  for (int i = 0; i < 40; ++i) corpus.push_back(testkit::random_snippet(rng, "s" + std::to_string(i), 5, 200, true));
  const EvalReport base = global_eval(corpus, tax(), {}, {200, 9, PoolMode::Node, 1});
  for (std::size_t w : {1, 3, 8}) {
    const EvalReport other = global_eval(corpus, tax(), {}, {200, 9, PoolMode::Node, w});
    CHECK(other == base);
    CHECK(to_json(other).dump() == to_json(base).dump());
  }
  const EvalReport reseeded = global_eval(corpus, tax(), {}, {200, 10, PoolMode::Node, 1});
  CHECK_FALSE(reseeded == base);

  const std::vector<SnippetRecord> one = {corpus.front()};
  CHECK(global_eval(one, tax(), {}, {1, 3, PoolMode::Node, 1}) == global_eval(one, tax(), {}, {1, 3, PoolMode::Node, 4}));
}

TEST_CASE("every reported score is a probability with a positive count") {
  std::mt19937_64 rng(6);
  std::vector<SnippetRecord> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(testkit::random_snippet(rng, "b" + std::to_string(i)));
  for (PoolMode pool : {PoolMode::Node, PoolMode::Snippet}) {
    const EvalReport r = global_eval(corpus, tax(), {}, {50, 1, pool, 2});
    for (const auto* list : {&r.concepts, &r.categories}) {
      for (const auto& e : *list) {
        CHECK(e.score >= 0.0);
        CHECK(e.score <= 1.0);
        CHECK(e.count > 0);
      }
    }
  }
}

TEST_CASE("snippet pooling contributes one sample per snippet") {
  std::vector<SnippetRecord> corpus = {testkit::planted_snippet("a", 0.2), testkit::planted_snippet("b", 0.8),
                                       testkit::simple_snippet("c", "x = y + z", {0.3, 0.9})};
  const EvalReport r = global_eval(corpus, tax(), {}, {100, 4, PoolMode::Snippet, 1});
  CHECK(r.concept_entry("identifier")->count == 3);
  CHECK(r.global->count == 3);
  const EvalReport n = global_eval(corpus, tax(), {}, {100, 4, PoolMode::Node, 1});
  CHECK(n.concept_entry("identifier")->count == 4);
}

TEST_CASE("empty pools become warnings, empty corpora are errors") {
  SnippetRecord lone;
  lone.id = "lone";
  lone.source = "x";
  lone.tokens = {{"x", 0, 1, std::nullopt}};
  const EvalReport r = global_eval({lone}, tax(), {}, {10, 1, PoolMode::Node, 1});
  CHECK_FALSE(r.global.has_value());
  CHECK(r.concepts.empty());
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].key == "global");
  CHECK_THROWS_AS(global_eval({}, tax(), {}, {}), ConfigError);
  CHECK_THROWS_AS(global_eval({lone}, tax(), {}, {0, 1, PoolMode::Node, 1}), ConfigError);
}

TEST_CASE("uniform_index stays in range and covers it") {
  std::mt19937_64 rng(1);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) ++seen[uniform_index(rng, 7)];
  for (int c : seen) CHECK(c > 800);
  CHECK_THROWS_AS(uniform_index(rng, 0), NumericError);
}

TEST_CASE("cross-entropy closed forms") {
  const std::vector<TokenRecord> ones = {{"a", 0, 1, std::nullopt}, {"b", 1, 2, 1.0}, {"c", 2, 3, 1.0}};
  CHECK(cross_entropy(ones) == 0.0);
  CHECK(std::fabs(cross_entropy({{"a", 0, 1, 0.5}}) - std::log(2.0)) < 1e-9);
  const double inv_e = std::exp(-1.0);
  CHECK(std::fabs(cross_entropy({{"a", 0, 1, inv_e}, {"b", 1, 2, inv_e}}) - 1.0) < 1e-9);
  CHECK(cross_entropy({{"a", 0, 1, 0.0}}) == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(cross_entropy({{"a", 0, 1, std::nullopt}}), NumericError);
  CHECK_THROWS_AS(cross_entropy({}), NumericError);
}

TEST_CASE("property: cross-entropy equals an independent per-token mean") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const SnippetRecord s = testkit::random_snippet(rng, "ce");
    double sum = 0.0;
    int n = 0;
    for (const auto& t : s.tokens) {
      if (t.ntp) {
        sum += -std::log(*t.ntp);
        ++n;
      }
    }
    CHECK(cross_entropy(s.tokens) == doctest::Approx(sum / n).epsilon(1e-12));
  }
}

TEST_CASE("report serialization") {
  const SnippetRecord s = testkit::simple_snippet("q", "f(a, b)", {0.9, 0.3});
  const LocalEval e = local_eval(s, tax());
  const auto j = to_json(e.report);
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["scope"] == "snippet");
  CHECK(j["config"]["stat"] == "median");
  CHECK(j["config"]["mode"] == "token");
  CHECK(j["config"]["grammar_version"] == std::string(kGrammarVersion));
  const std::string csv = to_csv(e.report);
  CHECK(csv.rfind("key,kind,score,count,flag\n", 0) == 0);
  CHECK(csv.find("\",\",concept,") != std::string::npos);
  CHECK(csv.find("\nglobal,global,") != std::string::npos);
  CHECK(csv_field("a\"b") == "\"a\"\"b\"");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("name parsing") {
  CHECK(parse_stat("mean") == StatKind::Mean);
  CHECK(parse_agg_mode("hierarchical") == AggMode::Hierarchical);
  CHECK(parse_pool("snippet") == PoolMode::Snippet);
  CHECK_THROWS_AS(parse_stat("mode"), ConfigError);
  CHECK_THROWS_AS(parse_agg_mode("tree"), ConfigError);
  CHECK_THROWS_AS(parse_pool("all"), ConfigError);
}
