#include <doctest.h>

#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "asc/error.hpp"
#include "asc/viz.hpp"
#include "testkit.hpp"

using namespace asc;

namespace {

std::size_t count_matches(const std::string& text, const std::regex& re) {
  return static_cast<std::size_t>(std::distance(std::sregex_iterator(text.begin(), text.end(), re),
                                                std::sregex_iterator()));
}

std::size_t dot_nodes(const std::string& dot) { return count_matches(dot, std::regex(R"(\n  [nt]\d+ \[label=)")); }
std::size_t dot_edges(const std::string& dot) { return count_matches(dot, std::regex(R"(\n  [nt]\d+ -> [nt]\d+;)")); }
std::size_t svg_nodes(const std::string& svg) { return count_matches(svg, std::regex(R"(<g class="node( error)?")")); }
std::size_t svg_edges(const std::string& svg) { return count_matches(svg, std::regex(R"(<line class="edge")")); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// module > expression_statement > call > (identifier, argument_list), with
// the two leaves as terminals.
AnnotatedTree five_node_tree() {
  std::vector<SyntaxNode> nodes = {
      {"module", 0, 3, true, {1}, 0, 0},        {"expression_statement", 0, 3, true, {2}, 0, 1},
      {"call", 0, 3, true, {3, 4}, 1, 2},       {"identifier", 0, 1, true, {}, 2, 3},
      {"argument_list", 1, 3, true, {}, 2, 3},
  };
  AnnotatedTree a{SyntaxTree("f()", nodes), {}, {}};
  a.nodes = {{0.9, ConceptCategory::Scope, 3}, {0.7, ConceptCategory::Uncategorized, 3},
             {0.5, ConceptCategory::FunctionalProgramming, 3}, {0.3, ConceptCategory::NaturalLanguage, 1},
             {std::nullopt, ConceptCategory::FunctionalProgramming, 0}};
  return a;
}

std::size_t non_terminals(const SyntaxTree& t) {
  return static_cast<std::size_t>(
      std::count_if(t.nodes().begin(), t.nodes().end(), [](const SyntaxNode& n) { return !n.is_terminal(); }));
}

}  // namespace

TEST_CASE("color map constants") {
  CHECK(color_of(1.0).hex() == "#0B61A4");
  CHECK(color_of(0.0).hex() == "#C4302B");
  CHECK(color_of(0.5).hex() == "#FFFFFF");
  CHECK(color_of(std::nullopt) == kColorAbsent);
  CHECK(color_of(std::nan("")) == kColorAbsent);
  CHECK(color_of(1.7) == color_of(1.0));
  CHECK(color_of(-0.2) == color_of(0.0));
  CHECK(color_of(0.75).hex() == "#85B0D2");
}

TEST_CASE("property: color channels move monotonically along each half of the scale") {
  // Under red -> white -> blue, the blue channel rises to the white midpoint
  // and then falls back to 0xA4, so monotonicity holds per half: every
  // channel rises on [0, 0.5] and falls on [0.5, 1]. Blue dominates red
  // exactly above the midpoint.
  Color prev = color_of(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double s = i / 1000.0;
    const Color c = color_of(s);
    if (s <= 0.5) {
      CHECK(c.r >= prev.r);
      CHECK(c.g >= prev.g);
      CHECK(c.b >= prev.b);
    } else {
      CHECK(c.r <= prev.r);
      CHECK(c.g <= prev.g);
      CHECK(c.b <= prev.b);
    }
    // Within a step or two of the midpoint both channels round to 0xFF.
    const int dominance = static_cast<int>(c.b) - static_cast<int>(c.r);
    if (s < 0.5) CHECK(dominance <= 0);
    if (s > 0.5) CHECK(dominance >= 0);
    if (s < 0.49) CHECK(dominance < 0);
    if (s > 0.51) CHECK(dominance > 0);
    prev = c;
  }
}

TEST_CASE("mode cardinality on a five-node tree") {
  const AnnotatedTree a = five_node_tree();
  const std::string complete = render(a, {}, {RenderMode::Complete, OutputFormat::Dot});
  CHECK(dot_nodes(complete) == 5);
  CHECK(dot_edges(complete) == 4);
  const std::string partial = render(a, {}, {RenderMode::Partial, OutputFormat::Dot});
  CHECK(dot_nodes(partial) == 3);
  CHECK(dot_edges(partial) == 2);
  CHECK(partial.find("identifier") == std::string::npos);
  CHECK(complete.find("label=\"argument_list\\nn/a\", fillcolor=\"#BFBFBF\"") != std::string::npos);
  const std::string svg = render(a, {}, {RenderMode::Complete, OutputFormat::Svg});
  CHECK(svg_nodes(svg) == 5);
  CHECK(svg_edges(svg) == 4);
}

TEST_CASE("property: element counts follow the mode on random snippets") {
  std::mt19937_64 rng(404);
  for (int i = 0; i < 25; ++i) {
    const SnippetRecord s = testkit::random_snippet(rng, "v", 5, 150, true);
    const AnnotatedTree a = analyze_snippet(s, Taxonomy::builtin(), {});
    const std::size_t expect[] = {non_terminals(a.tree), a.tree.size(), s.tokens.size()};
    for (RenderMode mode : {RenderMode::Partial, RenderMode::Complete, RenderMode::Sequence}) {
      const std::size_t want = expect[static_cast<int>(mode)];
      const std::string dot = render(a, s.tokens, {mode, OutputFormat::Dot});
      CHECK(dot_nodes(dot) == want);
      CHECK(svg_nodes(render(a, s.tokens, {mode, OutputFormat::Svg})) == want);
      CHECK(svg_nodes(render(a, s.tokens, {mode, OutputFormat::Html})) == want);
      // Trees: one edge per non-root element (a non-terminal's parent is a
      // non-terminal, so partial mode keeps them all). Sequences: a chain.
      CHECK(dot_edges(dot) == want - 1);
    }
  }
}

TEST_CASE("ERROR nodes are outlined and always labeled") {
  const SnippetRecord s = testkit::simple_snippet("broken", "def f(:\n", {0.4});
  const AnnotatedTree a = analyze_snippet(s, Taxonomy::builtin(), {});
  for (bool scores : {true, false}) {
    const std::string dot = render(a, s.tokens, {RenderMode::Partial, OutputFormat::Dot, scores});
    CHECK(count_matches(dot, std::regex(R"(label="ERROR[^"]*", fillcolor="#[0-9A-F]{6}", color="#000000", penwidth=3)")) >= 1);
    const std::string svg = render(a, s.tokens, {RenderMode::Complete, OutputFormat::Svg, scores});
    CHECK(svg.find("class=\"node error\"") != std::string::npos);
    CHECK(svg.find(">ERROR</text>") != std::string::npos);
  }
}

TEST_CASE("labels, escaping and precision") {
  SnippetRecord s = testkit::simple_snippet("q", "s = \"a\\\\b\"\n", {0.123456});
  const AnnotatedTree a = analyze_snippet(s, Taxonomy::builtin(), {});
  const std::string seq = render(a, s.tokens, {RenderMode::Sequence, OutputFormat::Dot, true, 3});
  CHECK(seq.find("label=\"\\\"\\n0.123\"") != std::string::npos);
  CHECK(seq.find("label=\"\\\\n\\n0.123\"") != std::string::npos);
  const std::string no_scores = render(a, s.tokens, {RenderMode::Complete, OutputFormat::Dot, false});
  CHECK(no_scores.find("label=\"module\",") != std::string::npos);
  CHECK(format_score(0.234, 2) == "0.23");
  CHECK(format_score(std::nullopt, 2) == "n/a");
  const std::string svg = render(a, s.tokens, {RenderMode::Sequence, OutputFormat::Svg});
  CHECK(svg.find("&quot;") != std::string::npos);
}

TEST_CASE("html embeds the drawing, a legend and both thresholds") {
  const SnippetRecord s = testkit::count_chars_snippet();
  const AnnotatedTree a = analyze_snippet(s, Taxonomy::builtin(), {});
  const std::string html = render(a, s.tokens, {RenderMode::Complete, OutputFormat::Html});
  CHECK(html.rfind("<!DOCTYPE html>", 0) == 0);
  CHECK(count_matches(html, std::regex(R"(<line class="threshold")")) == 2);
  CHECK(html.find("stop-color=\"#C4302B\"") != std::string::npos);
  CHECK(html.find("stop-color=\"#0B61A4\"") != std::string::npos);
  CHECK(svg_nodes(html) == a.tree.size());
}

TEST_CASE("rendering is deterministic") {
  std::mt19937_64 rng(8);
  const SnippetRecord s = testkit::random_snippet(rng, "d");
  const AnnotatedTree a = analyze_snippet(s, Taxonomy::builtin(), {});
  for (OutputFormat f : {OutputFormat::Dot, OutputFormat::Svg, OutputFormat::Html}) {
    CHECK(render(a, s.tokens, {RenderMode::Complete, f}) == render(analyze_snippet(s, Taxonomy::builtin(), {}), s.tokens, {RenderMode::Complete, f}));
  }
}

TEST_CASE("goldens match byte for byte") {
  const SnippetRecord s = testkit::count_chars_snippet();
  const AnnotatedTree a = analyze_snippet(s, Taxonomy::builtin(), {StatKind::Mean, AggMode::Hierarchical});
  for (RenderMode mode : {RenderMode::Partial, RenderMode::Complete, RenderMode::Sequence}) {
    const std::string name = render_file_name(s.id, mode, OutputFormat::Dot);
    CAPTURE(name);
    const std::string golden = read_file(std::string(ASC_GOLDEN_DIR) + "/" + name);
    REQUIRE_FALSE(golden.empty());
    CHECK(render(a, s.tokens, {mode, OutputFormat::Dot}) == golden);
  }
}

TEST_CASE("names and formats") {
  CHECK(render_file_name("count_chars", RenderMode::Partial, OutputFormat::Svg) == "count_chars.partial.svg");
  CHECK(render_file_name("repo/file.py:12", RenderMode::Sequence, OutputFormat::Html) ==
        "repo_file.py_12.sequence.html");
  CHECK(render_file_name("..", RenderMode::Complete, OutputFormat::Dot) == "_...complete.dot");
  CHECK(parse_output_format("svg") == OutputFormat::Svg);
  CHECK(parse_render_mode("partial") == RenderMode::Partial);
  CHECK_THROWS_AS(parse_output_format("pdf"), ConfigError);
  CHECK_THROWS_AS(parse_render_mode("tree"), ConfigError);
}
