#include <algorithm>
#include <functional>

#include "asc/syntax.hpp"

namespace asc {

SyntaxTree::SyntaxTree(std::string source, std::vector<SyntaxNode> nodes)
    : source_(std::move(source)), nodes_(std::move(nodes)) {}

std::string_view SyntaxTree::text_of(NodeId id) const {
  const SyntaxNode& n = node(id);
  return std::string_view(source_).substr(n.start_byte, n.end_byte - n.start_byte);
}

std::string SyntaxTree::to_sexp() const {
  std::string out;
  std::function<void(NodeId)> emit = [&](NodeId id) {
    const SyntaxNode& n = nodes_[id];
    out += '(';
    out += n.node_type;
    for (NodeId c : n.children) {
      if (!nodes_[c].is_named) continue;
      out += ' ';
      emit(c);
    }
    out += ')';
  };
  if (!nodes_.empty()) emit(0);
  return out;
}

std::int64_t count_nodes(const SyntaxTree& tree) { return static_cast<std::int64_t>(tree.size()); }

std::int64_t tree_levels(const SyntaxTree& tree) {
  std::uint32_t deepest = 0;
  for (const SyntaxNode& n : tree.nodes()) deepest = std::max(deepest, n.depth);
  return tree.size() == 0 ? 0 : static_cast<std::int64_t>(deepest) + 1;
}

std::int64_t count_errors(const SyntaxTree& tree) {
  return std::count_if(tree.nodes().begin(), tree.nodes().end(), [](const SyntaxNode& n) { return n.is_error(); });
}

const std::vector<std::string_view>& decision_node_types() {
  static const std::vector<std::string_view> kTypes = {
      "if_statement",     "elif_clause",     "for_statement",          "while_statement",
      "except_clause",    "with_statement",  "assert_statement",       "boolean_operator",
      "conditional_expression", "if_clause", "for_in_clause",          "case_clause",
  };
  return kTypes;
}

std::int64_t cyclomatic(const SyntaxTree& tree) {
  const auto& types = decision_node_types();
  std::int64_t decisions = 0;
  for (const SyntaxNode& n : tree.nodes()) {
    if (n.is_named && std::find(types.begin(), types.end(), n.node_type) != types.end()) ++decisions;
  }
  return 1 + decisions;
}

std::int64_t count_lines(std::string_view source) {
  if (source.empty()) return 0;
  auto newlines = static_cast<std::int64_t>(std::count(source.begin(), source.end(), '\n'));
  return source.back() == '\n' ? newlines : newlines + 1;
}

std::int64_t count_whitespace(std::string_view source) {
  return std::count_if(source.begin(), source.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

CodeFeatures compute_features(std::string_view source, const SyntaxTree& tree, const std::vector<TokenRecord>& tokens) {
  CodeFeatures f;
  f.loc = count_lines(source);
  f.whitespace_count = count_whitespace(source);
  f.token_count = static_cast<std::int64_t>(tokens.size());
  f.n_ast_nodes = count_nodes(tree);
  f.ast_levels = tree_levels(tree);
  f.ast_errors = count_errors(tree);
  f.cyclomatic = cyclomatic(tree);
  f.sequence_size = std::count_if(tokens.begin(), tokens.end(), [](const TokenRecord& t) { return t.ntp.has_value(); });
  return f;
}

}  // namespace asc
