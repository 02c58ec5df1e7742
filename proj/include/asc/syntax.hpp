#pragma once

// Concrete syntax trees for Python source, using the node-type vocabulary of
// the tree-sitter Python grammar, plus the code features derived from them.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "asc/corpus.hpp"

namespace asc {

// Preorder index of a node within its tree. The root is always 0.
using NodeId = std::uint32_t;

inline constexpr std::string_view kGrammarVersion = "asc-pyparse 1.0 (tree-sitter-python 0.23 node vocabulary)";
inline constexpr std::string_view kErrorNodeType = "ERROR";

struct SyntaxNode {
  std::string node_type;
  std::uint32_t start_byte = 0;
  std::uint32_t end_byte = 0;
  bool is_named = true;
  std::vector<NodeId> children;
  NodeId parent = 0;  // root points at itself
  std::uint32_t depth = 0;

  bool is_terminal() const noexcept { return children.empty(); }
  bool is_error() const noexcept { return node_type == kErrorNodeType; }
};

// Nodes are stored flat in preorder, so a NodeId doubles as a stable,
// serializable identity and iterating `nodes()` is a preorder walk.
class SyntaxTree {
 public:
  SyntaxTree() = default;
  SyntaxTree(std::string source, std::vector<SyntaxNode> nodes);

  const SyntaxNode& root() const { return nodes_.front(); }
  const SyntaxNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<SyntaxNode>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::uint32_t source_len() const noexcept { return static_cast<std::uint32_t>(source_.size()); }
  const std::string& source() const noexcept { return source_; }
  std::string_view text_of(NodeId id) const;

  // Lisp-style rendering of named nodes, handy in tests and debugging.
  std::string to_sexp() const;

 private:
  std::string source_;
  std::vector<SyntaxNode> nodes_;
};

// Never fails on valid UTF-8: regions the grammar rejects become ERROR nodes.
// Throws EncodingError on malformed UTF-8.
SyntaxTree parse(std::string_view source);

std::int64_t count_nodes(const SyntaxTree& tree);
std::int64_t tree_levels(const SyntaxTree& tree);
std::int64_t count_errors(const SyntaxTree& tree);

// Node types that each add one decision point to the cyclomatic complexity.
const std::vector<std::string_view>& decision_node_types();
std::int64_t cyclomatic(const SyntaxTree& tree);

std::int64_t count_lines(std::string_view source);
std::int64_t count_whitespace(std::string_view source);

CodeFeatures compute_features(std::string_view source, const SyntaxTree& tree,
                              const std::vector<TokenRecord>& tokens);

}  // namespace asc
