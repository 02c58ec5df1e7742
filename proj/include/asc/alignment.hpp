#pragma once

// Token-to-node alignment: every node is paired with the tokenizer tokens
// whose byte spans intersect its own span.

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "asc/corpus.hpp"
#include "asc/syntax.hpp"

namespace asc {

struct AlignOptions {
  // Drop tokens made only of whitespace before aligning.
  bool skip_whitespace_tokens = false;
};

class Alignment {
 public:
  Alignment() = default;
  explicit Alignment(std::vector<std::vector<std::uint32_t>> per_node) : per_node_(std::move(per_node)) {}

  // Token indices for a node, ordered by start_byte. Throws LookupError for
  // ids outside the tree.
  const std::vector<std::uint32_t>& tokens_of(NodeId id) const;
  std::size_t node_count() const noexcept { return per_node_.size(); }

  bool operator==(const Alignment&) const = default;

  // {"<node_id>": [token indices]} for debugging dumps.
  nlohmann::ordered_json to_json() const;

 private:
  std::vector<std::vector<std::uint32_t>> per_node_;
};

// Throws ValidationError when a token ends beyond the source.
Alignment align(const SyntaxTree& tree, const std::vector<TokenRecord>& tokens, AlignOptions options = {});

// NtP values of the node's tokens in order, skipping tokens without one.
std::vector<double> node_ntp(const Alignment& alignment, const std::vector<TokenRecord>& tokens, NodeId id);

bool is_whitespace_token(const TokenRecord& token);

}  // namespace asc
