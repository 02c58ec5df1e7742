#include "asc/alignment.hpp"

#include <algorithm>
#include <string>

#include "asc/error.hpp"

namespace asc {

const std::vector<std::uint32_t>& Alignment::tokens_of(NodeId id) const {
  if (id >= per_node_.size()) throw LookupError("unknown node id " + std::to_string(id));
  return per_node_[id];
}

nlohmann::ordered_json Alignment::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t id = 0; id < per_node_.size(); ++id) j[std::to_string(id)] = per_node_[id];
  return j;
}

bool is_whitespace_token(const TokenRecord& token) {
  return !token.text.empty() && std::all_of(token.text.begin(), token.text.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

Alignment align(const SyntaxTree& tree, const std::vector<TokenRecord>& tokens, AlignOptions options) {
  std::vector<std::uint32_t> kept;
  kept.reserve(tokens.size());
  for (std::uint32_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].end_byte > tree.source_len()) {
      throw ValidationError("<alignment>", "token span exceeds source",
                            "tokens[" + std::to_string(i) + "] ends at " + std::to_string(tokens[i].end_byte) +
                                " > " + std::to_string(tree.source_len()));
    }
    if (options.skip_whitespace_tokens && is_whitespace_token(tokens[i])) continue;
    kept.push_back(i);
  }

  // Tokens are non-overlapping and sorted, so both starts and ends increase
  // and the tokens meeting [s, e) form one contiguous run of `kept`.
  std::vector<std::vector<std::uint32_t>> per_node(tree.size());
  for (NodeId id = 0; id < tree.size(); ++id) {
    const SyntaxNode& n = tree.node(id);
    if (n.start_byte >= n.end_byte) continue;
    auto first = std::partition_point(kept.begin(), kept.end(),
                                      [&](std::uint32_t t) { return tokens[t].end_byte <= n.start_byte; });
    auto& out = per_node[id];
    for (auto it = first; it != kept.end() && tokens[*it].start_byte < n.end_byte; ++it) out.push_back(*it);
  }
  return Alignment(std::move(per_node));
}

std::vector<double> node_ntp(const Alignment& alignment, const std::vector<TokenRecord>& tokens, NodeId id) {
  std::vector<double> out;
  for (std::uint32_t t : alignment.tokens_of(id)) {
    if (tokens.at(t).ntp) out.push_back(*tokens[t].ntp);
  }
  return out;
}

}  // namespace asc
