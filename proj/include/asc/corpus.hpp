#pragma once

// Interchange data model: snippets of source code paired with the tokenizer
// tokens a model saw and the probability it gave each actual token.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace asc {

struct TokenRecord {
  std::string text;
  std::uint32_t start_byte = 0;
  std::uint32_t end_byte = 0;
  // Absent for the first position of a snippet: nothing precedes it.
  std::optional<double> ntp;

  bool operator==(const TokenRecord&) const = default;
};

struct CodeFeatures {
  std::int64_t loc = 0;
  std::int64_t whitespace_count = 0;
  std::int64_t token_count = 0;
  std::int64_t n_ast_nodes = 0;
  std::int64_t ast_levels = 0;
  std::int64_t ast_errors = 0;
  std::int64_t cyclomatic = 1;
  std::int64_t sequence_size = 0;

  bool operator==(const CodeFeatures&) const = default;
};

struct SnippetRecord {
  std::string id;
  std::string source;
  std::vector<TokenRecord> tokens;
  std::optional<double> loss;
  std::optional<CodeFeatures> features;
  std::map<std::string, std::string> metadata;
  // Keys this toolkit does not know about; written back untouched.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const SnippetRecord&) const = default;
};

struct Violation {
  std::string rule;
  std::string location;

  bool operator==(const Violation&) const = default;
};

// Rule names reported by validate().
namespace rules {
inline constexpr std::string_view kEmptyId = "empty id";
inline constexpr std::string_view kEmptySpan = "empty span";
inline constexpr std::string_view kSpanOutOfSource = "span outside source";
inline constexpr std::string_view kTextMismatch = "text mismatch";
inline constexpr std::string_view kSpansOverlap = "spans overlap";
inline constexpr std::string_view kNtpRange = "ntp out of range";
inline constexpr std::string_view kNegativeLoss = "negative loss";
inline constexpr std::string_view kFeatureRange = "feature out of range";
inline constexpr std::string_view kInvalidUtf8 = "invalid utf-8";
// Corpus-level: reported by load_corpus, not by validate().
inline constexpr std::string_view kDuplicateId = "duplicate id";
}  // namespace rules

std::vector<Violation> validate(const SnippetRecord& record);

// Throws FormatError for undecodable lines and ValidationError for records
// that decode but violate an invariant.
std::vector<SnippetRecord> load_corpus(const std::filesystem::path& path);
std::vector<SnippetRecord> parse_corpus(std::string_view text);

void save_corpus(const std::vector<SnippetRecord>& records, const std::filesystem::path& path);
std::string serialize_corpus(const std::vector<SnippetRecord>& records);

nlohmann::ordered_json to_json(const SnippetRecord& record);
SnippetRecord snippet_from_json(const nlohmann::json& j, std::size_t line);

nlohmann::ordered_json to_json(const CodeFeatures& features);
CodeFeatures features_from_json(const nlohmann::json& j, std::size_t line);

// Byte offset of the first malformed sequence, or nullopt when valid.
std::optional<std::size_t> find_invalid_utf8(std::string_view text);

}  // namespace asc
