#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace asc::syntax_detail {

enum class TokKind : std::uint8_t { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker, Error };

struct Token {
  TokKind kind;
  std::uint32_t start;
  std::uint32_t end;
  std::string_view text;
};

// Tokens the grammar treats as extras: they can appear anywhere and are
// attached to the tree after parsing.
struct Extra {
  std::string_view node_type;  // "comment" or "line_continuation"
  std::uint32_t start;
  std::uint32_t end;
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<Extra> extras;
};

// Tokenizes a whole module: emits Newline/Indent/Dedent following Python's
// logical-line rules. Malformed input produces Error tokens, never throws.
LexResult lex_module(std::string_view source);

// Tokenizes the byte range [begin, end) of `source` as a bare expression (the
// inside of an f-string replacement field). No layout tokens are produced.
LexResult lex_expression(std::string_view source, std::uint32_t begin, std::uint32_t end);

// Returns the end offset of the string literal starting at `pos` (prefix
// included), or 0 when it is unterminated.
std::uint32_t scan_string(std::string_view source, std::uint32_t pos, std::uint32_t limit);

// Length of the string prefix (r, b, f, rb, ...) at `pos` if a quote follows
// it directly, else -1.
int string_prefix_length(std::string_view source, std::uint32_t pos, std::uint32_t limit);

bool is_hard_keyword(std::string_view word);

}  // namespace asc::syntax_detail
