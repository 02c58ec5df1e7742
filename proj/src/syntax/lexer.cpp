#include "lexer.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace asc::syntax_detail {

namespace {

constexpr std::array<std::string_view, 35> kHardKeywords = {
    "False", "None",   "True",    "and",      "as",     "assert", "async", "await", "break",
    "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",    "while",  "with",  "yield",
};

// Longest first so that greedy matching picks "**=" over "**" over "*".
constexpr std::array<std::string_view, 48> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "<>",
    "+=",  "-=",  "*=",  "/=",  "%=",  "&=", "|=", "^=", "@=", "+",  "-",  "*",  "/",  "%",  "@",  "&",
    "|",   "^",   "~",   "<",   ">",   "(",  ")",  "[",  "]",  "{",  "}",  ",",  ":",  ";",  ".",  "=",
};

bool is_ident_start(unsigned char c) { return c == '_' || std::isalpha(c) || c >= 0x80; }
bool is_ident_char(unsigned char c) { return is_ident_start(c) || std::isdigit(c); }

// Length of one UTF-8 scalar starting at `pos`, clamped to the input.
std::uint32_t utf8_len(std::string_view s, std::uint32_t pos) {
  const auto c = static_cast<unsigned char>(s[pos]);
  std::uint32_t n = 1;
  if (c >= 0xF0) n = 4;
  else if (c >= 0xE0) n = 3;
  else if (c >= 0xC0) n = 2;
  return std::min<std::uint32_t>(n, static_cast<std::uint32_t>(s.size()) - pos);
}

class Lexer {
 public:
  Lexer(std::string_view src, std::uint32_t begin, std::uint32_t end, bool module_mode)
      : src_(src), pos_(begin), end_(end), module_mode_(module_mode) {}

  LexResult run() {
    if (module_mode_) {
      run_module();
    } else {
      depth_ = 1;
      while (skip_inline_space(), pos_ < end_) lex_one();
    }
    push(TokKind::EndMarker, end_, end_);
    return std::move(out_);
  }

 private:
  void push(TokKind kind, std::uint32_t start, std::uint32_t end) {
    out_.tokens.push_back(Token{kind, start, end, src_.substr(start, end - start)});
    if (kind != TokKind::Indent && kind != TokKind::Dedent) line_has_tokens_ = kind != TokKind::Newline;
  }

  char at(std::uint32_t p) const { return p < end_ ? src_[p] : '\0'; }

  void skip_inline_space() {
    while (pos_ < end_) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f' || c == '\r' || c == '\v') {
        ++pos_;
      } else if (c == '\\' && (at(pos_ + 1) == '\n' || (at(pos_ + 1) == '\r' && at(pos_ + 2) == '\n'))) {
        std::uint32_t e = pos_ + (at(pos_ + 1) == '\n' ? 2 : 3);
        out_.extras.push_back(Extra{"line_continuation", pos_, e});
        pos_ = e;
      } else if (c == '\n' && (!module_mode_ || depth_ > 0)) {
        ++pos_;
      } else if (c == '#') {
        std::uint32_t e = pos_;
        while (e < end_ && src_[e] != '\n') ++e;
        // A trailing '\r' belongs to the line ending, not the comment.
        std::uint32_t ce = e;
        if (ce > pos_ && src_[ce - 1] == '\r') --ce;
        out_.extras.push_back(Extra{"comment", pos_, ce});
        pos_ = e;
      } else {
        break;
      }
    }
  }

  // Measures indentation of the line starting at pos_. Returns false when
  // the line is blank or comment-only, in which case it has been consumed.
  bool measure_indent(std::uint32_t& column) {
    column = 0;
    while (pos_ < end_) {
      char c = src_[pos_];
      if (c == ' ') {
        ++column;
      } else if (c == '\t') {
        column = (column / 8 + 1) * 8;
      } else if (c == '\f') {
        column = 0;
      } else {
        break;
      }
      ++pos_;
    }
    if (pos_ >= end_) return false;
    char c = src_[pos_];
    if (c == '\r' || c == '\n' || c == '#') {
      skip_inline_space();
      if (pos_ < end_ && src_[pos_] == '\n') ++pos_;
      return false;
    }
    return true;
  }

  void run_module() {
    std::vector<std::uint32_t> indents{0};
    bool at_line_start = true;
    while (true) {
      if (at_line_start && depth_ == 0) {
        std::uint32_t column = 0;
        if (!measure_indent(column)) {
          if (pos_ >= end_) break;
          continue;
        }
        at_line_start = false;
        if (column > indents.back()) {
          indents.push_back(column);
          push(TokKind::Indent, pos_, pos_);
        } else if (column < indents.back()) {
          while (column < indents.back()) {
            indents.pop_back();
            push(TokKind::Dedent, pos_, pos_);
          }
          if (column != indents.back()) {
            // Dedent to a column that matches no enclosing block.
            push(TokKind::Error, pos_, pos_);
            indents.push_back(column);
          }
        }
      }
      skip_inline_space();
      if (pos_ >= end_) break;
      if (src_[pos_] == '\n') {
        if (line_has_tokens_) push(TokKind::Newline, pos_, pos_);
        ++pos_;
        at_line_start = true;
        continue;
      }
      lex_one();
    }
    if (line_has_tokens_) push(TokKind::Newline, end_, end_);
    while (indents.size() > 1) {
      indents.pop_back();
      push(TokKind::Dedent, end_, end_);
    }
  }

  void lex_one() {
    const std::uint32_t start = pos_;
    const auto c = static_cast<unsigned char>(src_[pos_]);

    if (int plen = string_prefix_length(src_, pos_, end_); plen >= 0) {
      std::uint32_t e = scan_string(src_, pos_, end_);
      if (e == 0) {
        // Unterminated: the rest of the line (or input, for triple quotes)
        // becomes one error token.
        std::uint32_t stop = pos_;
        while (stop < end_ && src_[stop] != '\n') ++stop;
        const std::uint32_t q = pos_ + static_cast<std::uint32_t>(plen);
        if (q + 2 < end_ && src_[q + 1] == src_[q] && src_[q + 2] == src_[q]) stop = end_;
        push(TokKind::Error, start, stop);
        pos_ = stop;
      } else {
        push(TokKind::String, start, e);
        pos_ = e;
      }
      return;
    }
    if (is_ident_start(c)) {
      while (pos_ < end_ && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      push(TokKind::Name, start, pos_);
      return;
    }
    if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(at(pos_ + 1))))) {
      lex_number();
      push(TokKind::Number, start, pos_);
      return;
    }
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, std::min<std::size_t>(op.size(), end_ - pos_)) == op) {
        pos_ += static_cast<std::uint32_t>(op.size());
        if (op == "(" || op == "[" || op == "{") ++depth_;
        if ((op == ")" || op == "]" || op == "}") && depth_ > 0) --depth_;
        push(TokKind::Op, start, pos_);
        return;
      }
    }
    if (c == '!') {
      // Only meaningful as an f-string conversion marker.
      ++pos_;
      push(TokKind::Op, start, pos_);
      return;
    }
    pos_ += utf8_len(src_, pos_);
    push(TokKind::Error, start, pos_);
  }

  void lex_number() {
    auto digit_run = [&](auto pred) {
      while (pos_ < end_ && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    };
    if (src_[pos_] == '0' && pos_ + 1 < end_ && std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
      pos_ += 2;
      digit_run([](unsigned char ch) { return std::isxdigit(ch) != 0; });
      while (pos_ < end_ && (src_[pos_] == 'l' || src_[pos_] == 'L')) ++pos_;
      return;
    }
    auto is_dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
    digit_run(is_dec);
    if (at(pos_) == '.') {
      ++pos_;
      digit_run(is_dec);
    }
    if (at(pos_) == 'e' || at(pos_) == 'E') {
      std::uint32_t save = pos_;
      ++pos_;
      if (at(pos_) == '+' || at(pos_) == '-') ++pos_;
      if (std::isdigit(static_cast<unsigned char>(at(pos_)))) {
        digit_run(is_dec);
      } else {
        pos_ = save;
      }
    }
    if (at(pos_) == 'j' || at(pos_) == 'J' || at(pos_) == 'l' || at(pos_) == 'L') ++pos_;
  }

  std::string_view src_;
  std::uint32_t pos_;
  std::uint32_t end_;
  bool module_mode_;
  int depth_ = 0;
  bool line_has_tokens_ = false;
  LexResult out_;
};

}  // namespace

bool is_hard_keyword(std::string_view word) {
  return std::find(kHardKeywords.begin(), kHardKeywords.end(), word) != kHardKeywords.end();
}

int string_prefix_length(std::string_view s, std::uint32_t pos, std::uint32_t limit) {
  int n = 0;
  bool seen_r = false, seen_b = false, seen_f = false, seen_u = false;
  while (pos + n < limit && n < 3) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[pos + n])));
    if (c == '\'' || c == '"') return n;
    if (c == 'r' && !seen_r && !seen_u) {
      seen_r = true;
    } else if (c == 'b' && !seen_b && !seen_f && !seen_u) {
      seen_b = true;
    } else if ((c == 'f' || c == 't') && !seen_f && !seen_b && !seen_u) {
      seen_f = true;
    } else if (c == 'u' && n == 0) {
      seen_u = true;
    } else {
      return -1;
    }
    ++n;
  }
  if (pos + n < limit && (s[pos + n] == '\'' || s[pos + n] == '"')) return n;
  return -1;
}

std::uint32_t scan_string(std::string_view s, std::uint32_t pos, std::uint32_t limit) {
  const int plen = string_prefix_length(s, pos, limit);
  if (plen < 0) return 0;
  bool is_f = false;
  for (int k = 0; k < plen; ++k) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[pos + k])));
    if (c == 'f' || c == 't') is_f = true;
  }
  std::uint32_t p = pos + static_cast<std::uint32_t>(plen);
  const char q = s[p];
  const bool triple = p + 2 < limit && s[p + 1] == q && s[p + 2] == q;
  const std::uint32_t qlen = triple ? 3 : 1;
  p += qlen;
  int brace = 0;
  while (p < limit) {
    char c = s[p];
    if (brace == 0) {
      if (c == '\\') {
        p += 2;
        continue;
      }
      if (c == q && (!triple || (p + 2 < limit && s[p + 1] == q && s[p + 2] == q))) return p + qlen;
      if (c == '\n' && !triple) return 0;
      if (is_f && c == '{') {
        if (p + 1 < limit && s[p + 1] == '{') {
          p += 2;
          continue;
        }
        ++brace;
      }
      ++p;
      continue;
    }
    // Inside a replacement field: nested literals may reuse the quote.
    if (string_prefix_length(s, p, limit) >= 0 && (p == 0 || !is_ident_char(static_cast<unsigned char>(s[p - 1])))) {
      std::uint32_t e = scan_string(s, p, limit);
      if (e == 0) return 0;
      p = e;
      continue;
    }
    if (c == '{') ++brace;
    else if (c == '}') --brace;
    else if (c == '\n' && !triple) return 0;
    ++p;
  }
  return 0;
}

LexResult lex_module(std::string_view source) {
  return Lexer(source, 0, static_cast<std::uint32_t>(source.size()), true).run();
}

LexResult lex_expression(std::string_view source, std::uint32_t begin, std::uint32_t end) {
  return Lexer(source, begin, end, false).run();
}

}  // namespace asc::syntax_detail
