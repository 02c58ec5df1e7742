// Recursive-descent Python parser producing tree-sitter-python shaped trees.
//
// Statement-level error recovery: when a statement cannot be parsed, its
// logical line is wrapped in an ERROR node (leaves preserved) and parsing
// resumes at the next line. An unexpected indented region is folded into the
// preceding ERROR node, or into a fresh one.

#include <algorithm>
#include <cctype>
#include <cstring>
#include <string>
#include <utility>

#include "asc/corpus.hpp"
#include "asc/error.hpp"
#include "asc/syntax.hpp"
#include "lexer.hpp"

namespace asc {

namespace {

using syntax_detail::Extra;
using syntax_detail::LexResult;
using syntax_detail::TokKind;
using syntax_detail::Token;

struct PNode {
  std::string type;
  bool named = true;
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  std::vector<PNode> kids;
};

struct SyntaxFailure {
  std::uint32_t offset;
};

PNode leaf(std::string type, bool named, std::uint32_t start, std::uint32_t end) {
  return PNode{std::move(type), named, start, end, {}};
}

PNode leaf(std::string type, bool named, const Token& t) { return leaf(std::move(type), named, t.start, t.end); }

PNode node(std::string type, std::vector<PNode> kids) {
  PNode n{std::move(type), true, 0, 0, std::move(kids)};
  if (!n.kids.empty()) {
    n.start = n.kids.front().start;
    n.end = n.kids.back().end;
  }
  return n;
}

bool is_pattern_type(const std::string& t) {
  return t == "identifier" || t == "attribute" || t == "subscript" || t == "list_splat_pattern" ||
         t == "tuple_pattern" || t == "list_pattern" || t == "pattern_list";
}

PNode parse_string_literal(std::string_view src, const Token& tok);

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> toks) : src_(src), toks_(std::move(toks)) {}

  std::vector<PNode> parse_module() {
    std::vector<PNode> kids;
    while (peek().kind != TokKind::EndMarker) {
      if (peek().kind == TokKind::Dedent) {
        ++i_;
        continue;
      }
      statement_into(kids);
    }
    return kids;
  }

  // Whole-input expression used for f-string replacement fields.
  std::vector<PNode> parse_field_expression() {
    std::vector<PNode> out;
    if (at_kw("yield")) {
      out.push_back(parse_yield());
    } else {
      auto items = parse_star_items(/*allow_named=*/true);
      out.push_back(items.size() == 1 ? std::move(items.front()) : node("expression_list", std::move(items)));
    }
    if (peek().kind != TokKind::EndMarker) fail();
    return out;
  }

 private:
  // ---- token access ------------------------------------------------------

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }

  [[noreturn]] void fail() const { throw SyntaxFailure{peek().start}; }

  bool is_op(const Token& t, std::string_view op) const { return t.kind == TokKind::Op && t.text == op; }
  bool is_kw(const Token& t, std::string_view kw) const { return t.kind == TokKind::Name && t.text == kw; }
  bool at_op(std::string_view op, std::size_t k = 0) const { return is_op(peek(k), op); }
  bool at_kw(std::string_view kw, std::size_t k = 0) const { return is_kw(peek(k), kw); }

  bool at_identifier(std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokKind::Name && !syntax_detail::is_hard_keyword(t.text);
  }

  PNode take_op(std::string_view op) {
    if (!at_op(op)) fail();
    return leaf(std::string(op), false, toks_[i_++]);
  }

  // Anonymous leaf typed by the current token's own text.
  PNode take_current() {
    const Token& t = toks_[i_++];
    return leaf(std::string(t.text), false, t);
  }

  PNode take_kw(std::string_view kw) {
    if (!at_kw(kw)) fail();
    return leaf(std::string(kw), false, toks_[i_++]);
  }

  PNode take_identifier() {
    if (!at_identifier()) fail();
    return leaf("identifier", true, toks_[i_++]);
  }

  void take_newline() {
    if (peek().kind != TokKind::Newline) fail();
    ++i_;
  }

  // ---- recovery ----------------------------------------------------------

  PNode token_leaf(const Token& t) const {
    switch (t.kind) {
      case TokKind::Name:
        if (t.text == "True") return leaf("true", true, t);
        if (t.text == "False") return leaf("false", true, t);
        if (t.text == "None") return leaf("none", true, t);
        if (syntax_detail::is_hard_keyword(t.text)) return leaf(std::string(t.text), false, t);
        return leaf("identifier", true, t);
      case TokKind::Number:
        return leaf(number_type(t.text), true, t);
      case TokKind::String:
        try {
          return parse_string_literal(src_, t);
        } catch (const SyntaxFailure&) {
          return leaf(std::string(kErrorNodeType), true, t);
        }
      case TokKind::Op:
        if (t.text == "...") return leaf("ellipsis", true, t);
        return leaf(std::string(t.text), false, t);
      default:
        return leaf(std::string(kErrorNodeType), true, t);
    }
  }

  void statement_into(std::vector<PNode>& out) {
    if (peek().kind == TokKind::Indent) {
      ++i_;
      std::vector<PNode> body;
      while (peek().kind != TokKind::Dedent && peek().kind != TokKind::EndMarker) statement_into(body);
      if (peek().kind == TokKind::Dedent) ++i_;
      if (body.empty()) return;
      if (!out.empty() && out.back().type == kErrorNodeType) {
        PNode& err = out.back();
        for (auto& b : body) err.kids.push_back(std::move(b));
        err.end = err.kids.back().end;
      } else {
        out.push_back(node(std::string(kErrorNodeType), std::move(body)));
      }
      return;
    }
    if (peek().kind == TokKind::Newline) {
      ++i_;
      return;
    }
    const std::size_t save = i_;
    std::vector<PNode> parsed;
    try {
      parse_statement(parsed);
      for (auto& p : parsed) out.push_back(std::move(p));
      return;
    } catch (const SyntaxFailure&) {
      i_ = save;
    }
    std::vector<PNode> leaves;
    while (peek().kind != TokKind::Newline && peek().kind != TokKind::EndMarker &&
           peek().kind != TokKind::Indent && peek().kind != TokKind::Dedent) {
      leaves.push_back(token_leaf(toks_[i_++]));
    }
    if (peek().kind == TokKind::Newline) ++i_;
    if (leaves.empty()) {
      // Zero-width failure point (e.g. a stray dedent marker).
      const Token& t = peek();
      out.push_back(leaf(std::string(kErrorNodeType), true, t.start, t.start));
      if (t.kind != TokKind::EndMarker && i_ == save) ++i_;
      return;
    }
    out.push_back(node(std::string(kErrorNodeType), std::move(leaves)));
  }

  // ---- statements --------------------------------------------------------

  void parse_statement(std::vector<PNode>& out) {
    const bool async_prefix = at_kw("async") && (at_kw("def", 1) || at_kw("for", 1) || at_kw("with", 1));
    const std::size_t k = async_prefix ? 1 : 0;
    if (at_kw("def", k)) return out.push_back(parse_function_definition());
    if (at_kw("for", k)) return out.push_back(parse_for_statement());
    if (at_kw("with", k)) return out.push_back(parse_with_statement());
    if (at_kw("class")) return out.push_back(parse_class_definition());
    if (at_kw("if")) return out.push_back(parse_if_statement());
    if (at_kw("while")) return out.push_back(parse_while_statement());
    if (at_kw("try")) return out.push_back(parse_try_statement());
    if (at_op("@")) return out.push_back(parse_decorated_definition());
    if (at_kw("match")) {
      const std::size_t save = i_;
      try {
        out.push_back(parse_match_statement());
        return;
      } catch (const SyntaxFailure&) {
        i_ = save;
      }
    }
    parse_simple_statements(out);
  }

  void parse_simple_statements(std::vector<PNode>& out) {
    while (true) {
      out.push_back(parse_simple_statement());
      if (!at_op(";")) break;
      out.push_back(take_op(";"));
      if (peek().kind == TokKind::Newline) break;
    }
    take_newline();
  }

  PNode parse_simple_statement() {
    const Token& t = peek();
    if (t.kind == TokKind::Name) {
      if (t.text == "pass") return leaf("pass_statement", true, toks_[i_++]);
      if (t.text == "break") return leaf("break_statement", true, toks_[i_++]);
      if (t.text == "continue") return leaf("continue_statement", true, toks_[i_++]);
      if (t.text == "return") {
        std::vector<PNode> k{take_kw("return")};
        if (!at_simple_end()) k.push_back(parse_expressions());
        return node("return_statement", std::move(k));
      }
      if (t.text == "del") {
        std::vector<PNode> k{take_kw("del")};
        k.push_back(parse_expressions());
        return node("delete_statement", std::move(k));
      }
      if (t.text == "raise") {
        std::vector<PNode> k{take_kw("raise")};
        if (!at_simple_end()) {
          k.push_back(parse_expressions());
          if (at_kw("from")) {
            k.push_back(take_kw("from"));
            k.push_back(parse_expression());
          }
        }
        return node("raise_statement", std::move(k));
      }
      if (t.text == "global" || t.text == "nonlocal") {
        const std::string kw(t.text);
        std::vector<PNode> k{take_kw(kw)};
        k.push_back(take_identifier());
        while (at_op(",")) {
          k.push_back(take_op(","));
          k.push_back(take_identifier());
        }
        return node(kw + "_statement", std::move(k));
      }
      if (t.text == "assert") {
        std::vector<PNode> k{take_kw("assert")};
        k.push_back(parse_expression());
        if (at_op(",")) {
          k.push_back(take_op(","));
          k.push_back(parse_expression());
        }
        return node("assert_statement", std::move(k));
      }
      if (t.text == "import") return parse_import_statement();
      if (t.text == "from") return parse_import_from_statement();
      if (t.text == "type" && at_identifier(1) && (at_op("=", 2) || at_op("[", 2))) return parse_type_alias();
    }
    return parse_expression_statement();
  }

  bool at_simple_end() const { return peek().kind == TokKind::Newline || at_op(";"); }

  PNode parse_dotted_name() {
    std::vector<PNode> k{take_identifier()};
    while (at_op(".") && at_identifier(1)) {
      k.push_back(take_op("."));
      k.push_back(take_identifier());
    }
    return node("dotted_name", std::move(k));
  }

  PNode parse_import_item() {
    PNode name = parse_dotted_name();
    if (!at_kw("as")) return name;
    std::vector<PNode> k{std::move(name), take_kw("as"), take_identifier()};
    return node("aliased_import", std::move(k));
  }

  PNode parse_import_statement() {
    std::vector<PNode> k{take_kw("import")};
    k.push_back(parse_import_item());
    while (at_op(",")) {
      k.push_back(take_op(","));
      k.push_back(parse_import_item());
    }
    return node("import_statement", std::move(k));
  }

  PNode parse_import_from_statement() {
    std::vector<PNode> k{take_kw("from")};
    bool future = false;
    if (at_op(".") || at_op("...")) {
      std::vector<PNode> dots;
      while (at_op(".") || at_op("...")) {
        const std::string op(peek().text);
        dots.push_back(take_op(op));
      }
      std::vector<PNode> rel{node("import_prefix", std::move(dots))};
      if (at_identifier()) rel.push_back(parse_dotted_name());
      k.push_back(node("relative_import", std::move(rel)));
    } else if (at_identifier() && peek().text == "__future__" && !at_op(".", 1)) {
      k.push_back(leaf("__future__", false, toks_[i_++]));
      future = true;
    } else {
      k.push_back(parse_dotted_name());
    }
    k.push_back(take_kw("import"));
    if (at_op("*")) {
      if (future) fail();
      k.push_back(leaf("wildcard_import", true, toks_[i_++]));
    } else {
      const bool paren = at_op("(");
      if (paren) k.push_back(take_op("("));
      k.push_back(parse_import_item());
      while (at_op(",")) {
        k.push_back(take_op(","));
        if (paren && at_op(")")) break;
        k.push_back(parse_import_item());
      }
      if (paren) k.push_back(take_op(")"));
    }
    return node(future ? "future_import_statement" : "import_from_statement", std::move(k));
  }

  PNode parse_type_alias() {
    std::vector<PNode> k{leaf("type", false, toks_[i_++])};
    std::vector<PNode> left{take_identifier()};
    if (at_op("[")) {
      PNode name = std::move(left.front());
      left.clear();
      left.push_back(node("generic_type", {std::move(name), parse_type_parameter()}));
    }
    k.push_back(node("type", std::move(left)));
    k.push_back(take_op("="));
    k.push_back(parse_type());
    return node("type_alias_statement", std::move(k));
  }

  static bool is_augmented_op(const Token& t) {
    static constexpr std::string_view ops[] = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                               ">>=", "<<=", "&=", "^=", "|=", "@="};
    if (t.kind != TokKind::Op) return false;
    return std::find(std::begin(ops), std::end(ops), t.text) != std::end(ops);
  }

  PNode parse_right_hand_side() {
    if (at_kw("yield")) return parse_yield();
    auto items = parse_star_items(false);
    if (items.size() == 1) return std::move(items.front());
    return node("expression_list", std::move(items));
  }

  PNode parse_expression_statement() {
    if (at_kw("yield")) return node("expression_statement", {parse_yield()});
    auto items = parse_star_items(/*allow_named=*/true);
    const bool single = items.size() == 1;

    if (at_op("=")) {
      std::vector<PNode> chain;
      chain.push_back(single ? std::move(items.front()) : node("expression_list", std::move(items)));
      std::vector<PNode> eqs;
      while (at_op("=")) {
        eqs.push_back(take_op("="));
        chain.push_back(parse_right_hand_side());
      }
      PNode right = std::move(chain.back());
      for (std::size_t j = chain.size() - 1; j-- > 0;) {
        right = node("assignment", {to_pattern(std::move(chain[j])), std::move(eqs[j]), std::move(right)});
      }
      return node("expression_statement", {std::move(right)});
    }
    if (at_op(":") && single) {
      std::vector<PNode> k{to_pattern(std::move(items.front())), take_op(":"), parse_type()};
      if (at_op("=")) {
        k.push_back(take_op("="));
        k.push_back(parse_right_hand_side());
      }
      return node("expression_statement", {node("assignment", std::move(k))});
    }
    if (is_augmented_op(peek())) {
      PNode left = to_pattern(single ? std::move(items.front()) : node("expression_list", std::move(items)));
      PNode op = take_current();
      return node("expression_statement",
                  {node("augmented_assignment", {std::move(left), std::move(op), parse_right_hand_side()})});
    }
    for (const PNode& it : items) {
      if (it.type == "list_splat" && single) fail();
    }
    return node("expression_statement", std::move(items));
  }

  PNode parse_block_suite() {
    if (peek().kind == TokKind::Newline) {
      ++i_;
      if (peek().kind != TokKind::Indent) fail();
      ++i_;
      std::vector<PNode> body;
      while (peek().kind != TokKind::Dedent && peek().kind != TokKind::EndMarker) statement_into(body);
      if (peek().kind == TokKind::Dedent) ++i_;
      if (body.empty()) fail();
      return node("block", std::move(body));
    }
    std::vector<PNode> body;
    parse_simple_statements(body);
    return node("block", std::move(body));
  }

  PNode parse_function_definition() {
    std::vector<PNode> k;
    if (at_kw("async")) k.push_back(take_kw("async"));
    k.push_back(take_kw("def"));
    k.push_back(take_identifier());
    if (at_op("[")) k.push_back(parse_type_parameter());
    k.push_back(parse_parameters());
    if (at_op("->")) {
      k.push_back(take_op("->"));
      k.push_back(parse_type());
    }
    k.push_back(take_op(":"));
    k.push_back(parse_block_suite());
    return node("function_definition", std::move(k));
  }

  PNode parse_type_parameter() {
    std::vector<PNode> k{take_op("[")};
    k.push_back(parse_type());
    while (at_op(",")) {
      k.push_back(take_op(","));
      if (at_op("]")) break;
      k.push_back(parse_type());
    }
    k.push_back(take_op("]"));
    return node("type_parameter", std::move(k));
  }

  PNode parse_class_definition() {
    std::vector<PNode> k{take_kw("class"), take_identifier()};
    if (at_op("[")) k.push_back(parse_type_parameter());
    if (at_op("(")) k.push_back(parse_call_arguments(/*allow_generator=*/false));
    k.push_back(take_op(":"));
    k.push_back(parse_block_suite());
    return node("class_definition", std::move(k));
  }

  PNode parse_decorated_definition() {
    std::vector<PNode> k;
    while (at_op("@")) {
      std::vector<PNode> d{take_op("@"), parse_expression()};
      take_newline();
      k.push_back(node("decorator", std::move(d)));
    }
    if (at_kw("class")) {
      k.push_back(parse_class_definition());
    } else if (at_kw("def") || (at_kw("async") && at_kw("def", 1))) {
      k.push_back(parse_function_definition());
    } else {
      fail();
    }
    return node("decorated_definition", std::move(k));
  }

  PNode parse_if_statement() {
    std::vector<PNode> k{take_kw("if"), parse_expression(), take_op(":"), parse_block_suite()};
    while (at_kw("elif")) {
      std::vector<PNode> e{take_kw("elif"), parse_expression(), take_op(":"), parse_block_suite()};
      k.push_back(node("elif_clause", std::move(e)));
    }
    if (at_kw("else")) k.push_back(parse_else_clause());
    return node("if_statement", std::move(k));
  }

  PNode parse_else_clause() {
    std::vector<PNode> e{take_kw("else"), take_op(":"), parse_block_suite()};
    return node("else_clause", std::move(e));
  }

  PNode parse_while_statement() {
    std::vector<PNode> k{take_kw("while"), parse_expression(), take_op(":"), parse_block_suite()};
    if (at_kw("else")) k.push_back(parse_else_clause());
    return node("while_statement", std::move(k));
  }

  PNode parse_for_statement() {
    std::vector<PNode> k;
    if (at_kw("async")) k.push_back(take_kw("async"));
    k.push_back(take_kw("for"));
    k.push_back(parse_targets());
    k.push_back(take_kw("in"));
    k.push_back(parse_expressions());
    k.push_back(take_op(":"));
    k.push_back(parse_block_suite());
    if (at_kw("else")) k.push_back(parse_else_clause());
    return node("for_statement", std::move(k));
  }

  PNode parse_try_statement() {
    std::vector<PNode> k{take_kw("try"), take_op(":"), parse_block_suite()};
    bool handled = false;
    while (at_kw("except")) {
      handled = true;
      const bool group = at_op("*", 1) && peek(1).start == peek().end;
      std::vector<PNode> e;
      if (group) {
        const Token& ex = toks_[i_];
        const Token& star = toks_[i_ + 1];
        e.push_back(leaf("except*", false, ex.start, star.end));
        i_ += 2;
      } else {
        e.push_back(take_kw("except"));
      }
      if (!at_op(":")) {
        e.push_back(parse_expression());
        if (at_kw("as")) {
          e.push_back(take_kw("as"));
          e.push_back(parse_expression());
        }
      }
      e.push_back(take_op(":"));
      e.push_back(parse_block_suite());
      k.push_back(node(group ? "except_group_clause" : "except_clause", std::move(e)));
    }
    if (handled && at_kw("else")) k.push_back(parse_else_clause());
    if (at_kw("finally")) {
      handled = true;
      std::vector<PNode> f{take_kw("finally"), take_op(":"), parse_block_suite()};
      k.push_back(node("finally_clause", std::move(f)));
    }
    if (!handled) fail();
    return node("try_statement", std::move(k));
  }

  PNode parse_with_item() {
    PNode value = parse_expression();
    if (!at_kw("as")) return node("with_item", {std::move(value)});
    PNode as = take_kw("as");
    PNode target = node("as_pattern_target", {to_pattern(parse_target_item())});
    return node("with_item", {node("as_pattern", {std::move(value), std::move(as), std::move(target)})});
  }

  PNode parse_with_clause() {
    if (at_op("(")) {
      const std::size_t save = i_;
      try {
        std::vector<PNode> k{take_op("(")};
        k.push_back(parse_with_item());
        bool multi = false;
        while (at_op(",")) {
          k.push_back(take_op(","));
          if (at_op(")")) break;
          k.push_back(parse_with_item());
          multi = true;
        }
        k.push_back(take_op(")"));
        const bool has_as = std::any_of(k.begin(), k.end(), [](const PNode& n) {
          return n.type == "with_item" && n.kids.front().type == "as_pattern";
        });
        if (at_op(":") && (multi || has_as)) return node("with_clause", std::move(k));
      } catch (const SyntaxFailure&) {
      }
      i_ = save;
    }
    std::vector<PNode> k{parse_with_item()};
    while (at_op(",")) {
      k.push_back(take_op(","));
      k.push_back(parse_with_item());
    }
    return node("with_clause", std::move(k));
  }

  PNode parse_with_statement() {
    std::vector<PNode> k;
    if (at_kw("async")) k.push_back(take_kw("async"));
    k.push_back(take_kw("with"));
    k.push_back(parse_with_clause());
    k.push_back(take_op(":"));
    k.push_back(parse_block_suite());
    return node("with_statement", std::move(k));
  }

  // ---- match statements ----------------------------------------------------

  PNode parse_match_statement() {
    std::vector<PNode> k{leaf("match", false, toks_[i_++])};
    k.push_back(parse_expression());
    while (at_op(",")) {
      k.push_back(take_op(","));
      if (at_op(":")) break;
      k.push_back(parse_expression());
    }
    k.push_back(take_op(":"));
    take_newline();
    if (peek().kind != TokKind::Indent) fail();
    ++i_;
    std::vector<PNode> cases;
    while (peek().kind != TokKind::Dedent && peek().kind != TokKind::EndMarker) {
      if (!(peek().kind == TokKind::Name && peek().text == "case")) fail();
      cases.push_back(parse_case_clause());
    }
    if (peek().kind == TokKind::Dedent) ++i_;
    if (cases.empty()) fail();
    k.push_back(node("block", std::move(cases)));
    return node("match_statement", std::move(k));
  }

  PNode parse_case_clause() {
    std::vector<PNode> k{leaf("case", false, toks_[i_++])};
    k.push_back(parse_case_pattern());
    while (at_op(",")) {
      k.push_back(take_op(","));
      if (at_op(":") || at_kw("if")) break;
      k.push_back(parse_case_pattern());
    }
    if (at_kw("if")) k.push_back(node("if_clause", {take_kw("if"), parse_expression()}));
    k.push_back(take_op(":"));
    k.push_back(parse_block_suite());
    return node("case_clause", std::move(k));
  }

  PNode parse_case_pattern() {
    PNode p = parse_union_pattern();
    PNode wrapped = node("case_pattern", {std::move(p)});
    if (at_kw("as")) {
      std::vector<PNode> k{std::move(wrapped), take_kw("as"), take_identifier()};
      return node("case_pattern", {node("as_pattern", std::move(k))});
    }
    return wrapped;
  }

  PNode parse_union_pattern() {
    PNode first = parse_closed_pattern();
    if (!at_op("|")) return first;
    std::vector<PNode> k{std::move(first)};
    while (at_op("|")) {
      k.push_back(take_op("|"));
      k.push_back(parse_closed_pattern());
    }
    return node("union_pattern", std::move(k));
  }

  PNode parse_pattern_sequence(std::string_view open, std::string_view close, std::string type) {
    std::vector<PNode> k{take_op(open)};
    while (!at_op(close)) {
      k.push_back(parse_case_pattern());
      if (!at_op(",")) break;
      k.push_back(take_op(","));
    }
    k.push_back(take_op(close));
    return node(std::move(type), std::move(k));
  }

  PNode parse_closed_pattern() {
    const Token& t = peek();
    if (t.kind == TokKind::Name && t.text == "_") return leaf("_", false, toks_[i_++]);
    if (at_op("*")) {
      std::vector<PNode> k{take_op("*")};
      k.push_back(peek().text == "_" ? leaf("_", false, toks_[i_++]) : take_identifier());
      return node("splat_pattern", std::move(k));
    }
    if (at_op("[")) return parse_pattern_sequence("[", "]", "list_pattern");
    if (at_op("(")) return parse_pattern_sequence("(", ")", "tuple_pattern");
    if (at_op("{")) {
      std::vector<PNode> k{take_op("{")};
      while (!at_op("}")) {
        if (at_op("**")) {
          k.push_back(node("splat_pattern", {take_op("**"), take_identifier()}));
        } else {
          k.push_back(parse_closed_pattern());
          k.push_back(take_op(":"));
          k.push_back(parse_case_pattern());
        }
        if (!at_op(",")) break;
        k.push_back(take_op(","));
      }
      k.push_back(take_op("}"));
      return node("dict_pattern", std::move(k));
    }
    if (t.kind == TokKind::String) return parse_strings();
    if (t.kind == TokKind::Number || at_op("-")) {
      std::vector<PNode> k;
      if (at_op("-")) k.push_back(take_op("-"));
      if (peek().kind != TokKind::Number) fail();
      k.push_back(token_leaf(toks_[i_++]));
      if (at_op("+") || at_op("-")) {
        const std::string op(peek().text);
        k.push_back(take_op(op));
        if (peek().kind != TokKind::Number) fail();
        k.push_back(token_leaf(toks_[i_++]));
        return node("complex_pattern", std::move(k));
      }
      if (k.size() == 1) return std::move(k.front());
      return node("complex_pattern", std::move(k));
    }
    if (t.kind == TokKind::Name && (t.text == "None" || t.text == "True" || t.text == "False")) {
      return token_leaf(toks_[i_++]);
    }
    if (at_identifier()) {
      PNode name = parse_dotted_name();
      if (!at_op("(")) return name;
      std::vector<PNode> k{std::move(name), take_op("(")};
      while (!at_op(")")) {
        if (at_identifier() && at_op("=", 1)) {
          std::vector<PNode> kw{take_identifier(), take_op("=")};
          kw.push_back(parse_union_pattern());
          k.push_back(node("keyword_pattern", std::move(kw)));
        } else {
          k.push_back(parse_case_pattern());
        }
        if (!at_op(",")) break;
        k.push_back(take_op(","));
      }
      k.push_back(take_op(")"));
      return node("class_pattern", std::move(k));
    }
    fail();
  }

  // ---- parameters --------------------------------------------------------

  PNode parse_parameter(bool annotations) {
    if (at_op("/")) return leaf("positional_separator", true, toks_[i_++]);
    if (at_op("*") && (at_op(",", 1) || at_op(")", 1) || at_op(":", 1))) {
      return leaf("keyword_separator", true, toks_[i_++]);
    }
    PNode base;
    if (at_op("*") || at_op("**")) {
      const bool dict = at_op("**");
      PNode star = take_op(dict ? "**" : "*");
      base = node(dict ? "dictionary_splat_pattern" : "list_splat_pattern", {std::move(star), take_identifier()});
    } else {
      base = take_identifier();
    }
    const bool plain = base.type == "identifier";
    if (annotations && at_op(":")) {
      std::vector<PNode> k{std::move(base), take_op(":"), parse_type()};
      if (plain && at_op("=")) {
        k.push_back(take_op("="));
        k.push_back(parse_expression());
        return node("typed_default_parameter", std::move(k));
      }
      return node("typed_parameter", std::move(k));
    }
    if (plain && at_op("=")) {
      std::vector<PNode> k{std::move(base), take_op("=")};
      k.push_back(parse_expression());
      return node("default_parameter", std::move(k));
    }
    return base;
  }

  void parse_parameter_list(std::vector<PNode>& k, bool annotations, std::string_view close) {
    while (!at_op(close)) {
      k.push_back(parse_parameter(annotations));
      if (!at_op(",")) break;
      k.push_back(take_op(","));
    }
  }

  PNode parse_parameters() {
    std::vector<PNode> k{take_op("(")};
    parse_parameter_list(k, true, ")");
    k.push_back(take_op(")"));
    return node("parameters", std::move(k));
  }

  // ---- types -------------------------------------------------------------

  PNode to_type(PNode e) {
    if (e.type == "binary_operator" && e.kids.size() == 3 && e.kids[1].type == "|") {
      PNode op = std::move(e.kids[1]);
      return node("type", {node("union_type", {to_type(std::move(e.kids[0])), std::move(op),
                                               to_type(std::move(e.kids[2]))})});
    }
    if (e.type == "subscript" && (e.kids.front().type == "identifier" || e.kids.front().type == "attribute")) {
      bool simple = true;
      for (const PNode& c : e.kids) simple = simple && c.type != "slice";
      if (simple) {
        std::vector<PNode> params;
        for (std::size_t j = 1; j < e.kids.size(); ++j) {
          PNode& c = e.kids[j];
          if (!c.named) {
            params.push_back(std::move(c));
          } else {
            params.push_back(to_type(std::move(c)));
          }
        }
        return node("type", {node("generic_type", {std::move(e.kids.front()), node("type_parameter", std::move(params))})});
      }
    }
    return node("type", {std::move(e)});
  }

  PNode parse_type() {
    if (at_op("*") || at_op("**")) {
      const bool dict = at_op("**");
      PNode star = take_op(dict ? "**" : "*");
      return node("type", {node("splat_type", {std::move(star), take_identifier()})});
    }
    return to_type(parse_expression());
  }

  // ---- expressions -------------------------------------------------------

  PNode to_pattern(PNode e) {
    if (e.type == "identifier" || e.type == "attribute" || e.type == "subscript") return e;
    if (e.type == "list_splat") {
      e.type = "list_splat_pattern";
      e.kids[1] = to_pattern(std::move(e.kids[1]));
      return e;
    }
    if (e.type == "tuple" || e.type == "list" || e.type == "expression_list") {
      for (PNode& c : e.kids) {
        if (c.named) c = to_pattern(std::move(c));
      }
      e.type = e.type == "tuple" ? "tuple_pattern" : e.type == "list" ? "list_pattern" : "pattern_list";
      return e;
    }
    if (e.type == "parenthesized_expression" && e.kids.size() == 3) {
      e.kids[1] = to_pattern(std::move(e.kids[1]));
      return e;
    }
    if (is_pattern_type(e.type)) return e;
    throw SyntaxFailure{e.start};
  }

  // Target list for `for` statements and comprehensions: stops before `in`.
  PNode parse_target_item() {
    if (at_op("*")) {
      PNode star = take_op("*");
      return node("list_splat", {std::move(star), parse_bitor()});
    }
    return parse_bitor();
  }

  PNode parse_targets() {
    std::vector<PNode> items{parse_target_item()};
    bool trailing = false;
    while (at_op(",")) {
      items.push_back(take_op(","));
      if (at_kw("in")) {
        trailing = true;
        break;
      }
      items.push_back(parse_target_item());
    }
    if (items.size() == 1 && !trailing) return to_pattern(std::move(items.front()));
    return to_pattern(node("expression_list", std::move(items)));
  }

  // Comma-separated expressions, returned flat with their commas.
  std::vector<PNode> parse_star_items(bool allow_named) {
    std::vector<PNode> items;
    auto item = [&]() -> PNode {
      if (at_op("*")) {
        PNode star = take_op("*");
        return node("list_splat", {std::move(star), parse_bitor()});
      }
      return allow_named ? parse_named_expression() : parse_expression();
    };
    items.push_back(item());
    while (at_op(",")) {
      items.push_back(take_op(","));
      if (!starts_expression()) break;
      items.push_back(item());
    }
    return items;
  }

  bool starts_expression() const {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Name:
        if (!syntax_detail::is_hard_keyword(t.text)) return true;
        return t.text == "not" || t.text == "lambda" || t.text == "await" || t.text == "True" ||
               t.text == "False" || t.text == "None";
      case TokKind::Number:
      case TokKind::String:
        return true;
      case TokKind::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "...";
      default:
        return false;
    }
  }

  PNode parse_expressions() {
    auto items = parse_star_items(false);
    if (items.size() == 1 && items.front().type != "list_splat") return std::move(items.front());
    return node("expression_list", std::move(items));
  }

  PNode parse_named_expression() {
    if (at_identifier() && at_op(":=", 1)) {
      std::vector<PNode> k{take_identifier(), take_op(":=")};
      k.push_back(parse_expression());
      return node("named_expression", std::move(k));
    }
    return parse_expression();
  }

  PNode parse_expression(bool allow_conditional = true) {
    if (at_kw("lambda")) return parse_lambda(allow_conditional);
    if (at_identifier() && at_op(":=", 1)) return parse_named_expression();
    PNode e = parse_disjunction();
    if (allow_conditional && at_kw("if")) {
      std::vector<PNode> k{std::move(e), take_kw("if"), parse_disjunction(), take_kw("else")};
      k.push_back(parse_expression());
      return node("conditional_expression", std::move(k));
    }
    return e;
  }

  PNode parse_lambda(bool allow_conditional) {
    std::vector<PNode> k{take_kw("lambda")};
    if (!at_op(":")) {
      std::vector<PNode> params;
      parse_parameter_list(params, false, ":");
      k.push_back(node("lambda_parameters", std::move(params)));
    }
    k.push_back(take_op(":"));
    k.push_back(parse_expression(allow_conditional));
    return node("lambda", std::move(k));
  }

  PNode parse_disjunction() {
    PNode left = parse_conjunction();
    while (at_kw("or")) {
      PNode op = take_kw("or");
      left = node("boolean_operator", {std::move(left), std::move(op), parse_conjunction()});
    }
    return left;
  }

  PNode parse_conjunction() {
    PNode left = parse_inversion();
    while (at_kw("and")) {
      PNode op = take_kw("and");
      left = node("boolean_operator", {std::move(left), std::move(op), parse_inversion()});
    }
    return left;
  }

  PNode parse_inversion() {
    if (at_kw("not")) {
      PNode op = take_kw("not");
      return node("not_operator", {std::move(op), parse_inversion()});
    }
    return parse_comparison();
  }

  bool take_comparison_op(std::vector<PNode>& k) {
    const Token& t = peek();
    if (t.kind == TokKind::Op) {
      static constexpr std::string_view ops[] = {"<", ">", "==", ">=", "<=", "!=", "<>"};
      if (std::find(std::begin(ops), std::end(ops), t.text) == std::end(ops)) return false;
      k.push_back(leaf(std::string(t.text), false, toks_[i_++]));
      return true;
    }
    if (at_kw("in")) {
      k.push_back(take_kw("in"));
      return true;
    }
    if (at_kw("not") && at_kw("in", 1)) {
      k.push_back(leaf("not in", false, peek().start, peek(1).end));
      i_ += 2;
      return true;
    }
    if (at_kw("is")) {
      if (at_kw("not", 1)) {
        k.push_back(leaf("is not", false, peek().start, peek(1).end));
        i_ += 2;
      } else {
        k.push_back(take_kw("is"));
      }
      return true;
    }
    return false;
  }

  PNode parse_comparison() {
    PNode first = parse_bitor();
    std::vector<PNode> k{std::move(first)};
    while (take_comparison_op(k)) k.push_back(parse_bitor());
    if (k.size() == 1) return std::move(k.front());
    return node("comparison_operator", std::move(k));
  }

  template <typename Next>
  PNode parse_binary_level(std::initializer_list<std::string_view> ops, Next next) {
    PNode left = (this->*next)();
    while (true) {
      const Token& t = peek();
      if (t.kind != TokKind::Op || std::find(ops.begin(), ops.end(), t.text) == ops.end()) break;
      PNode op = leaf(std::string(t.text), false, toks_[i_++]);
      left = node("binary_operator", {std::move(left), std::move(op), (this->*next)()});
    }
    return left;
  }

  PNode parse_bitor() { return parse_binary_level({"|"}, &Parser::parse_bitxor); }
  PNode parse_bitxor() { return parse_binary_level({"^"}, &Parser::parse_bitand); }
  PNode parse_bitand() { return parse_binary_level({"&"}, &Parser::parse_shift); }
  PNode parse_shift() { return parse_binary_level({"<<", ">>"}, &Parser::parse_arith); }
  PNode parse_arith() { return parse_binary_level({"+", "-"}, &Parser::parse_term); }
  PNode parse_term() { return parse_binary_level({"*", "/", "//", "%", "@"}, &Parser::parse_factor); }

  PNode parse_factor() {
    if (at_op("-") || at_op("+") || at_op("~")) {
      PNode op = take_current();
      return node("unary_operator", {std::move(op), parse_factor()});
    }
    return parse_power();
  }

  PNode parse_power() {
    PNode base = parse_await();
    if (at_op("**")) {
      PNode op = take_op("**");
      return node("binary_operator", {std::move(base), std::move(op), parse_factor()});
    }
    return base;
  }

  PNode parse_await() {
    if (at_kw("await")) {
      PNode kw = take_kw("await");
      return node("await", {std::move(kw), parse_primary()});
    }
    return parse_primary();
  }

  PNode parse_primary() {
    PNode e = parse_atom();
    while (true) {
      if (at_op(".")) {
        PNode dot = take_op(".");
        e = node("attribute", {std::move(e), std::move(dot), take_identifier()});
      } else if (at_op("(")) {
        e = node("call", {std::move(e), parse_call_arguments(true)});
      } else if (at_op("[")) {
        e = parse_subscript(std::move(e));
      } else {
        return e;
      }
    }
  }

  PNode parse_argument() {
    if (at_op("*")) {
      PNode star = take_op("*");
      return node("list_splat", {std::move(star), parse_expression()});
    }
    if (at_op("**")) {
      PNode star = take_op("**");
      return node("dictionary_splat", {std::move(star), parse_expression()});
    }
    if (at_identifier() && at_op("=", 1)) {
      std::vector<PNode> k{take_identifier(), take_op("=")};
      k.push_back(parse_expression());
      return node("keyword_argument", std::move(k));
    }
    return parse_named_expression();
  }

  PNode parse_call_arguments(bool allow_generator) {
    std::vector<PNode> k{take_op("(")};
    if (at_op(")")) {
      k.push_back(take_op(")"));
      return node("argument_list", std::move(k));
    }
    k.push_back(parse_argument());
    if (allow_generator && at_comprehension()) {
      parse_comprehension_clauses(k);
      k.push_back(take_op(")"));
      return node("generator_expression", std::move(k));
    }
    while (at_op(",")) {
      k.push_back(take_op(","));
      if (at_op(")")) break;
      k.push_back(parse_argument());
    }
    k.push_back(take_op(")"));
    return node("argument_list", std::move(k));
  }

  PNode parse_subscript(PNode value) {
    std::vector<PNode> k{std::move(value), take_op("[")};
    while (true) {
      k.push_back(parse_slice_or_expression());
      if (!at_op(",")) break;
      k.push_back(take_op(","));
      if (at_op("]")) break;
    }
    k.push_back(take_op("]"));
    return node("subscript", std::move(k));
  }

  PNode parse_slice_or_expression() {
    std::vector<PNode> k;
    if (!at_op(":")) {
      PNode e = parse_named_expression();
      if (!at_op(":")) return e;
      k.push_back(std::move(e));
    }
    k.push_back(take_op(":"));
    if (!at_op(":") && !at_op("]") && !at_op(",")) k.push_back(parse_expression());
    if (at_op(":")) {
      k.push_back(take_op(":"));
      if (!at_op("]") && !at_op(",")) k.push_back(parse_expression());
    }
    return node("slice", std::move(k));
  }

  bool at_comprehension() const { return at_kw("for") || (at_kw("async") && at_kw("for", 1)); }

  void parse_comprehension_clauses(std::vector<PNode>& k) {
    while (true) {
      if (at_comprehension()) {
        std::vector<PNode> c;
        if (at_kw("async")) c.push_back(take_kw("async"));
        c.push_back(take_kw("for"));
        c.push_back(parse_targets());
        c.push_back(take_kw("in"));
        c.push_back(parse_expression(false));
        while (at_op(",") && !at_op("]", 1) && !at_op(")", 1) && !at_op("}", 1)) {
          c.push_back(take_op(","));
          c.push_back(parse_expression(false));
        }
        k.push_back(node("for_in_clause", std::move(c)));
      } else if (at_kw("if")) {
        std::vector<PNode> c{take_kw("if"), parse_expression(false)};
        k.push_back(node("if_clause", std::move(c)));
      } else {
        return;
      }
    }
  }

  PNode parse_collection_item() {
    if (at_op("*")) {
      PNode star = take_op("*");
      return node("list_splat", {std::move(star), parse_bitor()});
    }
    return parse_named_expression();
  }

  // Shared tail for ( ... ) and [ ... ] displays after the first element.
  void parse_collection_rest(std::vector<PNode>& k, std::string_view close) {
    while (at_op(",")) {
      k.push_back(take_op(","));
      if (at_op(close)) break;
      k.push_back(parse_collection_item());
    }
    k.push_back(take_op(close));
  }

  PNode parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Name: {
        if (t.text == "True" || t.text == "False" || t.text == "None") return token_leaf(toks_[i_++]);
        if (syntax_detail::is_hard_keyword(t.text)) fail();
        return leaf("identifier", true, toks_[i_++]);
      }
      case TokKind::Number:
        return token_leaf(toks_[i_++]);
      case TokKind::String:
        return parse_strings();
      case TokKind::Op:
        break;
      default:
        fail();
    }
    if (at_op("...")) return leaf("ellipsis", true, toks_[i_++]);
    if (at_op("(")) {
      std::vector<PNode> k{take_op("(")};
      if (at_op(")")) {
        k.push_back(take_op(")"));
        return node("tuple", std::move(k));
      }
      if (at_kw("yield")) {
        k.push_back(parse_yield());
        k.push_back(take_op(")"));
        return node("parenthesized_expression", std::move(k));
      }
      k.push_back(parse_collection_item());
      if (at_comprehension()) {
        parse_comprehension_clauses(k);
        k.push_back(take_op(")"));
        return node("generator_expression", std::move(k));
      }
      if (at_op(")")) {
        if (k.back().type == "list_splat") fail();
        k.push_back(take_op(")"));
        return node("parenthesized_expression", std::move(k));
      }
      parse_collection_rest(k, ")");
      return node("tuple", std::move(k));
    }
    if (at_op("[")) {
      std::vector<PNode> k{take_op("[")};
      if (at_op("]")) {
        k.push_back(take_op("]"));
        return node("list", std::move(k));
      }
      k.push_back(parse_collection_item());
      if (at_comprehension()) {
        parse_comprehension_clauses(k);
        k.push_back(take_op("]"));
        return node("list_comprehension", std::move(k));
      }
      parse_collection_rest(k, "]");
      return node("list", std::move(k));
    }
    if (at_op("{")) return parse_brace_display();
    fail();
  }

  PNode parse_dict_item() {
    if (at_op("**")) {
      PNode star = take_op("**");
      return node("dictionary_splat", {std::move(star), parse_bitor()});
    }
    PNode key = parse_expression();
    PNode colon = take_op(":");
    return node("pair", {std::move(key), std::move(colon), parse_expression()});
  }

  PNode parse_brace_display() {
    std::vector<PNode> k{take_op("{")};
    if (at_op("}")) {
      k.push_back(take_op("}"));
      return node("dictionary", std::move(k));
    }
    bool is_dict = at_op("**");
    PNode first;
    if (is_dict) {
      first = parse_dict_item();
    } else {
      first = parse_collection_item();
      if (at_op(":") && first.type != "list_splat") {
        is_dict = true;
        PNode colon = take_op(":");
        first = node("pair", {std::move(first), std::move(colon), parse_expression()});
      }
    }
    k.push_back(std::move(first));
    if (at_comprehension()) {
      if (k.back().type == "dictionary_splat" || k.back().type == "list_splat") fail();
      parse_comprehension_clauses(k);
      k.push_back(take_op("}"));
      return node(is_dict ? "dictionary_comprehension" : "set_comprehension", std::move(k));
    }
    while (at_op(",")) {
      k.push_back(take_op(","));
      if (at_op("}")) break;
      k.push_back(is_dict ? parse_dict_item() : parse_collection_item());
    }
    k.push_back(take_op("}"));
    return node(is_dict ? "dictionary" : "set", std::move(k));
  }

  PNode parse_strings() {
    std::vector<PNode> parts;
    while (peek().kind == TokKind::String) parts.push_back(parse_string_literal(src_, toks_[i_++]));
    if (parts.size() == 1) return std::move(parts.front());
    return node("concatenated_string", std::move(parts));
  }

  PNode parse_yield() {
    std::vector<PNode> k{take_kw("yield")};
    if (at_kw("from")) {
      k.push_back(take_kw("from"));
      k.push_back(parse_expression());
    } else if (starts_expression()) {
      k.push_back(parse_expressions());
    }
    return node("yield", std::move(k));
  }

  static std::string number_type(std::string_view text) {
    if (text.size() > 1 && text[0] == '0' && std::strchr("xXoObB", text[1]) != nullptr) return "integer";
    for (char c : text) {
      if (c == '.' || c == 'e' || c == 'E') return "float";
    }
    return "integer";
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

// ---- string literals -------------------------------------------------------

std::uint32_t escape_length(std::string_view s, std::uint32_t p, std::uint32_t limit) {
  // s[p] == '\\'
  if (p + 1 >= limit) return 0;
  const char c = s[p + 1];
  auto count_while = [&](std::uint32_t from, std::uint32_t max, auto pred) {
    std::uint32_t n = 0;
    while (n < max && from + n < limit && pred(static_cast<unsigned char>(s[from + n]))) ++n;
    return n;
  };
  switch (c) {
    case '\n':
    case '\\':
    case '\'':
    case '"':
    case 'a':
    case 'b':
    case 'f':
    case 'n':
    case 'r':
    case 't':
    case 'v':
      return 2;
    case '\r':
      return (p + 2 < limit && s[p + 2] == '\n') ? 3 : 2;
    case 'x':
      return count_while(p + 2, 2, [](unsigned char ch) { return std::isxdigit(ch) != 0; }) == 2 ? 4 : 0;
    case 'u':
      return count_while(p + 2, 4, [](unsigned char ch) { return std::isxdigit(ch) != 0; }) == 4 ? 6 : 0;
    case 'U':
      return count_while(p + 2, 8, [](unsigned char ch) { return std::isxdigit(ch) != 0; }) == 8 ? 10 : 0;
    case 'N': {
      if (p + 2 >= limit || s[p + 2] != '{') return 0;
      std::uint32_t q = p + 3;
      while (q < limit && s[q] != '}' && s[q] != '\n') ++q;
      return (q < limit && s[q] == '}' && q > p + 3) ? q + 1 - p : 0;
    }
    default:
      if (c >= '0' && c <= '7') {
        return 1 + count_while(p + 1, 3, [](unsigned char ch) { return ch >= '0' && ch <= '7'; });
      }
      return 0;
  }
}

class StringBuilder {
 public:
  StringBuilder(std::string_view src, bool raw, bool fstring) : src_(src), raw_(raw), fstring_(fstring) {}

  // Scans literal content in [p, limit) appending string_content and
  // interpolation nodes to `out`. In format-spec mode only interpolations
  // are emitted, literal spec text is not a node.
  void scan(std::uint32_t p, std::uint32_t limit, std::vector<PNode>& out, bool spec_mode) {
    std::uint32_t content_start = p;
    std::vector<PNode> content_kids;
    auto flush = [&](std::uint32_t upto) {
      if (!spec_mode && upto > content_start) {
        PNode c{"string_content", true, content_start, upto, std::move(content_kids)};
        out.push_back(std::move(c));
      }
      content_kids.clear();
    };
    while (p < limit) {
      const char c = src_[p];
      if (c == '\\' && !spec_mode) {
        if (raw_) {
          p += 2;
          continue;
        }
        std::uint32_t len = escape_length(src_, p, limit);
        if (len > 0) {
          content_kids.push_back(leaf("escape_sequence", true, p, p + len));
          p += len;
        } else {
          p += 2;
        }
        continue;
      }
      if (fstring_ && (c == '{' || c == '}')) {
        if (p + 1 < limit && src_[p + 1] == c) {
          if (!spec_mode) content_kids.push_back(leaf("escape_interpolation", true, p, p + 2));
          p += 2;
          continue;
        }
        if (c == '}') throw SyntaxFailure{p};
        flush(p);
        p = parse_interpolation(p, limit, out);
        content_start = p;
        continue;
      }
      ++p;
    }
    flush(limit);
  }

 private:
  // Returns the offset just past the closing '}'.
  std::uint32_t parse_interpolation(std::uint32_t open, std::uint32_t limit, std::vector<PNode>& out) {
    std::vector<PNode> k{leaf("{", false, open, open + 1)};
    std::uint32_t p = open + 1;
    int depth = 0;
    std::uint32_t expr_end = 0;
    while (p < limit) {
      const char c = src_[p];
      if (syntax_detail::string_prefix_length(src_, p, limit) >= 0 &&
          (p == open + 1 || !(std::isalnum(static_cast<unsigned char>(src_[p - 1])) || src_[p - 1] == '_'))) {
        std::uint32_t e = syntax_detail::scan_string(src_, p, limit);
        if (e == 0) throw SyntaxFailure{p};
        p = e;
        continue;
      }
      if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if (c == ')' || c == ']' || (c == '}' && depth > 0)) {
        --depth;
      } else if (depth == 0) {
        if (c == '}' || c == ':' || (c == '!' && (p + 1 >= limit || src_[p + 1] != '='))) {
          expr_end = p;
          break;
        }
        if (c == '=' && p + 1 < limit && src_[p + 1] != '=' && src_[p - 1] != '=' && src_[p - 1] != '!' &&
            src_[p - 1] != '<' && src_[p - 1] != '>' && src_[p - 1] != ':') {
          std::uint32_t q = p + 1;
          while (q < limit && src_[q] == ' ') ++q;
          if (q < limit && (src_[q] == '}' || src_[q] == '!' || src_[q] == ':')) {
            expr_end = p;
            break;
          }
        }
      }
      ++p;
    }
    if (expr_end == 0) throw SyntaxFailure{open};

    LexResult lexed = syntax_detail::lex_expression(src_, open + 1, expr_end);
    for (const Token& t : lexed.tokens) {
      if (t.kind == TokKind::Error) throw SyntaxFailure{t.start};
    }
    if (lexed.tokens.size() <= 1) throw SyntaxFailure{open};
    Parser sub(src_, std::move(lexed.tokens));
    for (PNode& e : sub.parse_field_expression()) k.push_back(std::move(e));

    p = expr_end;
    if (src_[p] == '=') {
      k.push_back(leaf("=", false, p, p + 1));
      ++p;
      while (p < limit && src_[p] == ' ') ++p;
    }
    if (p < limit && src_[p] == '!') {
      if (p + 1 >= limit || !std::isalpha(static_cast<unsigned char>(src_[p + 1]))) throw SyntaxFailure{p};
      k.push_back(leaf("type_conversion", true, p, p + 2));
      p += 2;
    }
    if (p < limit && src_[p] == ':') {
      // Format spec runs to the matching '}' and may nest replacement fields.
      std::uint32_t q = p + 1;
      int nest = 0;
      while (q < limit && (nest > 0 || src_[q] != '}')) {
        if (src_[q] == '{') ++nest;
        if (src_[q] == '}') --nest;
        ++q;
      }
      if (q >= limit) throw SyntaxFailure{p};
      std::vector<PNode> spec{leaf(":", false, p, p + 1)};
      scan(p + 1, q, spec, /*spec_mode=*/true);
      PNode fs{"format_specifier", true, p, q, std::move(spec)};
      k.push_back(std::move(fs));
      p = q;
    }
    if (p >= limit || src_[p] != '}') throw SyntaxFailure{p};
    k.push_back(leaf("}", false, p, p + 1));
    out.push_back(node("interpolation", std::move(k)));
    return p + 1;
  }

  std::string_view src_;
  bool raw_;
  bool fstring_;
};

PNode parse_string_literal(std::string_view src, const Token& tok) {
  const int plen = syntax_detail::string_prefix_length(src, tok.start, tok.end);
  if (plen < 0) throw SyntaxFailure{tok.start};
  bool raw = false, fstring = false;
  for (int k = 0; k < plen; ++k) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(src[tok.start + k])));
    if (c == 'r') raw = true;
    if (c == 'f' || c == 't') fstring = true;
  }
  const std::uint32_t q = tok.start + static_cast<std::uint32_t>(plen);
  const bool triple = q + 2 < tok.end && src[q + 1] == src[q] && src[q + 2] == src[q] && tok.end - q >= 6;
  const std::uint32_t qlen = triple ? 3 : 1;
  const std::uint32_t content_begin = q + qlen;
  const std::uint32_t content_end = tok.end - qlen;

  std::vector<PNode> k{leaf("string_start", true, tok.start, content_begin)};
  StringBuilder(src, raw, fstring).scan(content_begin, content_end, k, false);
  k.push_back(leaf("string_end", true, content_end, tok.end));
  return node("string", std::move(k));
}

// ---- extras and flattening -------------------------------------------------

void insert_extra(PNode& parent, PNode extra) {
  for (PNode& child : parent.kids) {
    if (!child.kids.empty() && child.start <= extra.start && extra.end <= child.end && child.type != "string") {
      insert_extra(child, std::move(extra));
      return;
    }
  }
  auto pos = std::find_if(parent.kids.begin(), parent.kids.end(),
                          [&](const PNode& c) { return c.start >= extra.end; });
  parent.kids.insert(pos, std::move(extra));
}

void flatten(PNode& n, NodeId parent, std::uint32_t depth, std::vector<SyntaxNode>& out) {
  const auto id = static_cast<NodeId>(out.size());
  SyntaxNode sn;
  sn.node_type = std::move(n.type);
  sn.start_byte = n.start;
  sn.end_byte = n.end;
  sn.is_named = n.named;
  sn.parent = parent;
  sn.depth = depth;
  out.push_back(std::move(sn));
  std::vector<NodeId> kids;
  kids.reserve(n.kids.size());
  for (PNode& c : n.kids) {
    kids.push_back(static_cast<NodeId>(out.size()));
    flatten(c, id, depth + 1, out);
  }
  out[id].children = std::move(kids);
}

}  // namespace

SyntaxTree parse(std::string_view source) {
  if (auto bad = find_invalid_utf8(source)) throw EncodingError(*bad, "source is not valid UTF-8");
  if (source.size() > UINT32_MAX) throw Error("source too large");

  LexResult lexed = syntax_detail::lex_module(source);
  std::vector<Extra> extras = std::move(lexed.extras);
  Parser parser(source, std::move(lexed.tokens));

  PNode root{"module", true, 0, static_cast<std::uint32_t>(source.size()), parser.parse_module()};
  for (const Extra& e : extras) {
    insert_extra(root, leaf(std::string(e.node_type), true, e.start, e.end));
  }

  std::vector<SyntaxNode> nodes;
  flatten(root, 0, 0, nodes);
  return SyntaxTree(std::string(source), std::move(nodes));
}

}  // namespace asc
