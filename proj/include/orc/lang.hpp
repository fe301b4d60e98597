#pragma once

// The .orc layout language: AST, lexer, parser with error recovery,
// canonical printer, and lowering to a LayoutProblem.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "model.hpp"
#include "patterns.hpp"

namespace orc::lang {

/// 1-based line and column; length in bytes.
struct Span {
  int line = 0, column = 0, length = 0;
  int offset = 0;  // byte offset of the first character

  // Spans never take part in structural equality.
  bool operator==(const Span&) const { return true; }
};

struct Diagnostic {
  std::string message;
  Span span;
  std::optional<ErrorCode> code;
};

/// Error raised by lower(), carrying the source span of the culprit.
class SourceError : public Error {
 public:
  SourceError(ErrorCode code, const std::string& message, Span span, std::vector<std::string> labels = {})
      : Error(code, message, std::move(labels)), span_(span) {}
  const Span& span() const { return span_; }

 private:
  Span span_;
};

// ---------------------------------------------------------------------------
// AST

struct WidgetDecl {
  std::string id;
  std::optional<Size> min, pref, max;
  std::optional<Priority> priority;
  Span span;
  bool operator==(const WidgetDecl&) const = default;
};

struct Value {
  enum class Kind { ident, number, rect, list };
  Kind kind = Kind::ident;
  std::string ident;
  double number = 0;
  patterns::Box rect;
  std::vector<std::string> list;
  Span span;
  std::vector<Span> list_spans;
  bool operator==(const Value& o) const {
    return kind == o.kind && ident == o.ident && number == o.number && rect == o.rect && list == o.list;
  }
};

struct Arg {
  std::string name;
  Value value;
  Span span;
  bool operator==(const Arg&) const = default;
};

struct PatternDecl {
  std::string kind;  // surface keyword, e.g. "hflow"
  std::vector<Arg> args;
  Span span;
  bool operator==(const PatternDecl&) const = default;

  const Arg* find(std::string_view name) const {
    for (const auto& a : args)
      if (a.name == name) return &a;
    return nullptr;
  }
};

enum class Edge { left, top, width, height, right, bottom };

struct Ref {
  std::string widget;
  Edge edge = Edge::left;
  Span span;
  bool operator==(const Ref&) const = default;
};

/// NUM, NUM*ref, or ref, with the sign written before it.
struct Term {
  bool negative = false;
  std::optional<double> coef;
  std::optional<Ref> ref;
  Span span;
  bool operator==(const Term&) const = default;
};

struct Expr {
  std::vector<Term> terms;
  bool operator==(const Expr&) const = default;
};

enum class RelOp { eq, le, ge, lt, gt };

struct FormulaNode {
  enum class Kind { atom, conj, disj, negation };
  Kind kind = Kind::atom;
  Expr lhs, rhs;
  RelOp rel = RelOp::eq;
  std::vector<FormulaNode> kids;
  Span span;
  bool operator==(const FormulaNode&) const = default;
};

struct ConstraintDecl {
  bool hard = true;
  double weight = 0;
  FormulaNode formula;
  Span span, weight_span;
  bool operator==(const ConstraintDecl&) const = default;
};

struct Document {
  std::string name;
  std::optional<Viewport> window;
  std::vector<WidgetDecl> widgets;
  std::vector<PatternDecl> patterns;
  std::vector<ConstraintDecl> constraints;
  bool operator==(const Document&) const = default;

  const WidgetDecl* find_widget(std::string_view id) const {
    for (const auto& w : widgets)
      if (w.id == id) return &w;
    return nullptr;
  }
};

struct ParseResult {
  std::optional<Document> document;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return document.has_value() && diagnostics.empty(); }
};

inline const char* to_string(Edge e) {
  switch (e) {
    case Edge::left: return "left";
    case Edge::top: return "top";
    case Edge::width: return "width";
    case Edge::height: return "height";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
  }
  return "?";
}

inline std::optional<Edge> edge_from(std::string_view s) {
  for (Edge e : {Edge::left, Edge::top, Edge::width, Edge::height, Edge::right, Edge::bottom})
    if (s == to_string(e)) return e;
  return std::nullopt;
}

inline const char* to_string(RelOp r) {
  switch (r) {
    case RelOp::eq: return "==";
    case RelOp::le: return "<=";
    case RelOp::ge: return ">=";
    case RelOp::lt: return "<";
    case RelOp::gt: return ">";
  }
  return "?";
}

inline std::optional<Priority> priority_from(std::string_view s) {
  for (Priority p : {Priority::high, Priority::medium, Priority::low})
    if (s == orc::to_string(p)) return p;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Pattern argument schema

struct ArgSpec {
  const char* name;
  unsigned kinds;  // bit per Value::Kind
  bool required;
  bool repeatable;
  bool widget_refs;  // identifiers name widgets (else widgets or `root`)
};

inline constexpr unsigned kIdent = 1u << static_cast<unsigned>(Value::Kind::ident);
inline constexpr unsigned kNumber = 1u << static_cast<unsigned>(Value::Kind::number);
inline constexpr unsigned kRect = 1u << static_cast<unsigned>(Value::Kind::rect);
inline constexpr unsigned kList = 1u << static_cast<unsigned>(Value::Kind::list);

struct PatternSpec {
  const char* keyword;
  patterns::Kind kind;
  std::vector<ArgSpec> args;
};

inline const std::vector<PatternSpec>& pattern_specs() {
  static const std::vector<PatternSpec> specs = [] {
    using K = patterns::Kind;
    const ArgSpec items{"items", kList, true, false, true};
    const ArgSpec container{"container", kIdent | kRect, false, false, false};
    const ArgSpec label{"label", kIdent, false, false, false};
    return std::vector<PatternSpec>{
        {"hflow", K::flow_h, {items, container, label}},
        {"vflow", K::flow_v, {items, container, label}},
        {"eitherflow", K::flow_either, {items, container, label}},
        {"rotate_group", K::rotation_group, {{"group", kIdent, true, false, true}, items, label}},
        {"equalize", K::cross_cut_equalize, {{"group", kList, true, true, true}, label}},
        {"connected",
         K::connected_flow,
         {items, {"top", kIdent | kRect, true, false, false}, {"left", kIdent | kRect, true, false, false}, label}},
        {"balanced", K::balanced_flow, {items, container, label}},
        {"alt_positions",
         K::alt_positions,
         {{"item", kIdent, true, false, true}, {"slot", kIdent | kRect, true, true, false}, label}},
        {"alt_widgets",
         K::alt_widgets,
         {{"primary", kIdent, true, false, true}, {"fallback", kIdent, true, false, true}, label}},
        {"optional", K::optional_widget,
         {{"item", kIdent, true, false, true}, {"priority", kIdent, false, false, false}, label}},
        {"flow_around", K::flow_around_fixed, {items, {"fixed", kRect, true, false, false}, container, label}},
    };
  }();
  return specs;
}

inline const PatternSpec* pattern_spec(std::string_view keyword) {
  for (const auto& s : pattern_specs())
    if (keyword == s.keyword) return &s;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

struct Token {
  enum class Kind { end, ident, number, string, punct, bad };
  Kind kind = Kind::end;
  std::string text;  // identifier, punctuation, or decoded string
  double number = 0;
  Span span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run(std::vector<Diagnostic>& diags) {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.span = here();
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (is_alpha(c)) {
        std::size_t b = pos_;
        while (pos_ < src_.size() && (is_alpha(src_[pos_]) || is_digit(src_[pos_]))) advance();
        t.kind = Token::Kind::ident;
        t.text = std::string(src_.substr(b, pos_ - b));
      } else if (is_digit(c)) {
        std::size_t b = pos_;
        while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && is_digit(src_[pos_ + 1])) {
          advance();
          while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
        }
        t.kind = Token::Kind::number;
        t.text = std::string(src_.substr(b, pos_ - b));
        t.number = std::strtod(t.text.c_str(), nullptr);
        if (!std::isfinite(t.number)) {
          diags.push_back({"number out of range", finish(t.span), std::nullopt});
          t.kind = Token::Kind::bad;
        }
        // "50x20": the x is a separator, not the start of an identifier
        if (pos_ + 1 < src_.size() && src_[pos_] == 'x' && is_digit(src_[pos_ + 1])) {
          out.push_back(finished(t));
          Token x;
          x.span = here();
          x.kind = Token::Kind::punct;
          x.text = "x";
          advance();
          out.push_back(finished(x));
          continue;
        }
      } else if (c == '"') {
        lex_string(t, diags);
      } else {
        static constexpr std::string_view two[] = {"&&", "||", "==", "<=", ">="};
        t.kind = Token::Kind::punct;
        for (auto op : two)
          if (src_.substr(pos_, 2) == op) t.text = std::string(op);
        if (!t.text.empty()) {
          advance();
          advance();
        } else if (std::string_view("{}()[];:,.+-*!<>").find(c) != std::string_view::npos) {
          t.text = std::string(1, c);
          advance();
        } else {
          advance();
          t.kind = Token::Kind::bad;
          diags.push_back({"unexpected character", finish(t.span), std::nullopt});
          continue;
        }
      }
      out.push_back(finished(t));
    }
  }

 private:
  static bool is_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  Span here() const { return {line_, col_, 0, static_cast<int>(pos_)}; }
  Span finish(Span s) const {
    s.length = static_cast<int>(pos_) - s.offset;
    return s;
  }
  Token finished(Token t) const {
    t.span = finish(t.span);
    return t;
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  void lex_string(Token& t, std::vector<Diagnostic>& diags) {
    advance();
    t.kind = Token::Kind::string;
    while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
      if (src_[pos_] == '\\' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '"' || src_[pos_ + 1] == '\\'))
        advance();
      t.text += src_[pos_];
      advance();
    }
    if (pos_ < src_.size() && src_[pos_] == '"') {
      advance();
    } else {
      t.kind = Token::Kind::bad;
      diags.push_back({"unterminated string", finish(t.span), std::nullopt});
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags) : toks_(std::move(toks)), diags_(diags) {
    std::erase_if(toks_, [](const Token& t) { return t.kind == Token::Kind::bad; });
  }

  std::optional<Document> document() {
    Document doc;
    try {
      expect_word("layout");
      const Token& name = expect(Token::Kind::string, "document name");
      doc.name = name.text;
      expect_punct("{");
    } catch (const Bail&) {
      return std::nullopt;
    }
    while (!at_punct("}") && !at_end()) {
      const std::size_t start = pos_;
      try {
        item(doc);
      } catch (const Bail&) {
        recover(start);
      }
    }
    if (at_end()) {
      error("expected '}' to close the document", peek().span);
    } else {
      ++pos_;
      if (!at_end()) error("unexpected text after the document", peek().span);
    }
    return doc;
  }

 private:
  struct Bail {};
  static constexpr int kMaxDepth = 200;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::end; }
  bool at_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Token::Kind::punct && peek(k).text == p;
  }
  bool at_word(std::string_view w) const { return peek().kind == Token::Kind::ident && peek().text == w; }

  [[noreturn]] void fail(const std::string& msg) {
    error(msg, peek().span);
    throw Bail{};
  }
  void error(const std::string& msg, Span s, std::optional<ErrorCode> code = std::nullopt) {
    diags_.push_back({msg, s, code});
  }

  const Token& expect(Token::Kind k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what);
    return toks_[pos_++];
  }
  const Token& expect_punct(std::string_view p) {
    if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
    return toks_[pos_++];
  }
  const Token& expect_word(std::string_view w) {
    if (!at_word(w)) fail("expected '" + std::string(w) + "'");
    return toks_[pos_++];
  }
  double number(const char* what) { return expect(Token::Kind::number, what).number; }

  Span from(const Span& a) const {
    const Span& b = toks_[pos_ == 0 ? 0 : pos_ - 1].span;
    Span s = a;
    s.length = std::max(a.length, b.offset + b.length - a.offset);
    return s;
  }

  // Skip to the end of the broken item: a ';' or the '}' closing a block it
  // opened. Stops before the document's closing brace.
  void recover(std::size_t start) {
    if (pos_ == start) ++pos_;
    int depth = 0;
    for (std::size_t i = start; i < pos_ && i < toks_.size(); ++i) {
      if (toks_[i].kind != Token::Kind::punct) continue;
      if (toks_[i].text == "{") ++depth;
      if (toks_[i].text == "}") --depth;
    }
    while (!at_end()) {
      if (at_punct("{")) ++depth;
      if (at_punct("}")) {
        if (depth <= 0) return;
        if (--depth == 0) {
          ++pos_;
          return;
        }
      }
      if (at_punct(";") && depth <= 0) {
        ++pos_;
        return;
      }
      ++pos_;
    }
  }

  void item(Document& doc) {
    const Token& kw = peek();
    if (at_word("window")) {
      window(doc);
    } else if (at_word("widget")) {
      widget(doc);
    } else if (at_word("pattern")) {
      pattern(doc);
    } else if (at_word("constraint")) {
      constraint(doc);
    } else {
      (void)kw;
      fail("expected 'window', 'widget', 'pattern' or 'constraint'");
    }
  }

  void window(Document& doc) {
    const Span start = peek().span;
    ++pos_;
    expect_punct("{");
    expect_word("width");
    expect_punct(":");
    const double w = number("a width");
    expect_punct(";");
    expect_word("height");
    expect_punct(":");
    const double h = number("a height");
    expect_punct(";");
    expect_punct("}");
    if (doc.window) error("duplicate window block", from(start));
    doc.window = Viewport{w, h};
  }

  void widget(Document& doc) {
    const Span start = peek().span;
    ++pos_;
    WidgetDecl w;
    w.id = expect(Token::Kind::ident, "a widget name").text;
    expect_punct("{");
    while (!at_punct("}")) {
      const Token& field = expect(Token::Kind::ident, "a widget field");
      expect_punct(":");
      if (field.text == "priority") {
        const Token& p = expect(Token::Kind::ident, "high, medium or low");
        auto pr = priority_from(p.text);
        if (!pr) {
          error("priority must be high, medium or low", p.span);
          throw Bail{};
        }
        if (w.priority) error("duplicate field 'priority'", field.span);
        w.priority = pr;
      } else if (field.text == "min" || field.text == "pref" || field.text == "max") {
        Size s;
        s.w = number("a size like 50x20");
        if (at_punct("x") || at_word("x")) {
          ++pos_;
        } else {
          fail("expected 'x' in size");
        }
        s.h = number("a height");
        auto& slot = field.text == "min" ? w.min : field.text == "pref" ? w.pref : w.max;
        if (slot) error("duplicate field '" + field.text + "'", field.span);
        slot = s;
      } else {
        error("unknown widget field '" + field.text + "'", field.span);
        throw Bail{};
      }
      expect_punct(";");
    }
    ++pos_;
    w.span = from(start);
    doc.widgets.push_back(std::move(w));
  }

  Value value() {
    Value v;
    v.span = peek().span;
    if (peek().kind == Token::Kind::ident) {
      v.kind = Value::Kind::ident;
      v.ident = toks_[pos_++].text;
    } else if (peek().kind == Token::Kind::number) {
      v.kind = Value::Kind::number;
      v.number = toks_[pos_++].number;
    } else if (at_punct("(")) {
      ++pos_;
      v.kind = Value::Kind::rect;
      v.rect.left = number("a number");
      expect_punct(",");
      v.rect.top = number("a number");
      expect_punct(",");
      v.rect.width = number("a number");
      expect_punct(",");
      v.rect.height = number("a number");
      expect_punct(")");
    } else if (at_punct("[")) {
      ++pos_;
      v.kind = Value::Kind::list;
      auto element = [&] {
        const Token& t = expect(Token::Kind::ident, "a widget name");
        v.list.push_back(t.text);
        v.list_spans.push_back(t.span);
      };
      element();
      while (at_punct(",")) {
        ++pos_;
        element();
      }
      expect_punct("]");
    } else {
      fail("expected a value");
    }
    v.span = from(v.span);
    return v;
  }

  void pattern(Document& doc) {
    const Span start = peek().span;
    ++pos_;
    PatternDecl p;
    const Token& kind = expect(Token::Kind::ident, "a pattern kind");
    if (!pattern_spec(kind.text)) {
      error("unknown pattern kind '" + kind.text + "'", kind.span);
      throw Bail{};
    }
    p.kind = kind.text;
    expect_punct("(");
    if (!at_punct(")")) {
      for (;;) {
        Arg a;
        a.span = peek().span;
        a.name = expect(Token::Kind::ident, "an argument name").text;
        expect_punct(":");
        a.value = value();
        a.span = from(a.span);
        p.args.push_back(std::move(a));
        if (!at_punct(",")) break;
        ++pos_;
      }
    }
    expect_punct(")");
    expect_punct(";");
    p.span = from(start);
    doc.patterns.push_back(std::move(p));
  }

  void constraint(Document& doc) {
    ConstraintDecl c;
    c.span = peek().span;
    ++pos_;
    if (at_word("hard")) {
      ++pos_;
    } else if (at_word("soft")) {
      ++pos_;
      c.hard = false;
      expect_punct("(");
      c.weight_span = peek().span;
      const bool negative = at_punct("-");
      if (negative) ++pos_;
      c.weight = number("a weight");
      if (negative) c.weight = -c.weight;
      c.weight_span = from(c.weight_span);
      expect_punct(")");
    } else {
      fail("expected 'hard' or 'soft(N)'");
    }
    expect_punct(":");
    c.formula = formula(0);
    expect_punct(";");
    c.span = from(c.span);
    if (!c.hard && !(c.weight > 0)) error("weight must be positive", c.weight_span, ErrorCode::BadWeight);
    doc.constraints.push_back(std::move(c));
  }

  void deeper(int depth) {
    if (depth > kMaxDepth) fail("formula nested too deeply");
  }

  FormulaNode formula(int depth) {
    deeper(depth);
    const Span start = peek().span;
    FormulaNode first = conj(depth + 1);
    if (!at_punct("||")) return first;
    FormulaNode n;
    n.kind = FormulaNode::Kind::disj;
    n.kids.push_back(std::move(first));
    while (at_punct("||")) {
      ++pos_;
      n.kids.push_back(conj(depth + 1));
    }
    n.span = from(start);
    return n;
  }

  FormulaNode conj(int depth) {
    deeper(depth);
    const Span start = peek().span;
    FormulaNode first = unary(depth + 1);
    if (!at_punct("&&")) return first;
    FormulaNode n;
    n.kind = FormulaNode::Kind::conj;
    n.kids.push_back(std::move(first));
    while (at_punct("&&")) {
      ++pos_;
      n.kids.push_back(unary(depth + 1));
    }
    n.span = from(start);
    return n;
  }

  FormulaNode unary(int depth) {
    deeper(depth);
    const Span start = peek().span;
    if (at_punct("!")) {
      ++pos_;
      FormulaNode n;
      n.kind = FormulaNode::Kind::negation;
      n.kids.push_back(unary(depth + 1));
      n.span = from(start);
      return n;
    }
    if (at_punct("(")) {
      ++pos_;
      FormulaNode inner = formula(depth + 1);
      expect_punct(")");
      return inner;
    }
    FormulaNode n;
    n.lhs = expr();
    if (peek().kind != Token::Kind::punct) fail("expected a relation");
    const std::string& op = peek().text;
    if (op == "==") n.rel = RelOp::eq;
    else if (op == "<=") n.rel = RelOp::le;
    else if (op == ">=") n.rel = RelOp::ge;
    else if (op == "<") n.rel = RelOp::lt;
    else if (op == ">") n.rel = RelOp::gt;
    else fail("expected a relation");
    ++pos_;
    n.rhs = expr();
    n.span = from(start);
    return n;
  }

  Expr expr() {
    Expr e;
    bool negative = false;
    if (at_punct("-")) {
      negative = true;
      ++pos_;
    }
    e.terms.push_back(term(negative));
    while (at_punct("+") || at_punct("-")) {
      negative = at_punct("-");
      ++pos_;
      e.terms.push_back(term(negative));
    }
    return e;
  }

  Term term(bool negative) {
    Term t;
    t.negative = negative;
    t.span = peek().span;
    if (peek().kind == Token::Kind::number) {
      t.coef = toks_[pos_++].number;
      if (!at_punct("*")) {
        t.span = from(t.span);
        return t;
      }
      ++pos_;
    }
    Ref r;
    r.span = peek().span;
    r.widget = expect(Token::Kind::ident, "a number or widget reference").text;
    expect_punct(".");
    const Token& edge = expect(Token::Kind::ident, "left, top, width, height, right or bottom");
    auto e = edge_from(edge.text);
    if (!e) {
      error("unknown edge '" + edge.text + "'", edge.span);
      throw Bail{};
    }
    r.edge = *e;
    r.span = from(r.span);
    t.ref = std::move(r);
    t.span = from(t.span);
    return t;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic>& diags_;
};

inline void check_refs(const Document& doc, const FormulaNode& f, std::vector<Diagnostic>& diags) {
  if (f.kind != FormulaNode::Kind::atom) {
    for (const auto& k : f.kids) check_refs(doc, k, diags);
    return;
  }
  for (const Expr* e : {&f.lhs, &f.rhs})
    for (const auto& t : e->terms)
      if (t.ref && !doc.find_widget(t.ref->widget))
        diags.push_back({"unknown widget '" + t.ref->widget + "'", t.ref->span, ErrorCode::UnknownTargetWidget});
}

}  // namespace detail

/// Semantic checks: unique widget names, declared references, pattern
/// argument shapes.
inline std::vector<Diagnostic> validate(const Document& doc) {
  std::vector<Diagnostic> diags;
  std::set<std::string> seen;
  for (const auto& w : doc.widgets) {
    if (w.id == "root") diags.push_back({"'root' is reserved for the window", w.span, std::nullopt});
    if (!seen.insert(w.id).second)
      diags.push_back({"duplicate widget '" + w.id + "'", w.span, ErrorCode::DuplicateWidgetId});
  }
  auto known = [&](const std::string& id, bool widget_only) {
    return (!widget_only && id == "root") || doc.find_widget(id) != nullptr;
  };
  std::set<std::string> labels;
  for (const auto& p : doc.patterns) {
    const PatternSpec* spec = pattern_spec(p.kind);
    if (!spec) {
      diags.push_back({"unknown pattern kind '" + p.kind + "'", p.span, std::nullopt});
      continue;
    }
    std::map<std::string, int> count;
    for (const auto& a : p.args) {
      const ArgSpec* as = nullptr;
      for (const auto& s : spec->args)
        if (a.name == s.name) as = &s;
      if (!as) {
        diags.push_back({"unknown argument '" + a.name + "' for " + p.kind, a.span, ErrorCode::BadPatternArgs});
        continue;
      }
      if (++count[a.name] > 1 && !as->repeatable)
        diags.push_back({"duplicate argument '" + a.name + "'", a.span, ErrorCode::BadPatternArgs});
      if (!(as->kinds & (1u << static_cast<unsigned>(a.value.kind)))) {
        diags.push_back({"wrong kind of value for '" + a.name + "'", a.value.span, ErrorCode::BadPatternArgs});
        continue;
      }
      if (a.name == "priority") {
        if (!priority_from(a.value.ident))
          diags.push_back({"priority must be high, medium or low", a.value.span, ErrorCode::BadPatternArgs});
        continue;
      }
      if (a.name == "label") {
        if (!labels.insert(a.value.ident).second)
          diags.push_back({"duplicate pattern label '" + a.value.ident + "'", a.value.span,
                           ErrorCode::LabelCollision});
        continue;
      }
      std::vector<std::string> ids = a.value.kind == Value::Kind::list ? a.value.list
                                     : a.value.kind == Value::Kind::ident ? std::vector{a.value.ident}
                                                                          : std::vector<std::string>{};
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (!known(ids[i], as->widget_refs))
          diags.push_back({"unknown widget '" + ids[i] + "'",
                           i < a.value.list_spans.size() ? a.value.list_spans[i] : a.value.span,
                           ErrorCode::UnknownTargetWidget});
    }
    for (const auto& s : spec->args)
      if (s.required && !count.count(s.name))
        diags.push_back({"missing argument '" + std::string(s.name) + "' for " + p.kind, p.span,
                         ErrorCode::BadPatternArgs});
  }
  for (const auto& c : doc.constraints) detail::check_refs(doc, c.formula, diags);
  return diags;
}

/// Parses a document. Diagnostics from every broken item are reported; a
/// document is returned whenever the header parsed.
inline ParseResult parse(std::string_view text) {
  ParseResult r;
  auto toks = detail::Lexer(text).run(r.diagnostics);
  r.document = detail::Parser(std::move(toks), r.diagnostics).document();
  if (r.document && r.diagnostics.empty()) r.diagnostics = validate(*r.document);
  return r;
}

// ---------------------------------------------------------------------------
// Printer

namespace detail {

inline std::string num(double v) {
  char buf[400];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, r.ptr);
}

inline std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string size(const Size& s) { return num(s.w) + "x" + num(s.h); }

inline std::string rect(const patterns::Box& b) {
  return "(" + num(b.left) + ", " + num(b.top) + ", " + num(b.width) + ", " + num(b.height) + ")";
}

inline std::string value(const Value& v) {
  switch (v.kind) {
    case Value::Kind::ident: return v.ident;
    case Value::Kind::number: return num(v.number);
    case Value::Kind::rect: return rect(v.rect);
    case Value::Kind::list: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.list.size(); ++i) out += (i ? ", " : "") + v.list[i];
      return out + "]";
    }
  }
  return {};
}

inline std::string expr(const Expr& e) {
  std::string out;
  for (std::size_t i = 0; i < e.terms.size(); ++i) {
    const Term& t = e.terms[i];
    if (i == 0) {
      if (t.negative) out += "-";
    } else {
      out += t.negative ? " - " : " + ";
    }
    if (t.coef) out += num(*t.coef);
    if (t.coef && t.ref) out += "*";
    if (t.ref) out += t.ref->widget + "." + to_string(t.ref->edge);
  }
  return out;
}

inline int precedence(FormulaNode::Kind k) {
  switch (k) {
    case FormulaNode::Kind::disj: return 1;
    case FormulaNode::Kind::conj: return 2;
    default: return 3;
  }
}

inline std::string formula(const FormulaNode& f) {
  using K = FormulaNode::Kind;
  if (f.kind == K::atom) return expr(f.lhs) + " " + to_string(f.rel) + " " + expr(f.rhs);
  auto child = [&](const FormulaNode& k) {
    // parenthesize anything that would otherwise merge into this node
    const bool paren = f.kind == K::negation ? precedence(k.kind) < 3 : precedence(k.kind) <= precedence(f.kind);
    return paren ? "(" + formula(k) + ")" : formula(k);
  };
  if (f.kind == K::negation) return "!" + child(f.kids[0]);
  std::string out;
  for (std::size_t i = 0; i < f.kids.size(); ++i) {
    if (i) out += f.kind == K::conj ? " && " : " || ";
    out += child(f.kids[i]);
  }
  return out;
}

}  // namespace detail

/// Canonical text: window, widgets, patterns, constraints; two-space
/// indent; one declaration per line.
inline std::string print(const Document& doc) {
  std::string out = "layout " + detail::quoted(doc.name) + " {\n";
  if (doc.window)
    out += "  window { width: " + detail::num(doc.window->width) + "; height: " + detail::num(doc.window->height) +
           "; }\n";
  for (const auto& w : doc.widgets) {
    out += "  widget " + w.id + " {";
    if (w.min) out += " min: " + detail::size(*w.min) + ";";
    if (w.pref) out += " pref: " + detail::size(*w.pref) + ";";
    if (w.max) out += " max: " + detail::size(*w.max) + ";";
    if (w.priority) out += std::string(" priority: ") + orc::to_string(*w.priority) + ";";
    out += " }\n";
  }
  for (const auto& p : doc.patterns) {
    out += "  pattern " + p.kind + "(";
    for (std::size_t i = 0; i < p.args.size(); ++i)
      out += (i ? ", " : "") + p.args[i].name + ": " + detail::value(p.args[i].value);
    out += ");\n";
  }
  for (const auto& c : doc.constraints) {
    out += "  constraint ";
    out += c.hard ? "hard" : "soft(" + detail::num(c.weight) + ")";
    out += ": " + detail::formula(c.formula) + ";\n";
  }
  return out + "}\n";
}

// ---------------------------------------------------------------------------
// Lowering

/// Widget record for a declaration: missing pref falls back to min, then
/// max, then 0x0; missing min and max fall back to pref.
inline Widget widget_of(const WidgetDecl& d) {
  Widget w;
  w.id = d.id;
  w.pref = d.pref ? *d.pref : d.min ? *d.min : d.max ? *d.max : Size{};
  w.min = d.min.value_or(w.pref);
  w.max = d.max.value_or(w.pref);
  w.priority = d.priority.value_or(Priority::medium);
  return w;
}

inline std::string constraint_label(std::size_t index) { return "c" + std::to_string(index); }

namespace detail {

inline LinExpr lower_expr(const Expr& e) {
  LinExpr out;
  for (const auto& t : e.terms) {
    LinExpr term = t.coef.value_or(1.0);
    if (t.ref) {
      const std::string& id = t.ref->widget;
      LinExpr r;
      switch (t.ref->edge) {
        case Edge::left: r = left(id); break;
        case Edge::top: r = top(id); break;
        case Edge::width: r = width(id); break;
        case Edge::height: r = height(id); break;
        case Edge::right: r = right(id); break;
        case Edge::bottom: r = bottom(id); break;
      }
      term = r * t.coef.value_or(1.0);
    }
    if (t.negative) out -= term;
    else out += term;
  }
  return out;
}

inline Formula lower_formula(const FormulaNode& f, double eps) {
  using K = FormulaNode::Kind;
  switch (f.kind) {
    case K::atom: {
      const LinExpr l = lower_expr(f.lhs), r = lower_expr(f.rhs);
      switch (f.rel) {
        case RelOp::eq: return eq(l, r);
        case RelOp::le: return le(l, r);
        case RelOp::ge: return ge(l, r);
        case RelOp::lt: return le(l, r - LinExpr(eps));
        case RelOp::gt: return ge(l, r + LinExpr(eps));
      }
      break;
    }
    case K::negation: return Formula::Not(lower_formula(f.kids[0], eps));
    case K::conj:
    case K::disj: {
      std::vector<Formula> kids;
      for (const auto& k : f.kids) kids.push_back(lower_formula(k, eps));
      return f.kind == K::conj ? Formula::And(std::move(kids)) : Formula::Or(std::move(kids));
    }
  }
  return Formula::And({});
}

inline patterns::Region region_of(const Value& v) {
  if (v.kind == Value::Kind::rect) return patterns::Region::constant(v.rect);
  if (v.ident == "root") return patterns::Region::root();
  return patterns::Region::of(v.ident);
}

}  // namespace detail

/// Pattern instance for a declaration (arguments assumed validated).
inline patterns::PatternInstance instance_of(const PatternDecl& d) {
  const PatternSpec* spec = pattern_spec(d.kind);
  if (!spec) throw SourceError(ErrorCode::BadPatternArgs, "unknown pattern kind " + d.kind, d.span);
  patterns::PatternInstance in;
  in.kind = spec->kind;
  for (const auto& a : d.args) {
    const Value& v = a.value;
    if (a.name == "items") in.targets = v.list;
    else if (a.name == "item") in.targets = {v.ident};
    else if (a.name == "primary") in.targets.insert(in.targets.begin(), v.ident);
    else if (a.name == "fallback") in.targets.push_back(v.ident);
    else if (a.name == "container") in.container = detail::region_of(v);
    else if (a.name == "group" && v.kind == Value::Kind::ident) in.group = v.ident;
    else if (a.name == "group") in.groups.push_back(v.list);
    else if (a.name == "top") in.area_top = detail::region_of(v);
    else if (a.name == "left") in.area_left = detail::region_of(v);
    else if (a.name == "slot") in.slots.push_back(detail::region_of(v));
    else if (a.name == "fixed") in.fixed = v.rect;
    else if (a.name == "priority") in.priority = priority_from(v.ident);
    else if (a.name == "label") in.label_prefix = v.ident;
  }
  return in;
}

/// Compiles a document. Errors name the offending declaration's span.
inline LayoutProblem lower(const Document& doc, std::optional<Viewport> viewport = std::nullopt,
                           const patterns::Weights& weights = {}, double epsilon = kDefaultEpsilon) {
  if (auto diags = validate(doc); !diags.empty())
    throw SourceError(diags.front().code.value_or(ErrorCode::BadPatternArgs), diags.front().message,
                      diags.front().span);
  const Viewport vp = viewport ? *viewport
                      : doc.window ? *doc.window
                                   : throw Error(ErrorCode::NoViewport, "no window size given");
  std::vector<Widget> widgets;
  for (const auto& w : doc.widgets) widgets.push_back(widget_of(w));
  std::vector<patterns::PatternInstance> instances;
  for (const auto& p : doc.patterns) instances.push_back(instance_of(p));
  std::vector<Clause> raw;
  for (std::size_t i = 0; i < doc.constraints.size(); ++i) {
    const auto& c = doc.constraints[i];
    Formula f = detail::lower_formula(c.formula, epsilon);
    raw.push_back(c.hard ? hard(constraint_label(i), f) : soft(constraint_label(i), c.weight, f));
  }
  try {
    return patterns::compile(instances, widgets, vp, std::move(raw), weights, epsilon);
  } catch (const SourceError&) {
    throw;
  } catch (const Error& e) {
    // find the declaration responsible
    for (std::size_t i = 0; i < instances.size(); ++i) {
      try {
        patterns::emit(instances[i], widgets, vp, patterns::default_prefix(instances[i], i), weights);
      } catch (const Error& inner) {
        throw SourceError(inner.code(), inner.what(), doc.patterns[i].span, inner.labels());
      }
    }
    for (const auto& w : doc.widgets)
      for (const auto& l : e.labels())
        if (l == w.id) throw SourceError(e.code(), e.what(), w.span, e.labels());
    for (std::size_t i = 0; i < doc.constraints.size(); ++i)
      for (const auto& l : e.labels())
        if (l == constraint_label(i)) throw SourceError(e.code(), e.what(), doc.constraints[i].span, e.labels());
    throw;
  }
}

/// Parses and lowers; throws SourceError on the first diagnostic.
inline LayoutProblem load(std::string_view text, std::optional<Viewport> viewport = std::nullopt) {
  ParseResult r = parse(text);
  if (!r.ok()) {
    const Diagnostic& d = r.diagnostics.front();
    throw SourceError(d.code.value_or(ErrorCode::BadPatternArgs), d.message, d.span);
  }
  return lower(*r.document, viewport);
}

}  // namespace orc::lang
