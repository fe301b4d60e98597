#pragma once

// Layout variables, linear expressions, formulas, clauses, widgets and
// problems. Everything here is an immutable value once constructed.

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace orc {

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
  DuplicateLabel,
  DuplicateWidgetId,
  BadSizeOrdering,
  UnknownVariable,
  UnboundVariable,
  BadWeight,
  StaleMark,
  CalledOnInfeasibleContext,
  PivotLimit,
  HardInfeasible,
  TooLargeForOracle,
  UnknownLabelInRemove,
  CalledOnFeasibleProblem,
  EmptyWidgetList,
  EmptyChildList,
  FewerThanTwoWidgets,
  ZeroWidgetWidth,
  FewerThanTwoSlots,
  SameWidget,
  FixedOutsideContainer,
  UnknownTargetWidget,
  LabelCollision,
  BadPatternArgs,
  NoViewport,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::DuplicateWidgetId: return "DuplicateWidgetId";
    case ErrorCode::BadSizeOrdering: return "BadSizeOrdering";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::BadWeight: return "BadWeight";
    case ErrorCode::StaleMark: return "StaleMark";
    case ErrorCode::CalledOnInfeasibleContext: return "CalledOnInfeasibleContext";
    case ErrorCode::PivotLimit: return "PivotLimit";
    case ErrorCode::HardInfeasible: return "HardInfeasible";
    case ErrorCode::TooLargeForOracle: return "TooLargeForOracle";
    case ErrorCode::UnknownLabelInRemove: return "UnknownLabelInRemove";
    case ErrorCode::CalledOnFeasibleProblem: return "CalledOnFeasibleProblem";
    case ErrorCode::EmptyWidgetList: return "EmptyWidgetList";
    case ErrorCode::EmptyChildList: return "EmptyChildList";
    case ErrorCode::FewerThanTwoWidgets: return "FewerThanTwoWidgets";
    case ErrorCode::ZeroWidgetWidth: return "ZeroWidgetWidth";
    case ErrorCode::FewerThanTwoSlots: return "FewerThanTwoSlots";
    case ErrorCode::SameWidget: return "SameWidget";
    case ErrorCode::FixedOutsideContainer: return "FixedOutsideContainer";
    case ErrorCode::UnknownTargetWidget: return "UnknownTargetWidget";
    case ErrorCode::LabelCollision: return "LabelCollision";
    case ErrorCode::BadPatternArgs: return "BadPatternArgs";
    case ErrorCode::NoViewport: return "NoViewport";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> labels = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        labels_(std::move(labels)) {}

  ErrorCode code() const { return code_; }
  // Clause labels or widget ids the error refers to.
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  ErrorCode code_;
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Variables and linear expressions

/// Atom evaluation tolerance in pixels.
inline constexpr double kEvalTolerance = 1e-6;
/// Default margin used when negating a non-strict relation.
inline constexpr double kDefaultEpsilon = 1.0;

enum class Attr : std::uint8_t { left, top, width, height };

inline const char* to_string(Attr a) {
  switch (a) {
    case Attr::left: return "left";
    case Attr::top: return "top";
    case Attr::width: return "width";
    case Attr::height: return "height";
  }
  return "?";
}

struct VarId {
  std::string widget;
  Attr attr = Attr::left;

  auto operator<=>(const VarId&) const = default;
  bool operator==(const VarId&) const = default;
};

struct VarIdHash {
  std::size_t operator()(const VarId& v) const {
    return std::hash<std::string>{}(v.widget) * 4 + static_cast<std::size_t>(v.attr);
  }
};

inline std::string to_string(const VarId& v) {
  return v.widget + "." + to_string(v.attr);
}

using Assignment = std::map<VarId, double>;

class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT: implicit by intent

  static LinExpr var(VarId v, double coef = 1.0) {
    LinExpr e;
    if (coef != 0.0) e.terms_.emplace(std::move(v), coef);
    return e;
  }

  const std::map<VarId, double>& terms() const { return terms_; }
  double constant() const { return constant_; }
  bool is_constant() const { return terms_.empty(); }

  LinExpr& operator+=(const LinExpr& o) {
    for (const auto& [v, c] : o.terms_) add_term(v, c);
    constant_ += o.constant_;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    for (const auto& [v, c] : o.terms_) add_term(v, -c);
    constant_ -= o.constant_;
    return *this;
  }
  LinExpr& operator*=(double k) {
    if (k == 0.0) {
      terms_.clear();
      constant_ = 0.0;
      return *this;
    }
    for (auto& [v, c] : terms_) c *= k;
    constant_ *= k;
    return *this;
  }

  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(LinExpr a, double k) { return a *= k; }
  friend LinExpr operator*(double k, LinExpr a) { return a *= k; }
  friend LinExpr operator-(LinExpr a) { return a *= -1.0; }

  bool operator==(const LinExpr&) const = default;

  double eval(const Assignment& values) const {
    double sum = constant_;
    for (const auto& [v, c] : terms_) {
      auto it = values.find(v);
      if (it == values.end())
        throw Error(ErrorCode::UnboundVariable, to_string(v));
      sum += c * it->second;
    }
    return sum;
  }

 private:
  void add_term(const VarId& v, double c) {
    auto [it, inserted] = terms_.emplace(v, c);
    if (!inserted) {
      it->second += c;
      if (std::abs(it->second) < 1e-12) terms_.erase(it);
    } else if (c == 0.0) {
      terms_.erase(it);
    }
  }

  std::map<VarId, double> terms_;
  double constant_ = 0.0;
};

// ---------------------------------------------------------------------------
// Atoms and formulas

enum class Rel : std::uint8_t { EQ, LE, GE };

/// `lhs rel 0`.
struct Atom {
  LinExpr lhs;
  Rel rel = Rel::EQ;

  bool operator==(const Atom&) const = default;
};

inline Atom eq(const LinExpr& a, const LinExpr& b) { return {a - b, Rel::EQ}; }
inline Atom le(const LinExpr& a, const LinExpr& b) { return {a - b, Rel::LE}; }
inline Atom ge(const LinExpr& a, const LinExpr& b) { return {a - b, Rel::GE}; }

inline bool holds(const Atom& a, double value, double tol = kEvalTolerance) {
  switch (a.rel) {
    case Rel::EQ: return std::abs(value) <= tol;
    case Rel::LE: return value <= tol;
    case Rel::GE: return value >= -tol;
  }
  return false;
}

class Formula {
 public:
  enum class Kind : std::uint8_t { atom, all, any, negation };

  Formula(Atom a)  // NOLINT: atoms are formulas
      : node_(std::make_shared<const Node>(Node{Kind::atom, std::move(a), {}})) {}

  static Formula And(std::vector<Formula> kids) {
    return Formula(Kind::all, std::move(kids));
  }
  static Formula Or(std::vector<Formula> kids) {
    return Formula(Kind::any, std::move(kids));
  }
  static Formula Not(Formula f) { return Formula(Kind::negation, {std::move(f)}); }

  Kind kind() const { return node_->kind; }
  const Atom& atom() const { return node_->atom; }
  std::span<const Formula> children() const { return node_->kids; }

  bool operator==(const Formula& o) const {
    if (node_ == o.node_) return true;
    return node_->kind == o.node_->kind && node_->atom == o.node_->atom &&
           node_->kids == o.node_->kids;
  }

 private:
  struct Node {
    Kind kind;
    Atom atom;
    std::vector<Formula> kids;
  };

  Formula(Kind k, std::vector<Formula> kids)
      : node_(std::make_shared<const Node>(Node{k, Atom{}, std::move(kids)})) {}

  std::shared_ptr<const Node> node_;
};

inline Formula operator&&(const Formula& a, const Formula& b) {
  return Formula::And({a, b});
}
inline Formula operator||(const Formula& a, const Formula& b) {
  return Formula::Or({a, b});
}
inline Formula operator!(const Formula& a) { return Formula::Not(a); }

/// Negation of a non-strict atom with margin `epsilon`; never contains Not.
inline Formula negate_atom(const Atom& a, double epsilon) {
  switch (a.rel) {
    case Rel::LE: return Atom{a.lhs - LinExpr(epsilon), Rel::GE};
    case Rel::GE: return Atom{a.lhs + LinExpr(epsilon), Rel::LE};
    case Rel::EQ:
      return Formula::Or({Atom{a.lhs + LinExpr(epsilon), Rel::LE},
                          Atom{a.lhs - LinExpr(epsilon), Rel::GE}});
  }
  return Formula(a);
}

namespace detail {

inline Formula nnf_impl(const Formula& f, bool negated, double eps);

inline Formula nnf_junction(const Formula& f, Formula::Kind kind, bool negated,
                            double eps) {
  std::vector<Formula> out;
  for (const auto& k : f.children()) {
    Formula n = nnf_impl(k, negated, eps);
    if (n.kind() == kind) {
      for (const auto& g : n.children()) out.push_back(g);
    } else {
      out.push_back(std::move(n));
    }
  }
  return kind == Formula::Kind::all ? Formula::And(std::move(out))
                                    : Formula::Or(std::move(out));
}

inline Formula nnf_impl(const Formula& f, bool negated, double eps) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::atom: return negated ? negate_atom(f.atom(), eps) : f;
    case K::negation: return nnf_impl(f.children()[0], !negated, eps);
    case K::all: return nnf_junction(f, negated ? K::any : K::all, negated, eps);
    case K::any: return nnf_junction(f, negated ? K::all : K::any, negated, eps);
  }
  return f;
}

}  // namespace detail

/// Negation normal form: pushes Not to the atoms (epsilon negation) and
/// flattens nested same-kind junctions.
inline Formula nnf(const Formula& f, double epsilon = kDefaultEpsilon) {
  return detail::nnf_impl(f, false, epsilon);
}

inline bool eval_formula(const Formula& f, const Assignment& values) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::atom: return holds(f.atom(), f.atom().lhs.eval(values));
    case K::negation: return !eval_formula(f.children()[0], values);
    case K::all:
      for (const auto& k : f.children())
        if (!eval_formula(k, values)) return false;
      return true;
    case K::any:
      for (const auto& k : f.children())
        if (eval_formula(k, values)) return true;
      return false;
  }
  return false;
}

template <class Fn>
void for_each_atom(const Formula& f, Fn&& fn) {
  if (f.kind() == Formula::Kind::atom) {
    fn(f.atom());
    return;
  }
  for (const auto& k : f.children()) for_each_atom(k, fn);
}

// ---------------------------------------------------------------------------
// Clauses, widgets, problems

struct Strength {
  bool hard = true;
  double weight = 0.0;

  static Strength Hard() { return {true, 0.0}; }
  static Strength Soft(double w) { return {false, w}; }
  bool operator==(const Strength&) const = default;
};

struct Clause {
  Formula formula;
  Strength strength;
  std::string label;

  bool is_hard() const { return strength.hard; }
  bool operator==(const Clause&) const = default;
};

inline Clause hard(std::string label, Formula f) {
  return {std::move(f), Strength::Hard(), std::move(label)};
}
inline Clause soft(std::string label, double weight, Formula f) {
  return {std::move(f), Strength::Soft(weight), std::move(label)};
}

struct Size {
  double w = 0.0;
  double h = 0.0;
  bool operator==(const Size&) const = default;
};

enum class Priority : std::uint8_t { high, medium, low };

inline const char* to_string(Priority p) {
  switch (p) {
    case Priority::high: return "high";
    case Priority::medium: return "medium";
    case Priority::low: return "low";
  }
  return "?";
}

/// Default upper size bound for widgets that declare none.
inline constexpr double kUnboundedSize = 100000.0;

struct Widget {
  std::string id;
  Size min{};
  Size pref{};
  Size max{kUnboundedSize, kUnboundedSize};
  std::string kind = "widget";
  Priority priority = Priority::medium;

  bool operator==(const Widget&) const = default;

  /// Fixed size: min = pref = max.
  static Widget fixed(std::string id, double w, double h) {
    Widget out;
    out.id = std::move(id);
    out.min = out.pref = out.max = {w, h};
    return out;
  }
};

inline LinExpr left(const std::string& w) { return LinExpr::var({w, Attr::left}); }
inline LinExpr top(const std::string& w) { return LinExpr::var({w, Attr::top}); }
inline LinExpr width(const std::string& w) { return LinExpr::var({w, Attr::width}); }
inline LinExpr height(const std::string& w) { return LinExpr::var({w, Attr::height}); }
inline LinExpr right(const std::string& w) { return left(w) + width(w); }
inline LinExpr bottom(const std::string& w) { return top(w) + height(w); }

struct Viewport {
  double width = 0.0;
  double height = 0.0;
  bool operator==(const Viewport&) const = default;
};

struct AssembleOptions {
  double epsilon = kDefaultEpsilon;
  /// Widgets whose size is governed by a pattern (optional / alternative
  /// widgets): their minimum relaxes to 0 and no pref clauses are added.
  std::set<std::string> managed_size;
  /// Extra free variables (not attached to widgets).
  std::vector<VarId> extra_variables;
};

class LayoutProblem {
 public:
  LayoutProblem() = default;

  const std::vector<Widget>& widgets() const { return widgets_; }
  const Viewport& viewport() const { return viewport_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  /// Clauses supplied by the caller, without the auto-added ones.
  std::vector<Clause> user_clauses() const {
    return {clauses_.begin() + static_cast<std::ptrdiff_t>(auto_count_), clauses_.end()};
  }
  std::size_t auto_clause_count() const { return auto_count_; }
  double epsilon() const { return options_.epsilon; }
  const AssembleOptions& options() const { return options_; }
  const std::vector<VarId>& variables() const { return variables_; }

  const Widget* find_widget(const std::string& id) const {
    for (const auto& w : widgets_)
      if (w.id == id) return &w;
    return nullptr;
  }

  double total_soft_weight() const {
    double s = 0.0;
    for (const auto& c : clauses_)
      if (!c.is_hard()) s += c.strength.weight;
    return s;
  }

  bool operator==(const LayoutProblem&) const = default;

 private:
  friend LayoutProblem assemble_problem(std::vector<Widget>, Viewport,
                                        std::vector<Clause>, AssembleOptions,
                                        const std::vector<char>*);

  std::vector<Widget> widgets_;
  Viewport viewport_;
  std::vector<Clause> clauses_;
  std::size_t auto_count_ = 0;
  AssembleOptions options_;
  std::vector<VarId> variables_;
};

inline bool operator==(const AssembleOptions& a, const AssembleOptions& b) {
  return a.epsilon == b.epsilon && a.managed_size == b.managed_size &&
         a.extra_variables == b.extra_variables;
}

/// Validates widgets and clauses, adds per-widget box constraints and
/// preferred-size soft clauses, and fixes the variable table. Auto clauses
/// come first (widget order), followed by the caller's clauses in order.
/// Clauses flagged in `checked` are known to mention only live variables.
inline LayoutProblem assemble_problem(std::vector<Widget> widgets, Viewport viewport,
                                      std::vector<Clause> clauses,
                                      AssembleOptions options = {},
                                      const std::vector<char>* checked = nullptr) {
  LayoutProblem p;
  std::unordered_set<std::string> ids;
  for (const auto& w : widgets) {
    if (!ids.insert(w.id).second)
      throw Error(ErrorCode::DuplicateWidgetId, w.id, {w.id});
    bool ordered = 0 <= w.min.w && w.min.w <= w.pref.w && w.pref.w <= w.max.w &&
                   0 <= w.min.h && w.min.h <= w.pref.h && w.pref.h <= w.max.h;
    if (!ordered) throw Error(ErrorCode::BadSizeOrdering, w.id, {w.id});
  }

  std::unordered_set<VarId, VarIdHash> vars;
  for (const auto& w : widgets)
    for (Attr a : {Attr::left, Attr::top, Attr::width, Attr::height}) {
      p.variables_.push_back({w.id, a});
      vars.insert({w.id, a});
    }
  for (const auto& v : options.extra_variables)
    if (vars.insert(v).second) p.variables_.push_back(v);

  std::vector<Clause> all;
  for (const auto& w : widgets) {
    const std::string& id = w.id;
    const bool managed = options.managed_size.count(id) > 0;
    const std::string pre = "auto:" + id;
    all.push_back(hard(pre + ".min_w", ge(width(id), managed ? 0.0 : w.min.w)));
    all.push_back(hard(pre + ".max_w", le(width(id), w.max.w)));
    all.push_back(hard(pre + ".min_h", ge(height(id), managed ? 0.0 : w.min.h)));
    all.push_back(hard(pre + ".max_h", le(height(id), w.max.h)));
    all.push_back(hard(pre + ".left", ge(left(id), 0.0)));
    all.push_back(hard(pre + ".top", ge(top(id), 0.0)));
    all.push_back(hard(pre + ".right", le(right(id), viewport.width)));
    all.push_back(hard(pre + ".bottom", le(bottom(id), viewport.height)));
    if (!managed) {
      all.push_back(soft(pre + ".pref_w", 1.0, eq(width(id), w.pref.w)));
      all.push_back(soft(pre + ".pref_h", 1.0, eq(height(id), w.pref.h)));
    }
  }
  p.auto_count_ = all.size();

  std::unordered_set<std::string> labels;
  for (const auto& c : all) labels.insert(c.label);
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    Clause& c = clauses[i];
    if (!labels.insert(c.label).second)
      throw Error(ErrorCode::DuplicateLabel, c.label, {c.label});
    if (!c.is_hard() && !(c.strength.weight > 0.0))
      throw Error(ErrorCode::BadWeight, c.label, {c.label});
    if (!(checked && (*checked)[i]))
      for_each_atom(c.formula, [&](const Atom& a) {
        for (const auto& [v, coef] : a.lhs.terms())
          if (!vars.count(v))
            throw Error(ErrorCode::UnknownVariable, to_string(v) + " in " + c.label,
                        {c.label});
      });
    all.push_back(std::move(c));
  }

  p.widgets_ = std::move(widgets);
  p.viewport_ = viewport;
  p.clauses_ = std::move(all);
  p.options_ = std::move(options);
  return p;
}

/// A problem over free variables only (no widgets, no auto clauses).
inline LayoutProblem raw_problem(std::vector<VarId> variables, std::vector<Clause> clauses,
                                 double epsilon = kDefaultEpsilon) {
  AssembleOptions opts;
  opts.epsilon = epsilon;
  opts.extra_variables = std::move(variables);
  return assemble_problem({}, {}, std::move(clauses), std::move(opts));
}

// ---------------------------------------------------------------------------
// Solutions

struct Solution {
  Assignment assignment;
  double satisfied_weight = 0.0;
  double total_soft_weight = 0.0;
  std::map<std::string, int> branch_choices;
  bool optimal = false;
  double solve_ms = 0.0;
  /// Decision sequence of the chosen Boolean skeleton (search order).
  std::vector<int> skeleton;

  double value(const VarId& v) const {
    auto it = assignment.find(v);
    return it == assignment.end() ? 0.0 : it->second;
  }
};

}  // namespace orc
