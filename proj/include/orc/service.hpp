#pragma once

// Layout sessions behind a small JSON request/response interface. The HTTP
// binding lives in http.hpp; everything here is transport-free.

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lang.hpp"
#include "log.hpp"
#include "render.hpp"
#include "solver.hpp"

namespace orc::service {

using Json = nlohmann::ordered_json;

struct Request {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  Json body;  // null for an empty body
};

/// A request the client got wrong; becomes a 422 with `reason`.
struct BadEdit {
  std::string reason;
};

class Service {
 public:
  explicit Service(std::chrono::milliseconds budget = std::chrono::milliseconds(500)) : budget_(budget) {}

  Response handle(const Request& r) {
    try {
      return route(r);
    } catch (const BadEdit& e) {
      return {422, {{"error", e.reason}}};
    } catch (const Json::exception& e) {
      return {422, {{"error", std::string("malformed JSON: ") + e.what()}}};
    } catch (const std::exception& e) {
      log::error(e.what());
      return {500, {{"error", e.what()}}};
    }
  }

  std::size_t session_count() const {
    std::lock_guard lock(store_mu_);
    return sessions_.size();
  }

 private:
  struct Session {
    std::mutex mu;
    lang::Document doc;
    LayoutProblem problem;
    std::optional<Solution> solution;
    std::vector<std::string> conflicts;  // set when the hard clauses clash
    int revision = 0;
    OrcSolver solver;
  };

  static std::vector<std::string> split(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
      std::size_t j = path.find('/', i);
      if (j == std::string::npos) j = path.size();
      if (j > i) parts.push_back(path.substr(i, j - i));
      i = j + 1;
    }
    return parts;
  }

  Response route(const Request& r) {
    const auto parts = split(r.path);
    if (parts.size() < 2 || parts[0] != "v1" || parts[1] != "sessions") return {404, {{"error", "no such route"}}};
    if (parts.size() == 2) {
      if (r.method == "POST") return create(r.body);
      return {405, {{"error", "method not allowed"}}};
    }
    auto s = find(parts[2]);
    if (!s) return {404, {{"error", "unknown session"}}};
    if (parts.size() == 3) {
      if (r.method != "DELETE") return {405, {{"error", "method not allowed"}}};
      std::lock_guard lock(store_mu_);
      sessions_.erase(parts[2]);
      return {204, nullptr};
    }
    if (parts.size() != 4) return {404, {{"error", "no such route"}}};
    if (parts[3] == "solution" && r.method == "GET") return solution(*s, r.query);
    if (parts[3] == "edits" && r.method == "POST") return edit(*s, r.body);
    if (parts[3] == "spec" && r.method == "GET") {
      std::lock_guard lock(s->mu);
      return {200, {{"spec", lang::print(s->doc)}}};
    }
    return {404, {{"error", "no such route"}}};
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(store_mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::string new_id() {
    static const char* hex = "0123456789abcdef";
    std::lock_guard lock(store_mu_);
    for (;;) {
      std::string id;
      for (int i = 0; i < 16; ++i) id += hex[rng_() & 15];
      if (!sessions_.count(id)) return id;
    }
  }

  static Json diagnostic(const std::string& message, const lang::Span& span) {
    return {{"message", message}, {"line", span.line}, {"column", span.column}};
  }

  SolveOptions options() const {
    SolveOptions o;
    o.budget = budget_;
    return o;
  }

  Json state(const Session& s) const {
    Json j;
    j["revision"] = s.revision;
    if (s.solution)
      j["solution"] = render::solution_json(s.problem, *s.solution);
    else
      j["conflicts"] = s.conflicts;
    return j;
  }

  Response create(const std::string& body) {
    const Json req = Json::parse(body);
    if (!req.contains("spec") || !req["spec"].is_string()) throw BadEdit{"body needs a string field 'spec'"};
    auto parsed = lang::parse(req["spec"].get<std::string>());
    if (!parsed.ok()) {
      Json diags = Json::array();
      for (const auto& d : parsed.diagnostics) diags.push_back(diagnostic(d.message, d.span));
      return {422, {{"diagnostics", diags}}};
    }
    auto s = std::make_shared<Session>();
    s->doc = std::move(*parsed.document);
    try {
      s->problem = lang::lower(s->doc);
    } catch (const lang::SourceError& e) {
      return {422, {{"diagnostics", Json::array({diagnostic(e.what(), e.span())})}}};
    } catch (const Error& e) {
      return {422, {{"diagnostics", Json::array({diagnostic(e.what(), {})})}}};
    }
    try {
      s->solution = s->solver.solve(s->problem, options());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HardInfeasible) throw;
      s->conflicts = e.labels();
    }
    const std::string id = new_id();
    Json out{{"id", id}};
    out.update(state(*s));
    {
      std::lock_guard lock(store_mu_);
      sessions_.emplace(id, s);
    }
    log::info("session " + id + " created");
    return {201, out};
  }

  Response solution(Session& s, const std::multimap<std::string, std::string>& query) {
    std::lock_guard lock(s.mu);
    auto w = query.find("width"), h = query.find("height");
    if (w == query.end() && h == query.end()) return {200, state(s)};
    if (w == query.end() || h == query.end()) throw BadEdit{"give both width and height"};
    Viewport vp{number(w->second, "width"), number(h->second, "height")};
    if (vp.width < 0 || vp.height < 0) throw BadEdit{"viewport must be non-negative"};
    // a what-if preview: solve a copy, leave the session alone
    LayoutProblem p;
    try {
      p = lang::lower(s.doc, vp);
    } catch (const Error& e) {
      throw BadEdit{e.what()};
    }
    Json out{{"revision", s.revision}};
    try {
      OrcSolver solver;
      out["solution"] = render::solution_json(p, solver.solve(p, options()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HardInfeasible) throw;
      out["conflicts"] = e.labels();
    }
    return {200, out};
  }

  static double number(const std::string& text, const char* what) {
    try {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used == text.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw BadEdit{std::string(what) + " is not a number"};
  }

  Response edit(Session& s, const std::string& body) {
    const Json req = Json::parse(body);
    if (!req.contains("expected_revision") || !req["expected_revision"].is_number_integer())
      throw BadEdit{"body needs an integer 'expected_revision'"};
    if (!req.contains("edit") || !req["edit"].is_object()) throw BadEdit{"body needs an 'edit' object"};
    std::lock_guard lock(s.mu);
    if (req["expected_revision"].get<int>() != s.revision)
      return {409, {{"error", "revision mismatch"}, {"revision", s.revision}}};

    lang::Document doc = s.doc;
    apply(doc, req["edit"]);
    LayoutProblem next;
    try {
      next = lang::lower(doc);
    } catch (const Error& e) {
      throw BadEdit{e.what()};
    }
    Solution solved;
    try {
      const EditBatch batch = diff_problems(s.problem, next);
      auto [problem, solution] =
          resolve_incremental(s.problem, s.solution.value_or(Solution{}), batch, budget_, &s.solver);
      solved = std::move(solution);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HardInfeasible) throw BadEdit{e.what()};
      log::info("edit rejected: conflicting hard clauses");
      return {409, {{"conflicts", e.labels()}, {"revision", s.revision}}};
    }
    s.doc = std::move(doc);
    s.problem = std::move(next);
    s.solution = std::move(solved);
    s.conflicts.clear();
    ++s.revision;
    return {200, state(s)};
  }

  // ---- edits on the document ----------------------------------------------

  template <class T>
  static T field(const Json& e, const char* name) {
    if (!e.contains(name)) throw BadEdit{std::string("edit needs '") + name + "'"};
    try {
      return e[name].get<T>();
    } catch (const Json::exception&) {
      throw BadEdit{std::string("edit field '") + name + "' has the wrong type"};
    }
  }

  static std::optional<Size> size_field(const Json& e, const char* name) {
    if (!e.contains(name)) return std::nullopt;
    const Json& v = e[name];
    if (!v.is_object() || !v.contains("width") || !v.contains("height") || !v["width"].is_number() ||
        !v["height"].is_number())
      throw BadEdit{std::string("'") + name + "' must be {width, height}"};
    return Size{v["width"].get<double>(), v["height"].get<double>()};
  }

  static lang::WidgetDecl& widget(lang::Document& doc, const std::string& id) {
    for (auto& w : doc.widgets)
      if (w.id == id) return w;
    throw BadEdit{"unknown widget '" + id + "'"};
  }

  static bool mentions(const lang::FormulaNode& f, const std::string& id) {
    for (const auto* e : {&f.lhs, &f.rhs})
      for (const auto& t : e->terms)
        if (t.ref && t.ref->widget == id) return true;
    for (const auto& k : f.kids)
      if (mentions(k, id)) return true;
    return false;
  }

  static lang::Term number_term(double v) {
    lang::Term t;
    t.negative = v < 0;
    t.coef = std::abs(v);
    return t;
  }

  // soft(2): id.<edge> == v, replacing an earlier one in place so labels stay put
  static void prefer(lang::Document& doc, const std::string& id, lang::Edge edge, double v) {
    lang::FormulaNode f;
    f.kind = lang::FormulaNode::Kind::atom;
    lang::Term ref;
    ref.ref = lang::Ref{id, edge, {}};
    f.lhs.terms.push_back(ref);
    f.rhs.terms.push_back(number_term(v));
    f.rel = lang::RelOp::eq;
    lang::ConstraintDecl c;
    c.hard = false;
    c.weight = kMoveWeight;
    c.formula = f;
    for (auto& old : doc.constraints) {
      const auto& g = old.formula;
      if (!old.hard && old.weight == kMoveWeight && g.kind == lang::FormulaNode::Kind::atom &&
          g.rel == lang::RelOp::eq && g.lhs.terms.size() == 1 && g.lhs.terms[0].ref &&
          !g.lhs.terms[0].coef && !g.lhs.terms[0].negative && g.lhs.terms[0].ref->widget == id &&
          g.lhs.terms[0].ref->edge == edge && g.rhs.terms.size() == 1 && !g.rhs.terms[0].ref) {
        old = c;
        return;
      }
    }
    doc.constraints.push_back(c);
  }

  static lang::Arg* items_arg(lang::PatternDecl& p) {
    for (auto& a : p.args)
      if (a.value.kind == lang::Value::Kind::list) return &a;
    return nullptr;
  }

  static std::size_t index_field(const Json& e, const char* name, std::size_t limit) {
    const auto i = field<long long>(e, name);
    if (i < 0 || static_cast<std::size_t>(i) >= limit) throw BadEdit{std::string("'") + name + "' out of range"};
    return static_cast<std::size_t>(i);
  }

  // Parses one pattern or constraint statement in the context of `doc`.
  static lang::Document with_statement(const lang::Document& doc, const std::string& text) {
    std::string src = lang::print(doc);
    const bool closed = text.find_last_not_of(" \t\n") != std::string::npos &&
                        text[text.find_last_not_of(" \t\n")] == ';';
    src.insert(src.size() - 2, "  " + text + (closed ? "" : ";") + "\n");
    auto parsed = lang::parse(src);
    if (!parsed.ok()) throw BadEdit{parsed.diagnostics.front().message};
    return std::move(*parsed.document);
  }

  static void apply(lang::Document& doc, const Json& e) {
    const auto type = field<std::string>(e, "type");
    if (type == "insert_widget") {
      lang::WidgetDecl w;
      w.id = field<std::string>(e, "id");
      if (doc.find_widget(w.id)) throw BadEdit{"widget '" + w.id + "' exists"};
      w.min = size_field(e, "min");
      w.pref = size_field(e, "pref");
      w.max = size_field(e, "max");
      if (e.contains("priority")) {
        w.priority = lang::priority_from(field<std::string>(e, "priority"));
        if (!w.priority) throw BadEdit{"priority must be high, medium or low"};
      }
      doc.widgets.push_back(w);
      if (e.contains("pattern")) {
        auto& p = doc.patterns[index_field(e, "pattern", doc.patterns.size())];
        lang::Arg* items = items_arg(p);
        if (!items) throw BadEdit{"pattern " + p.kind + " has no widget list"};
        auto& list = items->value.list;
        std::size_t at = list.size();
        if (e.contains("position")) at = index_field(e, "position", list.size() + 1);
        list.insert(list.begin() + static_cast<std::ptrdiff_t>(at), w.id);
        items->value.list_spans.insert(items->value.list_spans.begin() +
                                           static_cast<std::ptrdiff_t>(std::min(at, items->value.list_spans.size())),
                                       lang::Span{});
      }
    } else if (type == "delete_widget") {
      const auto id = field<std::string>(e, "id");
      widget(doc, id);
      std::erase_if(doc.widgets, [&](const auto& w) { return w.id == id; });
      // the widget leaves lists; patterns and constraints naming it otherwise go
      for (auto& p : doc.patterns)
        for (auto& a : p.args)
          if (a.value.kind == lang::Value::Kind::list) {
            auto& l = a.value.list;
            for (std::size_t i = l.size(); i-- > 0;)
              if (l[i] == id) {
                l.erase(l.begin() + static_cast<std::ptrdiff_t>(i));
                if (i < a.value.list_spans.size())
                  a.value.list_spans.erase(a.value.list_spans.begin() + static_cast<std::ptrdiff_t>(i));
              }
          }
      std::erase_if(doc.patterns, [&](const lang::PatternDecl& p) {
        for (const auto& a : p.args)
          if (a.value.kind == lang::Value::Kind::ident && a.value.ident == id) return true;
        return false;
      });
      std::erase_if(doc.constraints, [&](const lang::ConstraintDecl& c) { return mentions(c.formula, id); });
    } else if (type == "move_widget") {
      const auto id = field<std::string>(e, "id");
      widget(doc, id);
      prefer(doc, id, lang::Edge::left, field<double>(e, "left"));
      prefer(doc, id, lang::Edge::top, field<double>(e, "top"));
    } else if (type == "resize_widget") {
      auto& w = widget(doc, field<std::string>(e, "id"));
      w.pref = Size{field<double>(e, "width"), field<double>(e, "height")};
    } else if (type == "set_viewport") {
      doc.window = Viewport{field<double>(e, "width"), field<double>(e, "height")};
    } else if (type == "add_pattern") {
      auto text = field<std::string>(e, "pattern");
      auto next = with_statement(doc, text.starts_with("pattern") ? text : "pattern " + text);
      if (next.patterns.size() != doc.patterns.size() + 1 || next.constraints.size() != doc.constraints.size())
        throw BadEdit{"'pattern' must hold exactly one pattern"};
      doc.patterns.push_back(next.patterns.back());
    } else if (type == "remove_pattern") {
      doc.patterns.erase(doc.patterns.begin() +
                         static_cast<std::ptrdiff_t>(index_field(e, "index", doc.patterns.size())));
    } else if (type == "add_constraint") {
      auto text = field<std::string>(e, "constraint");
      auto next = with_statement(doc, text.starts_with("constraint") ? text : "constraint " + text);
      if (next.constraints.size() != doc.constraints.size() + 1 || next.patterns.size() != doc.patterns.size())
        throw BadEdit{"'constraint' must hold exactly one constraint"};
      doc.constraints.push_back(next.constraints.back());
    } else if (type == "remove_constraint") {
      doc.constraints.erase(doc.constraints.begin() +
                            static_cast<std::ptrdiff_t>(index_field(e, "index", doc.constraints.size())));
    } else {
      throw BadEdit{"unknown edit type '" + type + "'"};
    }
  }

  static constexpr double kMoveWeight = 2.0;

  std::chrono::milliseconds budget_;
  mutable std::mutex store_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace orc::service
