#pragma once

// Fresh vs incremental solve timings on horizontal-flow workloads.

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "patterns.hpp"
#include "render.hpp"
#include "solver.hpp"

namespace orc::bench {

enum class Op { insert, remove, move, resize_widget, resize_window };

inline const char* to_string(Op op) {
  switch (op) {
    case Op::insert: return "insert";
    case Op::remove: return "delete";
    case Op::move: return "move";
    case Op::resize_widget: return "resize_widget";
    case Op::resize_window: return "resize_window";
  }
  return "?";
}

/// Accepts the CSV names; "resize" stands for both resize rows.
inline std::vector<Op> parse_ops(const std::string& name) {
  if (name == "insert") return {Op::insert};
  if (name == "delete") return {Op::remove};
  if (name == "move") return {Op::move};
  if (name == "resize_widget") return {Op::resize_widget};
  if (name == "resize_window") return {Op::resize_window};
  if (name == "resize") return {Op::resize_widget, Op::resize_window};
  throw Error(ErrorCode::BadPatternArgs, "unknown bench op '" + name + "'");
}

struct Row {
  Op op = Op::insert;
  int widgets = 0;
  std::size_t constraints = 0;
  double mean_ms_fresh = 0;
  double mean_ms_incremental = 0;
  double savings_pct = 0;
  /// The incremental column is a full rebuild.
  bool rebuild = false;
  /// Incremental and fresh solutions agreed on every repeat.
  bool matched = true;
};

/// Flow state: widget order plus per-widget width, and the window.
struct FlowState {
  std::vector<Widget> widgets;
  Viewport viewport;

  LayoutProblem problem() const {
    patterns::PatternInstance in;
    in.kind = patterns::Kind::flow_h;
    for (const auto& w : widgets) in.targets.push_back(w.id);
    in.label_prefix = "flow";
    return patterns::compile({in}, widgets, viewport);
  }
};

inline Widget bench_widget(int i) { return Widget::fixed("w" + std::to_string(i), 40 + 10 * (i % 4), 20); }

inline FlowState initial_state(int n) {
  FlowState s;
  for (int i = 0; i < n; ++i) s.widgets.push_back(bench_widget(i));
  s.viewport = {200, 20.0 * n + 40};
  return s;
}

inline FlowState edited(FlowState s, Op op) {
  const std::size_t mid = s.widgets.size() / 2;
  switch (op) {
    case Op::insert:
      s.widgets.insert(s.widgets.begin() + mid, bench_widget(static_cast<int>(s.widgets.size())));
      break;
    case Op::remove:
      s.widgets.erase(s.widgets.begin() + mid);
      break;
    case Op::move: {
      Widget first = s.widgets.front();
      s.widgets.erase(s.widgets.begin());
      s.widgets.push_back(first);
      break;
    }
    case Op::resize_widget: {
      auto& w = s.widgets[mid];
      w = Widget::fixed(w.id, w.pref.w + 20, w.pref.h);
      break;
    }
    case Op::resize_window:
      s.viewport.width = 260;
      break;
  }
  return s;
}

inline bool same_solution(const Solution& a, const Solution& b) {
  if (std::abs(a.satisfied_weight - b.satisfied_weight) > 1e-6) return false;
  if (a.assignment.size() != b.assignment.size()) return false;
  for (const auto& [v, x] : a.assignment)
    if (std::abs(x - b.value(v)) > 1e-6) return false;
  return true;
}

inline double ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
}

/// Fresh: compile the edited flow and solve it with a new solver.
/// Incremental: apply the edit batch to the solved base problem and
/// re-solve with the solver that solved it. A window resize recompiles
/// everything, so its incremental column is the fresh one.
inline Row run(Op op, int n, int repeats) {
  const FlowState base = initial_state(n);
  const FlowState next = edited(base, op);
  const LayoutProblem before = base.problem();
  OrcSolver primed;
  const Solution solved = primed.solve(before);
  const EditBatch edits = diff_problems(before, next.problem());

  Row row;
  row.op = op;
  row.widgets = n;
  row.rebuild = op == Op::resize_window;
  double fresh_total = 0, inc_total = 0;
  for (int r = -1; r < repeats; ++r) {  // r == -1 warms caches
    auto t0 = std::chrono::steady_clock::now();
    LayoutProblem p = next.problem();
    OrcSolver cold;
    Solution fresh = cold.solve(p);
    const double fresh_ms = ms_since(t0);

    double inc_ms = fresh_ms;
    if (!row.rebuild) {
      OrcSolver warm = primed;
      auto t1 = std::chrono::steady_clock::now();
      Solution inc = resolve_incremental(before, solved, edits, std::nullopt, &warm).second;
      inc_ms = ms_since(t1);
      if (!same_solution(inc, fresh)) row.matched = false;
    }
    if (r < 0) continue;
    row.constraints = p.clauses().size();
    fresh_total += fresh_ms;
    inc_total += inc_ms;
  }
  row.mean_ms_fresh = fresh_total / repeats;
  row.mean_ms_incremental = inc_total / repeats;
  row.savings_pct = row.rebuild || row.mean_ms_fresh <= 0
                        ? 0.0
                        : 100.0 * (row.mean_ms_fresh - row.mean_ms_incremental) / row.mean_ms_fresh;
  return row;
}

inline std::vector<Row> run_all(const std::vector<int>& widget_counts, const std::vector<Op>& ops, int repeats) {
  if (repeats < 1) throw Error(ErrorCode::BadPatternArgs, "repeats must be at least 1");
  std::vector<Row> rows;
  for (Op op : ops)
    for (int n : widget_counts) rows.push_back(run(op, n, repeats));
  return rows;
}

inline const char* kCsvHeader = "op,widgets,constraints,mean_ms_fresh,mean_ms_incremental,savings_pct";

inline void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << kCsvHeader << "\n";
  auto fmt = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (const auto& r : rows)
    out << to_string(r.op) << ',' << r.widgets << ',' << r.constraints << ',' << fmt(r.mean_ms_fresh) << ','
        << fmt(r.mean_ms_incremental) << ',' << fmt(r.savings_pct) << "\n";
}

}  // namespace orc::bench
