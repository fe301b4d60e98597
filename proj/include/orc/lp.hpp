#pragma once

// Bounded-variable simplex over conjunctions of linear atoms.
//
// Every distinct linear form (normalized so its leading coefficient is 1)
// gets one slack variable defined by an equality row; atoms become bounds
// on that slack (equalities become lower = upper). Bounds live on a trail,
// so push/pop only touches bounds and keeps the basis as a warm start.
// Feasibility repair is the bound-violation phase (phase 1); optimize()
// runs the objective phase (phase 2) from the feasible basis. Both use
// Bland's smallest-index rule.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "orc/model.hpp"

namespace orc::lp {

inline constexpr double kFeasTol = 1e-7;
inline constexpr std::size_t kPivotCap = 1000000;

enum class Status { Feasible, Infeasible, Optimal, Unbounded };
enum class Direction { Min, Max };

struct LpResult {
  Status status = Status::Infeasible;
  Assignment assignment;
  double value = 0.0;
};

struct ContextMark {
  std::size_t scope = 0;
  std::uint64_t serial = 0;
};

/// An atom resolved against one tableau: `form rel rhs`, or a constant.
struct CompiledAtom {
  int form = -1;  // -1: constant atom
  Rel rel = Rel::EQ;
  double rhs = 0.0;
  bool constant_true = true;
  int tag = -1;  // caller-defined origin, reported in conflict explanations
};

class Tableau {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  Tableau() { scopes_.push_back({0, 0, next_serial_++}); }

  /// Column index of a structural variable (registered on first use).
  int column(const VarId& v) {
    auto it = columns_.find(v);
    if (it != columns_.end()) return it->second;
    int c = add_var(false);
    columns_.emplace(v, c);
    return c;
  }

  CompiledAtom compile(const Atom& a, int tag = -1) {
    CompiledAtom out;
    out.tag = tag;
    std::vector<std::pair<int, double>> terms;
    for (const auto& [v, c] : a.lhs.terms())
      if (c != 0.0) terms.emplace_back(column(v), c);
    std::sort(terms.begin(), terms.end());
    out.rel = a.rel;
    if (terms.empty()) {
      out.form = -1;
      out.constant_true = holds(a, a.lhs.constant(), kFeasTol);
      return out;
    }
    const double lead = terms.front().second;
    for (auto& t : terms) t.second /= lead;
    out.rhs = -a.lhs.constant() / lead;
    if (lead < 0 && out.rel != Rel::EQ) out.rel = out.rel == Rel::LE ? Rel::GE : Rel::LE;
    out.form = form_id(terms);
    return out;
  }

  /// Opens a scope and asserts `atoms`; the mark restores the prior state.
  ContextMark push(std::span<const Atom> atoms) {
    ContextMark m = open_scope();
    for (const auto& a : atoms) assert_atom(compile(a));
    return m;
  }

  ContextMark open_scope() {
    ContextMark m{scopes_.size() - 1, scopes_.back().serial};
    scopes_.push_back({trail_.size(), dead_.size(), next_serial_++});
    return m;
  }

  /// Asserts an atom inside the current scope.
  void assert_atom(const CompiledAtom& a) {
    if (a.form < 0) {
      if (!a.constant_true) dead_.push_back({a.tag});
      return;
    }
    int v = materialize(a.form);
    if (a.rel != Rel::LE) tighten_lower(v, a.rhs, a.tag);
    if (a.rel != Rel::GE) tighten_upper(v, a.rhs, a.tag);
  }

  /// Restores the state captured by `mark`.
  void pop(ContextMark mark) {
    if (mark.scope + 1 >= scopes_.size() || scopes_[mark.scope].serial != mark.serial)
      throw Error(ErrorCode::StaleMark, "mark does not belong to a live scope");
    const Scope target = scopes_[mark.scope + 1];
    while (trail_.size() > target.trail) {
      const TrailEntry& e = trail_.back();
      lb_[e.var] = e.lb;
      ub_[e.var] = e.ub;
      lb_reason_[e.var] = e.lbr;
      ub_reason_[e.var] = e.ubr;
      trail_.pop_back();
    }
    dead_.resize(target.dead);
    scopes_.resize(mark.scope + 1);
  }

  /// Feasibility only; fills conflict() on failure.
  bool feasible() {
    if (!dead_.empty()) {
      conflict_ = dead_.back();
      return false;
    }
    if (!repair()) return false;
    if (!verify_rows()) {
      rebuild();
      if (!repair()) return false;
    }
    return true;
  }

  LpResult check() {
    LpResult r;
    r.status = feasible() ? Status::Feasible : Status::Infeasible;
    if (r.status == Status::Feasible) r.assignment = assignment();
    return r;
  }

  LpResult optimize(const LinExpr& objective, Direction dir, bool with_assignment = true) {
    if (!feasible())
      throw Error(ErrorCode::CalledOnInfeasibleContext, "optimize on infeasible context");
    std::vector<std::pair<int, double>> obj;
    const double sign = dir == Direction::Min ? 1.0 : -1.0;
    for (const auto& [v, c] : objective.terms()) obj.emplace_back(column(v), sign * c);

    LpResult r;
    std::vector<double> d;
    call_pivots_ = 0;
    for (;;) {
      count_pivot();
      d.assign(nvars(), 0.0);
      for (const auto& [col, c] : obj) {
        if (row_of_[col] < 0) {
          d[col] += c;
        } else {
          const auto& row = rows_[row_of_[col]];
          for (int j = 0; j < nvars(); ++j)
            if (row[j] != 0.0) d[j] += c * row[j];
        }
      }
      int enter = -1;
      double dirn = 0.0;
      for (int j = 0; j < nvars(); ++j) {
        if (row_of_[j] >= 0) continue;
        if (d[j] < -1e-9 && val_[j] < ub_[j] - kFeasTol) {
          enter = j;
          dirn = 1.0;
          break;
        }
        if (d[j] > 1e-9 && val_[j] > lb_[j] + kFeasTol) {
          enter = j;
          dirn = -1.0;
          break;
        }
      }
      if (enter < 0) break;

      double step = dirn > 0 ? ub_[enter] - val_[enter] : val_[enter] - lb_[enter];
      int leave = -1;
      for (int r0 = 0; r0 < static_cast<int>(rows_.size()); ++r0) {
        const double a = rows_[r0][enter] * dirn;
        const int b = basic_[r0];
        double lim;
        if (a > 1e-9 && ub_[b] < kInf) {
          lim = (ub_[b] - val_[b]) / a;
        } else if (a < -1e-9 && lb_[b] > -kInf) {
          lim = (val_[b] - lb_[b]) / -a;
        } else {
          continue;
        }
        lim = std::max(lim, 0.0);
        if (lim < step || (lim == step && leave >= 0 && b < basic_[leave])) {
          step = lim;
          leave = r0;
        }
      }
      if (step == kInf) {
        r.status = Status::Unbounded;
        return r;
      }
      if (leave < 0) {
        update(enter, val_[enter] + dirn * step);
      } else {
        const int b = basic_[leave];
        const double a = rows_[leave][enter] * dirn;
        pivot_and_update(leave, enter, a > 0 ? ub_[b] : lb_[b]);
      }
    }
    r.status = Status::Optimal;
    r.value = objective.constant();
    for (const auto& [v, c] : objective.terms()) r.value += c * val_[columns_.at(v)];
    if (with_assignment) r.assignment = assignment();
    return r;
  }

  double value(const VarId& v) const {
    auto it = columns_.find(v);
    return it == columns_.end() ? 0.0 : val_[it->second];
  }

  Assignment assignment() const {
    Assignment a;
    for (const auto& [v, c] : columns_) a.emplace(v, val_[c]);
    return a;
  }

  /// Tags of the bounds that jointly caused the last infeasibility.
  const std::vector<int>& conflict() const { return conflict_; }

  /// Current bounds of a structural variable.
  std::pair<double, double> bounds(const VarId& v) const {
    auto it = columns_.find(v);
    if (it == columns_.end()) return {-kInf, kInf};
    return {lb_[it->second], ub_[it->second]};
  }

  /// Active (non-free) bounds per variable, for state comparison in tests.
  std::vector<std::tuple<int, double, double>> active_bounds() const {
    std::vector<std::tuple<int, double, double>> out;
    for (int v = 0; v < nvars(); ++v)
      if (lb_[v] > -kInf || ub_[v] < kInf) out.emplace_back(v, lb_[v], ub_[v]);
    return out;
  }

  std::size_t depth() const { return scopes_.size() - 1; }
  int nvars() const { return static_cast<int>(val_.size()); }
  std::size_t nrows() const { return rows_.size(); }
  std::size_t pivots() const { return pivots_; }

 private:
  struct Scope {
    std::size_t trail;
    std::size_t dead;
    std::uint64_t serial;
  };
  struct TrailEntry {
    int var;
    double lb, ub;
    int lbr, ubr;
  };
  struct Form {
    std::vector<std::pair<int, double>> terms;
    int var = -1;
  };

  int add_var(bool slack) {
    const int v = nvars();
    lb_.push_back(-kInf);
    ub_.push_back(kInf);
    val_.push_back(0.0);
    lb_reason_.push_back(-1);
    ub_reason_.push_back(-1);
    row_of_.push_back(-1);
    is_slack_.push_back(slack);
    slack_def_.emplace_back();
    for (auto& r : rows_) r.push_back(0.0);
    return v;
  }

  int form_id(const std::vector<std::pair<int, double>>& terms) {
    auto it = form_index_.find(terms);
    if (it != form_index_.end()) return it->second;
    const int id = static_cast<int>(forms_.size());
    Form f;
    f.terms = terms;
    if (terms.size() == 1) f.var = terms.front().first;  // coefficient is 1
    forms_.push_back(std::move(f));
    form_index_.emplace(terms, id);
    return id;
  }

  int materialize(int form) {
    Form& f = forms_[form];
    if (f.var >= 0) return f.var;
    const int s = add_var(true);
    slack_def_[s] = f.terms;
    std::vector<double> row(nvars(), 0.0);
    double value = 0.0;
    for (const auto& [j, c] : f.terms) {
      value += c * val_[j];
      if (row_of_[j] < 0) {
        row[j] += c;
      } else {
        const auto& src = rows_[row_of_[j]];
        for (int k = 0; k < nvars(); ++k)
          if (src[k] != 0.0) row[k] += c * src[k];
      }
    }
    val_[s] = value;
    row_of_[s] = static_cast<int>(rows_.size());
    basic_.push_back(s);
    rows_.push_back(std::move(row));
    f.var = s;
    return s;
  }

  void record(int v) { trail_.push_back({v, lb_[v], ub_[v], lb_reason_[v], ub_reason_[v]}); }

  void tighten_lower(int v, double value, int tag) {
    if (value <= lb_[v]) return;
    record(v);
    lb_[v] = value;
    lb_reason_[v] = tag;
    if (lb_[v] > ub_[v] + kFeasTol) {
      dead_.push_back({lb_reason_[v], ub_reason_[v]});
    } else if (row_of_[v] < 0 && val_[v] < lb_[v]) {
      update(v, lb_[v]);
    }
  }

  void tighten_upper(int v, double value, int tag) {
    if (value >= ub_[v]) return;
    record(v);
    ub_[v] = value;
    ub_reason_[v] = tag;
    if (lb_[v] > ub_[v] + kFeasTol) {
      dead_.push_back({lb_reason_[v], ub_reason_[v]});
    } else if (row_of_[v] < 0 && val_[v] > ub_[v]) {
      update(v, ub_[v]);
    }
  }

  void count_pivot() {
    ++pivots_;
    if (++call_pivots_ > kPivotCap)
      throw Error(ErrorCode::PivotLimit, "simplex pivot cap exceeded");
  }

  // Sets nonbasic `v` to `value` and shifts the basic variables.
  void update(int v, double value) {
    const double delta = value - val_[v];
    val_[v] = value;
    if (delta == 0.0) return;
    for (std::size_t r = 0; r < rows_.size(); ++r)
      if (rows_[r][v] != 0.0) val_[basic_[r]] += rows_[r][v] * delta;
  }

  void pivot_and_update(int r, int enter, double target) {
    const int b = basic_[r];
    const double theta = (target - val_[b]) / rows_[r][enter];
    val_[b] = target;
    val_[enter] += theta;
    for (std::size_t k = 0; k < rows_.size(); ++k)
      if (static_cast<int>(k) != r && rows_[k][enter] != 0.0)
        val_[basic_[k]] += rows_[k][enter] * theta;
    pivot(r, enter);
  }

  void pivot(int r, int enter) {
    const int b = basic_[r];
    auto& row = rows_[r];
    const double a = row[enter];
    // Solve the row for `enter`.
    for (double& x : row) x /= -a;
    row[enter] = 0.0;
    row[b] = 1.0 / a;
    std::vector<int> nz;
    for (int k = 0; k < nvars(); ++k)
      if (row[k] != 0.0) nz.push_back(k);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (static_cast<int>(i) == r) continue;
      auto& other = rows_[i];
      const double c = other[enter];
      if (c == 0.0) continue;
      other[enter] = 0.0;
      for (int k : nz) {
        double x = other[k] + c * row[k];
        other[k] = std::abs(x) < 1e-12 ? 0.0 : x;
      }
    }
    basic_[r] = enter;
    row_of_[enter] = r;
    row_of_[b] = -1;
  }

  // Bound-violation repair with Bland's rule.
  bool repair() {
    call_pivots_ = 0;
    for (;;) {
      int r = -1;
      int best_var = -1;
      for (std::size_t k = 0; k < rows_.size(); ++k) {
        const int b = basic_[k];
        if ((val_[b] < lb_[b] - kFeasTol || val_[b] > ub_[b] + kFeasTol) &&
            (best_var < 0 || b < best_var)) {
          best_var = b;
          r = static_cast<int>(k);
        }
      }
      if (r < 0) return true;
      count_pivot();
      const bool below = val_[best_var] < lb_[best_var] - kFeasTol;
      const auto& row = rows_[r];
      int enter = -1;
      for (int j = 0; j < nvars(); ++j) {
        if (row_of_[j] >= 0) continue;
        const double a = row[j];
        if (std::abs(a) <= 1e-9) continue;
        const bool can_up = val_[j] < ub_[j] - kFeasTol;
        const bool can_down = val_[j] > lb_[j] + kFeasTol;
        if (below ? ((a > 0 && can_up) || (a < 0 && can_down))
                  : ((a < 0 && can_up) || (a > 0 && can_down))) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        conflict_.clear();
        conflict_.push_back(below ? lb_reason_[best_var] : ub_reason_[best_var]);
        for (int j = 0; j < nvars(); ++j) {
          if (row_of_[j] >= 0 || std::abs(row[j]) <= 1e-9) continue;
          const bool use_upper = below ? row[j] > 0 : row[j] < 0;
          conflict_.push_back(use_upper ? ub_reason_[j] : lb_reason_[j]);
        }
        return false;
      }
      pivot_and_update(r, enter, below ? lb_[best_var] : ub_[best_var]);
    }
  }

  bool verify_rows() const {
    for (int s = 0; s < nvars(); ++s) {
      if (!is_slack_[s]) continue;
      double sum = 0.0;
      for (const auto& [j, c] : slack_def_[s]) sum += c * val_[j];
      if (std::abs(sum - val_[s]) > 1e-6 * (1.0 + std::abs(sum))) return false;
    }
    return true;
  }

  // Rebuilds all rows from their definitions with every slack basic.
  void rebuild() {
    rows_.clear();
    basic_.clear();
    std::fill(row_of_.begin(), row_of_.end(), -1);
    for (int v = 0; v < nvars(); ++v)
      if (!is_slack_[v]) val_[v] = std::clamp(val_[v], std::min(lb_[v], ub_[v]), ub_[v]);
    for (int s = 0; s < nvars(); ++s) {
      if (!is_slack_[s]) continue;
      std::vector<double> row(nvars(), 0.0);
      double value = 0.0;
      for (const auto& [j, c] : slack_def_[s]) {
        row[j] = c;
        value += c * val_[j];
      }
      val_[s] = value;
      row_of_[s] = static_cast<int>(rows_.size());
      basic_.push_back(s);
      rows_.push_back(std::move(row));
    }
  }

  struct TermsHash {
    std::size_t operator()(const std::vector<std::pair<int, double>>& terms) const {
      std::size_t h = terms.size();
      for (const auto& [j, c] : terms)
        h = (h ^ (static_cast<std::size_t>(j) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2))) * 31 +
            std::bit_cast<std::uint64_t>(c + 0.0);  // -0 and 0 hash alike
      return h;
    }
  };

  std::unordered_map<VarId, int, VarIdHash> columns_;
  std::vector<Form> forms_;
  std::unordered_map<std::vector<std::pair<int, double>>, int, TermsHash> form_index_;

  std::vector<double> lb_, ub_, val_;
  std::vector<int> lb_reason_, ub_reason_;
  std::vector<int> row_of_;
  std::vector<char> is_slack_;
  std::vector<std::vector<std::pair<int, double>>> slack_def_;
  std::vector<std::vector<double>> rows_;
  std::vector<int> basic_;

  std::vector<TrailEntry> trail_;
  std::vector<std::vector<int>> dead_;
  std::vector<Scope> scopes_;
  std::uint64_t next_serial_ = 0;
  std::vector<int> conflict_;
  std::size_t pivots_ = 0;
  std::size_t call_pivots_ = 0;
};

}  // namespace orc::lp
