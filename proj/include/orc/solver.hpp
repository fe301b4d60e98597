#pragma once

// Weighted-max search over OR-constraints: depth-first branch and bound on
// disjunct choices and soft-clause satisfaction, with an incremental LP
// underneath.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "lp.hpp"
#include "model.hpp"

namespace orc {

struct SolveOptions {
  std::optional<std::chrono::milliseconds> budget;
  /// Disables the dominance-based skipping of branches (testing aid).
  bool exhaustive_branching = false;
  /// Keeps (decision prefix, bound) for every node cut by the weight bound.
  bool record_prunes = false;
};

struct SolveStats {
  std::size_t nodes = 0;
  std::size_t lp_checks = 0;
  std::size_t leaves = 0;
  std::size_t bound_prunes = 0;
  std::size_t skipped_branches = 0;
  /// Upper bound on the satisfied weight proven before the search.
  std::optional<double> root_bound;
  std::vector<std::pair<std::vector<int>, double>> pruned;
};

namespace detail {

inline bool has_or(const Formula& f) {
  if (f.kind() == Formula::Kind::any) return true;
  for (const auto& k : f.children())
    if (has_or(k)) return true;
  return false;
}

/// Clause formulas in negation normal form plus per-clause metadata.
struct Prepared {
  std::vector<Formula> formulas;
  std::vector<double> weight;  // 0 for hard clauses
  std::vector<char> hard;
  std::vector<char> or_free;
  std::vector<std::string> labels;
  double total = 0.0;

  explicit Prepared(const std::vector<Clause>& clauses, double eps) {
    for (const auto& c : clauses) {
      formulas.push_back(nnf(c.formula, eps));
      hard.push_back(c.is_hard());
      weight.push_back(c.is_hard() ? 0.0 : c.strength.weight);
      or_free.push_back(!has_or(formulas.back()));
      labels.push_back(c.label);
      total += weight.back();
    }
  }
  std::size_t size() const { return formulas.size(); }
};

inline double weight_tol(double total) { return 1e-9 * std::max(1.0, total); }

/// True when `a` precedes `b` on their common prefix.
inline bool lex_before(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

using TaggedAtoms = std::vector<std::pair<int, const Atom*>>;

/// Picks the final coordinates for a chosen skeleton: minimal total
/// deviation from preferred sizes, then minimal left+top (and |v| for free
/// variables) among those.
inline Assignment finalize(const LayoutProblem& p, TaggedAtoms atoms) {
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  lp::Tableau t;
  for (const auto& v : p.variables()) t.column(v);
  for (const auto& [c, a] : atoms) t.assert_atom(t.compile(*a));

  auto split = [&](const std::string& tag, const VarId& v, const LinExpr& target) {
    VarId pos{"#" + tag + "+" + to_string(v), Attr::left};
    VarId neg{"#" + tag + "-" + to_string(v), Attr::left};
    LinExpr dp = LinExpr::var(pos), dn = LinExpr::var(neg);
    t.assert_atom(t.compile(eq(LinExpr::var(v) - target, dp - dn)));
    t.assert_atom(t.compile(ge(dp, 0.0)));
    t.assert_atom(t.compile(ge(dn, 0.0)));
    return dp + dn;
  };
  // minimizes `e` and keeps it at its optimum for the later stages
  auto settle = [&](const LinExpr& e) {
    auto r = t.optimize(e, lp::Direction::Min, false);
    if (r.status == lp::Status::Optimal) t.assert_atom(t.compile(le(e, r.value + 1e-6)));
    if (!t.feasible()) throw Error(ErrorCode::PivotLimit, "objective bound lost feasibility");
  };

  // a size pinned by min == max cannot deviate, so it needs no split
  LinExpr deviation;
  bool free_size = false;
  for (const auto& w : p.widgets()) {
    const bool managed = p.options().managed_size.count(w.id) > 0;
    if (managed || w.min.w != w.max.w) {
      deviation += split("dev", {w.id, Attr::width}, LinExpr(w.pref.w));
      free_size = true;
    }
    if (managed || w.min.h != w.max.h) {
      deviation += split("dev", {w.id, Attr::height}, LinExpr(w.pref.h));
      free_size = true;
    }
  }
  if (!t.feasible()) throw Error(ErrorCode::PivotLimit, "skeleton lost feasibility");
  if (free_size) settle(deviation);

  LinExpr placement;
  for (const auto& w : p.widgets()) placement += left(w.id) + top(w.id);
  for (const auto& v : p.options().extra_variables) placement += split("abs", v, LinExpr(0.0));
  if (!t.feasible()) throw Error(ErrorCode::PivotLimit, "split lost feasibility");
  settle(placement);

  const auto& vars = p.variables();
  Assignment out;
  for (const auto& v : vars) out[v] = t.value(v);
  return out;
}

/// Depth-first branch and bound over one prepared clause list.
class Search {
 public:
  using Clock = std::chrono::steady_clock;

  Search(lp::Tableau& t, const Prepared& p, const std::vector<char>& entailed,
         const SolveOptions& opt, SolveStats& stats)
      : t_(t), p_(p), entailed_(entailed), opt_(opt), stats_(stats), paid_(p.size(), 0) {
    for (std::size_t c = p.size(); c-- > 0;)
      if (!(p.hard[c] && p.or_free[c]))
        agenda_.push_back({&p.formulas[c], static_cast<int>(c), -1, !p.hard[c], !!p.hard[c]});
    tol_ = weight_tol(p.total);
  }

  void set_deadline(std::optional<Clock::time_point> d) { deadline_ = d; }

  /// Stops at the first feasible leaf (hard satisfiability).
  void first_leaf() {
    first_only_ = true;
    dfs();
  }

  /// Upper bound on the optimum from disjoint cores among the soft
  /// clauses; a leaf reaching it ends the search.
  void bound_root() {
    const auto pending = pending_softs();
    if (pending.size() >= 2) stats_.root_bound = ceiling_ = core_bound(pending, -std::numeric_limits<double>::infinity());
  }

  void run() { dfs(); }

  bool found() const { return have_; }
  bool stopped() const { return stopped_; }
  double best_weight() const { return best_w_; }
  const std::vector<int>& best_decisions() const { return best_dec_; }
  const TaggedAtoms& best_atoms() const { return best_atoms_; }
  const std::map<int, int>& best_top_choices() const { return best_top_; }

 private:
  struct Item {
    const Formula* f;
    int clause;
    int level;  // decision that introduced the item, -1 at the root
    bool soft_root;
    bool top;   // clause's own formula
  };
  struct Level {
    int parent;
    int clause;
    bool top_or;
  };
  struct Op {
    bool push;
    Item item;
  };

  void pop_item(std::vector<Op>& log) {
    log.push_back({false, agenda_.back()});
    agenda_.pop_back();
  }
  void push_item(std::vector<Op>& log, Item it) {
    agenda_.push_back(it);
    log.push_back({true, it});
  }
  void undo(std::vector<Op>& log) {
    for (auto it = log.rbegin(); it != log.rend(); ++it) {
      if (it->push)
        agenda_.pop_back();
      else
        agenda_.push_back(it->item);
    }
  }

  const lp::CompiledAtom& compiled(const Atom* a) {
    auto it = cache_.find(a);
    if (it == cache_.end()) it = cache_.emplace(a, t_.compile(*a)).first;
    return it->second;
  }

  void mark_conflict() {
    for (int tag : t_.conflict())
      for (int l = tag; l >= 0 && l < static_cast<int>(levels_.size()); l = levels_[l].parent)
        involved_[l] = 1;
  }

  bool out_of_time() {
    if (!deadline_ || !have_ || (stats_.nodes & 63) != 0) return false;
    return Clock::now() > *deadline_;
  }

  void dfs() {
    if (halted()) return;
    ++stats_.nodes;
    if (out_of_time()) {
      stopped_ = true;
      return;
    }
    if (cut(p_.total - falsified_)) {
      ++stats_.bound_prunes;
      if (opt_.record_prunes) stats_.pruned.emplace_back(dec_, p_.total - falsified_);
      return;
    }

    std::vector<Op> log;
    const std::size_t asserted_before = path_.size();
    const lp::ContextMark mark = t_.open_scope();
    while (!agenda_.empty()) {
      const Item it = agenda_.back();
      const auto kind = it.f->kind();
      if (it.soft_root || kind == Formula::Kind::any) break;
      pop_item(log);
      if (kind == Formula::Kind::atom) {
        lp::CompiledAtom a = compiled(&it.f->atom());
        a.tag = it.level;
        t_.assert_atom(a);
        path_.emplace_back(it.clause, &it.f->atom());
      } else {
        auto kids = it.f->children();
        for (std::size_t k = kids.size(); k-- > 0;)
          push_item(log, {&kids[k], it.clause, it.level, false, false});
      }
    }
    bool ok = true;
    if (path_.size() > asserted_before) {
      ++stats_.lp_checks;
      ok = t_.feasible();
      if (!ok) mark_conflict();
    }
    if (ok && !agenda_.empty() && have_ && !first_only_ && core_prune()) ok = false;
    if (ok) {
      if (agenda_.empty())
        leaf();
      else
        branch(log);
    }
    t_.pop(mark);
    path_.resize(asserted_before);
    undo(log);
  }

  // Atoms implied by a clause's formula: the top-level conjuncts that are
  // atoms.
  const std::vector<const Atom*>& necessary(int c) {
    auto [it, fresh] = necessary_.try_emplace(c);
    if (fresh) {
      const Formula& f = p_.formulas[c];
      if (f.kind() == Formula::Kind::atom) {
        it->second.push_back(&f.atom());
      } else if (f.kind() == Formula::Kind::all) {
        for (const auto& k : f.children())
          if (k.kind() == Formula::Kind::atom) it->second.push_back(&k.atom());
      }
    }
    return it->second;
  }

  // Lower bound on the weight still to be paid: the implied atoms of pending soft
  // clauses are added one by one; each infeasible set found is a core, at
  // least one of whose members must be paid. Cores are kept disjoint.
  // A node whose weight bound cannot beat the incumbent (or tie with it while
  // lexicographically after it).
  bool cut(double bound) const {
    if (first_only_ || !have_) return false;
    return bound < best_w_ - tol_ || (bound <= best_w_ + tol_ && lex_before(best_dec_, dec_));
  }

  std::vector<int> pending_softs() {
    std::vector<int> pending;
    for (auto it = agenda_.rbegin(); it != agenda_.rend(); ++it)
      if (it->soft_root && !entailed_[it->clause] && !necessary(it->clause).empty())
        pending.push_back(it->clause);
    return pending;
  }

  bool core_prune() {
    const double trivial = p_.total - falsified_;
    if (trivial < best_w_ - tol_) return false;  // already handled on entry
    std::vector<int> pending = pending_softs();
    if (pending.size() < 2) return false;
    // back off when cores rarely prune
    if (core_tries_ >= 64 && core_hits_ * 16 < core_tries_ && (core_tries_++ & 15) != 0) return false;
    ++core_tries_;
    const double bound = core_bound(pending, best_w_);
    if (bound < trivial && cut(bound)) {
      ++stats_.bound_prunes;
      if (opt_.record_prunes) stats_.pruned.emplace_back(dec_, bound);
      ++core_hits_;
      return true;
    }
    return false;
  }

  // trivial bound minus one minimum weight per disjoint core; stops early
  // once below `target`
  double core_bound(const std::vector<int>& pending, double target) {
    const double trivial = p_.total - falsified_;
    double extra = 0.0;
    std::vector<int> kept;
    lp::ContextMark mark = t_.open_scope();
    auto assert_soft = [&](int c) {
      for (const Atom* a : necessary(c)) {
        lp::CompiledAtom ca = compiled(a);
        ca.tag = -2 - c;
        t_.assert_atom(ca);
      }
    };
    for (int c : pending) {
      assert_soft(c);
      ++stats_.lp_checks;
      if (t_.feasible()) {
        kept.push_back(c);
        continue;
      }
      std::vector<int> core;
      for (int tag : t_.conflict()) {
        if (tag <= -2) core.push_back(-2 - tag);
        for (int l = tag; l >= 0 && l < static_cast<int>(levels_.size()); l = levels_[l].parent)
          involved_[l] = 1;
      }
      double w = std::numeric_limits<double>::infinity();
      for (int k : core) w = std::min(w, p_.weight[k]);
      if (core.empty()) break;  // context alone; cannot happen after a feasible check
      extra += w;
      if (trivial - extra < target - tol_) break;
      t_.pop(mark);
      mark = t_.open_scope();
      std::erase_if(kept, [&](int k) { return std::find(core.begin(), core.end(), k) != core.end(); });
      for (int k : kept) assert_soft(k);
    }
    t_.pop(mark);
    return trivial - extra;
  }

  void branch(std::vector<Op>& log) {
    const Item it = agenda_.back();
    pop_item(log);
    const int d = static_cast<int>(dec_.size());
    levels_.push_back({it.level, it.clause, it.top && !it.soft_root});
    involved_.push_back(0);
    const bool skip_ok = !opt_.exhaustive_branching;

    if (it.soft_root) {
      const int c = it.clause;
      dec_.push_back(0);
      agenda_.push_back({it.f, c, d, false, true});
      dfs();
      agenda_.pop_back();
      dec_.pop_back();
      const bool pay = !entailed_[c] && (involved_[d] || !skip_ok);
      if (pay && !halted()) {
        dec_.push_back(1);
        paid_[c] = 1;
        falsified_ += p_.weight[c];
        dfs();
        falsified_ -= p_.weight[c];
        paid_[c] = 0;
        dec_.pop_back();
      } else if (!entailed_[c]) {
        ++stats_.skipped_branches;
      }
    } else {
      auto kids = it.f->children();
      for (int i = 0; i < static_cast<int>(kids.size()); ++i) {
        if (halted()) break;
        involved_[d] = 0;
        dec_.push_back(i);
        agenda_.push_back({&kids[i], it.clause, d, false, false});
        dfs();
        agenda_.pop_back();
        dec_.pop_back();
        if (skip_ok && !involved_[d] && !halted()) {
          ++stats_.skipped_branches;
          break;
        }
      }
    }
    levels_.pop_back();
    involved_.pop_back();
  }

  void leaf() {
    ++stats_.leaves;
    double w = 0.0;
    for (std::size_t c = 0; c < p_.size(); ++c)
      if (!p_.hard[c] && !paid_[c]) w += p_.weight[c];
    const bool better = !have_ || w > best_w_ + tol_ ||
                        (w >= best_w_ - tol_ && lex_before(dec_, best_dec_));
    if (better) {
      have_ = true;
      best_w_ = w;
      best_dec_ = dec_;
      best_atoms_ = path_;
      best_top_.clear();
      for (std::size_t l = 0; l < levels_.size(); ++l)
        if (levels_[l].top_or) best_top_[levels_[l].clause] = dec_[l];
    }
    if (first_only_) stopped_ = true;
    else if (better && ceiling_ && w >= *ceiling_ - tol_) done_ = true;
  }

  bool halted() const { return stopped_ || done_; }

  lp::Tableau& t_;
  const Prepared& p_;
  const std::vector<char>& entailed_;
  const SolveOptions& opt_;
  SolveStats& stats_;

  std::vector<Item> agenda_;
  std::vector<int> dec_;
  std::vector<Level> levels_;
  std::vector<char> involved_;
  std::vector<char> paid_;
  TaggedAtoms path_;
  double falsified_ = 0.0;
  double tol_ = 0.0;
  std::size_t core_tries_ = 0, core_hits_ = 0;
  std::unordered_map<int, std::vector<const Atom*>> necessary_;
  std::unordered_map<const Atom*, lp::CompiledAtom> cache_;

  bool have_ = false;
  double best_w_ = 0.0;
  std::vector<int> best_dec_;
  TaggedAtoms best_atoms_;
  std::map<int, int> best_top_;

  bool stopped_ = false;
  bool done_ = false;
  std::optional<double> ceiling_;
  bool first_only_ = false;
  std::optional<Clock::time_point> deadline_;
};

}  // namespace detail

namespace detail {

/// Whether some disjunct selection satisfies all of `hard_clauses`.
inline bool hard_satisfiable(const std::vector<Clause>& hard_clauses, double eps) {
  detail::Prepared p(hard_clauses, eps);
  lp::Tableau t;
  t.open_scope();
  for (std::size_t c = 0; c < p.size(); ++c)
    if (p.or_free[c])
      for_each_atom(p.formulas[c], [&](const Atom& a) { t.assert_atom(t.compile(a)); });
  if (!t.feasible()) return false;
  std::vector<char> entailed(p.size(), 0);
  SolveOptions opt;
  SolveStats stats;
  detail::Search s(t, p, entailed, opt, stats);
  s.first_leaf();
  return s.found();
}

}  // namespace detail

/// Labels of an irreducible set of hard clauses whose conjunction is
/// infeasible, by deletion filtering.
inline std::vector<std::string> explain_infeasible(const LayoutProblem& problem) {
  std::vector<Clause> keep;
  for (const auto& c : problem.clauses())
    if (c.is_hard()) keep.push_back(c);
  if (detail::hard_satisfiable(keep, problem.epsilon()))
    throw Error(ErrorCode::CalledOnFeasibleProblem, "hard clauses are satisfiable");
  // chunked passes first, then one clause at a time
  for (std::size_t chunk = std::max<std::size_t>(1, keep.size() / 2);; chunk /= 2) {
    chunk = std::max<std::size_t>(chunk, 1);
    for (std::size_t i = 0; i < keep.size();) {
      const std::size_t end = std::min(keep.size(), i + chunk);
      std::vector<Clause> trial(keep.begin(), keep.begin() + static_cast<std::ptrdiff_t>(i));
      trial.insert(trial.end(), keep.begin() + static_cast<std::ptrdiff_t>(end), keep.end());
      if (!detail::hard_satisfiable(trial, problem.epsilon()))
        keep = std::move(trial);
      else
        i = end;
    }
    if (chunk == 1) break;
  }
  std::vector<std::string> out;
  for (const auto& c : keep) out.push_back(c.label);
  return out;
}

/// A reusable solver. Consecutive solves share the root LP state for the
/// prefix of root-level hard constraints that did not change; each search
/// works on a copy, so its rows do not pile up between solves.
class OrcSolver {
 public:
  Solution solve(const LayoutProblem& problem, const SolveOptions& opt = {}) {
    try {
      return solve_impl(problem, opt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::HardInfeasible) reset();
      throw;
    }
  }

  const SolveStats& stats() const { return stats_; }

  void reset() {
    tableau_ = lp::Tableau();
    root_.clear();
    root_marks_.clear();
  }

 private:
  using Clock = std::chrono::steady_clock;

  Solution solve_impl(const LayoutProblem& problem, const SolveOptions& opt) {
    const auto start = Clock::now();
    stats_ = {};
    detail::Prepared p(problem.clauses(), problem.epsilon());
    sync_root(p);

    if (!tableau_.feasible()) infeasible(problem);

    std::vector<char> entailed(p.size(), 0);
    for (std::size_t c = 0; c < p.size(); ++c)
      if (!p.hard[c] && p.or_free[c]) entailed[c] = entailed_at_root(p.formulas[c]);

    lp::Tableau work = tableau_;
    detail::Search search(work, p, entailed, opt, stats_);
    if (opt.budget) search.set_deadline(start + *opt.budget);
    search.bound_root();
    search.run();
    if (!search.found()) infeasible(problem);

    detail::TaggedAtoms atoms = root_atoms(p);
    for (const auto& a : search.best_atoms()) atoms.push_back(a);

    Solution s;
    s.assignment = detail::finalize(problem, std::move(atoms));
    s.satisfied_weight = search.best_weight();
    s.total_soft_weight = p.total;
    for (const auto& [c, i] : search.best_top_choices()) s.branch_choices[p.labels[c]] = i;
    s.optimal = !search.stopped();
    s.skeleton = search.best_decisions();
    s.solve_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return s;
  }

  [[noreturn]] void infeasible(const LayoutProblem& problem) {
    auto labels = explain_infeasible(problem);
    std::string msg;
    for (const auto& l : labels) msg += (msg.empty() ? "" : ", ") + l;
    throw Error(ErrorCode::HardInfeasible, "conflicting hard clauses: " + msg, labels);
  }

  // Root constraints live in one scope each, so a changed suffix can be
  // replaced without touching the unchanged prefix.
  void sync_root(const detail::Prepared& p) {
    std::vector<Formula> want;
    std::size_t atoms = 0;
    for (std::size_t c = 0; c < p.size(); ++c)
      if (p.hard[c] && p.or_free[c]) {
        want.push_back(p.formulas[c]);
        for_each_atom(p.formulas[c], [&](const Atom&) { ++atoms; });
      }
    // rows of constraints dropped earlier linger; start over once they dominate
    if (tableau_.nrows() > 2 * atoms + 64) reset();
    std::size_t keep = 0;
    while (keep < want.size() && keep < root_.size() && want[keep] == root_[keep]) ++keep;
    if (keep < root_.size()) {
      tableau_.pop(root_marks_[keep]);
      root_.erase(root_.begin() + static_cast<std::ptrdiff_t>(keep), root_.end());
      root_marks_.resize(keep);
    }
    for (std::size_t i = keep; i < want.size(); ++i) {
      root_marks_.push_back(tableau_.open_scope());
      for_each_atom(want[i], [&](const Atom& a) { tableau_.assert_atom(tableau_.compile(a)); });
      root_.push_back(want[i]);
    }
  }

  detail::TaggedAtoms root_atoms(const detail::Prepared& p) const {
    detail::TaggedAtoms out;
    for (std::size_t c = 0; c < p.size(); ++c)
      if (p.hard[c] && p.or_free[c])
        for_each_atom(p.formulas[c],
                      [&](const Atom& a) { out.emplace_back(static_cast<int>(c), &a); });
    return out;
  }

  // Sufficient test: every atom of an Or-free formula holds everywhere in
  // the root polytope.
  bool entailed_at_root(const Formula& f) {
    bool all = true;
    for_each_atom(f, [&](const Atom& a) {
      if (!all) return;
      const auto& terms = a.lhs.terms();
      if (terms.empty()) {
        all = holds(a, a.lhs.constant(), lp::kFeasTol);
        return;
      }
      double lo, hi;
      if (terms.size() == 1) {
        const auto& [v, k] = *terms.begin();
        auto [l, u] = tableau_.bounds(v);
        lo = k > 0 ? k * l : k * u;
        hi = k > 0 ? k * u : k * l;
      } else {
        auto rmin = tableau_.optimize(a.lhs, lp::Direction::Min, false);
        auto rmax = tableau_.optimize(a.lhs, lp::Direction::Max, false);
        lo = rmin.status == lp::Status::Optimal ? rmin.value : -lp::Tableau::kInf;
        hi = rmax.status == lp::Status::Optimal ? rmax.value : lp::Tableau::kInf;
        all = all && std::isfinite(lo) && std::isfinite(hi);
        if (!all) return;
        all = holds(a, lo, lp::kFeasTol) && holds(a, hi, lp::kFeasTol);
        return;
      }
      const double c = a.lhs.constant();
      if (!std::isfinite(lo) || !std::isfinite(hi)) {
        all = (a.rel == Rel::LE && hi + c <= lp::kFeasTol) ||
              (a.rel == Rel::GE && lo + c >= -lp::kFeasTol);
        return;
      }
      all = holds(a, lo + c, lp::kFeasTol) && holds(a, hi + c, lp::kFeasTol);
    });
    return all;
  }

  lp::Tableau tableau_;
  std::vector<Formula> root_;
  std::vector<lp::ContextMark> root_marks_;
  SolveStats stats_;
};

/// Solves from scratch.
inline Solution solve(const LayoutProblem& problem,
                      std::optional<std::chrono::milliseconds> budget = std::nullopt) {
  OrcSolver s;
  SolveOptions opt;
  opt.budget = budget;
  return s.solve(problem, opt);
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

inline constexpr std::size_t kOracleMaxDisjunctions = 20;
inline constexpr std::size_t kOracleMaxSoft = 16;

namespace detail {

struct Option {
  std::vector<int> decisions;
  std::vector<const Atom*> atoms;
};

inline std::vector<Option> options_of(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::atom:
      return {Option{{}, {&f.atom()}}};
    case Formula::Kind::all: {
      std::vector<Option> acc{Option{}};
      for (const auto& k : f.children()) {
        std::vector<Option> next;
        for (const auto& a : acc)
          for (const auto& b : options_of(k)) {
            Option o = a;
            o.decisions.insert(o.decisions.end(), b.decisions.begin(), b.decisions.end());
            o.atoms.insert(o.atoms.end(), b.atoms.begin(), b.atoms.end());
            next.push_back(std::move(o));
          }
        acc = std::move(next);
      }
      return acc;
    }
    case Formula::Kind::any: {
      std::vector<Option> out;
      auto kids = f.children();
      for (std::size_t i = 0; i < kids.size(); ++i)
        for (auto o : options_of(kids[i])) {
          o.decisions.insert(o.decisions.begin(), static_cast<int>(i));
          out.push_back(std::move(o));
        }
      return out;
    }
    case Formula::Kind::negation:
      break;
  }
  throw Error(ErrorCode::BadPatternArgs, "formula not in negation normal form");
}

inline std::size_t count_or(const Formula& f) {
  std::size_t n = f.kind() == Formula::Kind::any ? 1 : 0;
  for (const auto& k : f.children()) n += count_or(k);
  return n;
}

}  // namespace detail

/// Called for every feasible skeleton visited: decisions and satisfied weight.
using SkeletonVisitor = std::function<void(const std::vector<int>&, double)>;

/// Exact optimum by enumerating disjunct selections and soft-clause
/// subsets, re-checking each partial selection with a fresh LP. With a
/// visitor, weight pruning is off and every feasible skeleton is reported.
inline Solution brute_force_solve(const LayoutProblem& problem, const SkeletonVisitor& visit = {}) {
  const auto start = std::chrono::steady_clock::now();
  detail::Prepared p(problem.clauses(), problem.epsilon());
  std::size_t ors = 0, softs = 0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    ors += detail::count_or(p.formulas[c]);
    softs += !p.hard[c];
  }
  if (ors > kOracleMaxDisjunctions || softs > kOracleMaxSoft)
    throw Error(ErrorCode::TooLargeForOracle, std::to_string(ors) + " disjunctions, " +
                                                  std::to_string(softs) + " soft clauses");

  std::vector<std::vector<detail::Option>> opts(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    auto base = detail::options_of(p.formulas[c]);
    if (p.hard[c]) {
      opts[c] = std::move(base);
    } else {
      for (auto& o : base) {
        o.decisions.insert(o.decisions.begin(), 0);
        opts[c].push_back(std::move(o));
      }
      opts[c].push_back(detail::Option{{1}, {}});
    }
  }
  std::vector<double> suffix(p.size() + 1, 0.0);
  for (std::size_t c = p.size(); c-- > 0;) suffix[c] = suffix[c + 1] + p.weight[c];
  const double tol = detail::weight_tol(p.total);

  bool have = false;
  double best = 0.0;
  std::vector<std::size_t> best_pick, pick(p.size());

  // a fresh LP over the clauses picked so far
  auto consistent = [&](std::size_t upto) {
    lp::Tableau t;
    t.open_scope();
    for (std::size_t k = 0; k < upto; ++k)
      for (const Atom* a : opts[k][pick[k]].atoms) t.assert_atom(t.compile(*a));
    return t.feasible();
  };

  std::function<void(std::size_t, double)> rec = [&](std::size_t c, double w) {
    if (!visit && have && w + suffix[c] <= best + tol) return;
    if (c > 0 && !opts[c - 1][pick[c - 1]].atoms.empty() && !consistent(c)) return;
    if (c == p.size()) {
      if (visit) {
        std::vector<int> dec;
        for (std::size_t k = 0; k < p.size(); ++k) {
          const auto& d = opts[k][pick[k]].decisions;
          dec.insert(dec.end(), d.begin(), d.end());
        }
        visit(dec, w);
      }
      if (!have || w > best + tol) {
        have = true;
        best = w;
        best_pick = pick;
      }
      return;
    }
    for (std::size_t i = 0; i < opts[c].size(); ++i) {
      pick[c] = i;
      const bool paid = !p.hard[c] && opts[c][i].decisions == std::vector<int>{1};
      rec(c + 1, w + (p.hard[c] || paid ? 0.0 : p.weight[c]));
    }
  };
  rec(0, 0.0);
  if (!have) {
    auto labels = explain_infeasible(problem);
    throw Error(ErrorCode::HardInfeasible, "hard clauses are unsatisfiable", labels);
  }

  detail::TaggedAtoms atoms;
  Solution s;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const auto& o = opts[c][best_pick[c]];
    for (const Atom* a : o.atoms) atoms.emplace_back(static_cast<int>(c), a);
    s.skeleton.insert(s.skeleton.end(), o.decisions.begin(), o.decisions.end());
    const auto& d = o.decisions;
    const std::size_t at = p.hard[c] ? 0 : 1;
    if (p.formulas[c].kind() == Formula::Kind::any && d.size() > at &&
        !(!p.hard[c] && d[0] == 1))
      s.branch_choices[p.labels[c]] = d[at];
  }
  s.assignment = detail::finalize(problem, std::move(atoms));
  s.satisfied_weight = best;
  s.total_soft_weight = p.total;
  s.optimal = true;
  s.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                   .count();
  return s;
}

// ---------------------------------------------------------------------------
// Edits

struct WidgetChange {
  enum class Kind { add, remove, retarget };
  Kind kind = Kind::add;
  Widget widget;  // for remove only the id is used
};

struct EditBatch {
  std::vector<std::string> remove;
  std::vector<Clause> add;
  std::vector<WidgetChange> widget_changes;
  std::optional<Viewport> viewport;
  /// Replaces the set of pattern-managed widgets when present.
  std::optional<std::set<std::string>> managed_size;
  /// Final clause and widget order; unlisted entries keep their relative
  /// order after the listed ones. Empty: added entries go last.
  std::vector<std::string> clause_order;
  std::vector<std::string> widget_order;

  /// No change to clauses, widgets, window or managed set (order aside).
  bool empty() const {
    return remove.empty() && add.empty() && widget_changes.empty() && !viewport && !managed_size;
  }
};

/// The problem after `edits`; auto clauses are regenerated for the new
/// widget set.
inline LayoutProblem apply_edits(const LayoutProblem& problem, const EditBatch& edits) {
  struct Item {
    Clause clause;
    char checked;
  };
  std::unordered_set<std::string> gone(edits.remove.begin(), edits.remove.end());
  std::vector<Item> items;
  const auto& all = problem.clauses();
  for (std::size_t i = problem.auto_clause_count(); i < all.size(); ++i) {
    if (gone.erase(all[i].label)) continue;
    items.push_back({all[i], 1});
  }
  if (!gone.empty()) {
    for (const auto& label : edits.remove)
      if (gone.count(label)) throw Error(ErrorCode::UnknownLabelInRemove, label, {label});
  }
  std::vector<Widget> widgets = problem.widgets();
  AssembleOptions options = problem.options();
  bool dropped = false;
  for (const auto& ch : edits.widget_changes) {
    auto it = std::find_if(widgets.begin(), widgets.end(),
                           [&](const Widget& w) { return w.id == ch.widget.id; });
    switch (ch.kind) {
      case WidgetChange::Kind::add:
        widgets.push_back(ch.widget);
        break;
      case WidgetChange::Kind::remove:
        if (it == widgets.end()) throw Error(ErrorCode::UnknownTargetWidget, ch.widget.id);
        widgets.erase(it);
        options.managed_size.erase(ch.widget.id);
        dropped = true;
        break;
      case WidgetChange::Kind::retarget:
        if (it == widgets.end()) throw Error(ErrorCode::UnknownTargetWidget, ch.widget.id);
        *it = ch.widget;
        break;
    }
  }
  // a removed widget may leave kept clauses pointing at its variables
  if (dropped)
    for (auto& item : items) item.checked = 0;
  for (const auto& c : edits.add) items.push_back({c, 0});
  if (edits.managed_size) options.managed_size = *edits.managed_size;
  auto reorder = [](auto& xs, const std::vector<std::string>& order, auto key) {
    if (order.empty()) return;
    std::unordered_map<std::string_view, std::size_t> rank;
    for (std::size_t i = 0; i < order.size(); ++i) rank.emplace(order[i], i);
    auto at = [&](const auto& x) {
      auto r = rank.find(key(x));
      return r == rank.end() ? order.size() : r->second;
    };
    std::stable_sort(xs.begin(), xs.end(), [&](const auto& a, const auto& b) { return at(a) < at(b); });
  };
  reorder(items, edits.clause_order, [](const Item& c) -> std::string_view { return c.clause.label; });
  reorder(widgets, edits.widget_order, [](const Widget& w) -> std::string_view { return w.id; });
  std::vector<Clause> clauses;
  std::vector<char> checked;
  clauses.reserve(items.size());
  checked.reserve(items.size());
  for (auto& item : items) {
    clauses.push_back(std::move(item.clause));
    checked.push_back(item.checked);
  }
  return assemble_problem(std::move(widgets), edits.viewport.value_or(problem.viewport()),
                          std::move(clauses), std::move(options), &checked);
}

/// The edits turning `from` into `to`: clauses are matched by label, and a
/// changed clause is removed and re-added.
inline EditBatch diff_problems(const LayoutProblem& from, const LayoutProblem& to) {
  EditBatch e;
  const std::vector<Clause> from_clauses = from.user_clauses(), to_clauses = to.user_clauses();
  std::map<std::string, const Clause*> old;
  for (const auto& c : from_clauses) old[c.label] = &c;
  std::set<std::string> kept;
  for (const auto& c : to_clauses) {
    auto it = old.find(c.label);
    if (it != old.end() && *it->second == c) {
      kept.insert(c.label);
      continue;
    }
    e.add.push_back(c);
  }
  for (const auto& c : from_clauses)
    if (!kept.count(c.label)) e.remove.push_back(c.label);

  std::map<std::string, const Widget*> before;
  for (const auto& w : from.widgets()) before[w.id] = &w;
  std::set<std::string> present;
  for (const auto& w : to.widgets()) {
    present.insert(w.id);
    auto it = before.find(w.id);
    if (it == before.end()) e.widget_changes.push_back({WidgetChange::Kind::add, w});
    else if (!(*it->second == w)) e.widget_changes.push_back({WidgetChange::Kind::retarget, w});
  }
  for (const auto& w : from.widgets())
    if (!present.count(w.id)) e.widget_changes.push_back({WidgetChange::Kind::remove, w});
  if (!(from.viewport() == to.viewport())) e.viewport = to.viewport();
  if (from.options().managed_size != to.options().managed_size) e.managed_size = to.options().managed_size;
  for (const auto& c : to_clauses) e.clause_order.push_back(c.label);
  for (const auto& w : to.widgets()) e.widget_order.push_back(w.id);
  return e;
}

/// Applies `edits` to the already solved `problem` and re-solves. Kept
/// clauses are not re-validated, and a solver that handled `problem` keeps
/// its root LP state for the unchanged prefix. `prev` does not steer the
/// search: the result equals a fresh solve of the edited problem.
inline std::pair<LayoutProblem, Solution> resolve_incremental(
    const LayoutProblem& problem, [[maybe_unused]] const Solution& prev, const EditBatch& edits,
    std::optional<std::chrono::milliseconds> budget = std::nullopt,
    OrcSolver* solver = nullptr) {
  LayoutProblem next = apply_edits(problem, edits);
  SolveOptions opt;
  opt.budget = budget;
  OrcSolver local;
  Solution s = (solver ? *solver : local).solve(next, opt);
  return {std::move(next), std::move(s)};
}

}  // namespace orc
