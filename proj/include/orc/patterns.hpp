#pragma once

// Layout pattern templates. Each function returns the clauses that realize
// one pattern instance; compile() assembles instances into a problem.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "model.hpp"

namespace orc::patterns {

/// A rectangle whose edges are linear expressions (a widget's box or a
/// constant area).
struct Rect {
  LinExpr left, top, width, height;

  LinExpr right() const { return left + width; }
  LinExpr bottom() const { return top + height; }

  static Rect of(const std::string& id) {
    return {orc::left(id), orc::top(id), orc::width(id), orc::height(id)};
  }
  static Rect constant(double l, double t, double w, double h) {
    return {LinExpr(l), LinExpr(t), LinExpr(w), LinExpr(h)};
  }
};

/// Constant rectangle.
struct Box {
  double left = 0, top = 0, width = 0, height = 0;
  double right() const { return left + width; }
  double bottom() const { return top + height; }
  Rect rect() const { return Rect::constant(left, top, width, height); }
  bool operator==(const Box&) const = default;
};

struct Weights {
  double preferred = 2.0;
  double fallback = 1.0;
  double medium_keep = 8.0;  // A
  double medium_drop = 1.0;  // B
  double low_keep = 4.0;     // C
  double low_drop = 2.0;     // D
};

namespace detail {

// Main axis is the flow direction; cross axis is where rows stack.
struct Axis {
  bool vertical = false;

  LinExpr main(const std::string& id) const { return vertical ? top(id) : left(id); }
  LinExpr cross(const std::string& id) const { return vertical ? left(id) : top(id); }
  LinExpr main_size(const std::string& id) const { return vertical ? height(id) : width(id); }
  LinExpr cross_size(const std::string& id) const { return vertical ? width(id) : height(id); }
  LinExpr main_end(const std::string& id) const { return main(id) + main_size(id); }
  LinExpr cross_end(const std::string& id) const { return cross(id) + cross_size(id); }

  const LinExpr& main(const Rect& r) const { return vertical ? r.top : r.left; }
  const LinExpr& cross(const Rect& r) const { return vertical ? r.left : r.top; }
  LinExpr main_end(const Rect& r) const { return vertical ? r.bottom() : r.right(); }
  LinExpr cross_end(const Rect& r) const { return vertical ? r.right() : r.bottom(); }
};

inline Formula any_of(std::vector<Formula> kids) {
  return kids.size() == 1 ? kids.front() : Formula::Or(std::move(kids));
}
inline Formula all_of(std::vector<Formula> kids) {
  return kids.size() == 1 ? kids.front() : Formula::And(std::move(kids));
}

inline Formula contained(const Axis& ax, const std::string& id, const Rect& c) {
  return Formula::And({ge(ax.main(id), ax.main(c)), ge(ax.cross(id), ax.cross(c)),
                       le(ax.main_end(id), ax.main_end(c)), le(ax.cross_end(id), ax.cross_end(c))});
}

// "to the right" of the previous widget, on its row
inline Formula adjacent(const Axis& ax, const std::string& prev, const std::string& cur) {
  return Formula::And({eq(ax.main(cur), ax.main_end(prev)), eq(ax.cross(cur), ax.cross(prev))});
}

// "at the start of the next row": below every earlier widget, touching one
// of them (or one of `extra_rows`)
inline Formula next_row(const Axis& ax, const std::vector<std::string>& before,
                        const std::string& cur, const LinExpr& row_start,
                        const std::vector<LinExpr>& extra_rows = {}) {
  std::vector<Formula> kids{eq(ax.main(cur), row_start)};
  std::vector<Formula> touch;
  for (const auto& j : before) {
    kids.push_back(ge(ax.cross(cur), ax.cross_end(j)));
    touch.push_back(eq(ax.cross(cur), ax.cross_end(j)));
  }
  for (const auto& r : extra_rows) touch.push_back(eq(ax.cross(cur), r));
  kids.push_back(any_of(std::move(touch)));
  return Formula::And(std::move(kids));
}

inline void require_nonempty(const std::vector<std::string>& ids) {
  if (ids.empty()) throw Error(ErrorCode::EmptyWidgetList, "pattern needs at least one widget");
}

inline std::vector<Clause> flow(const Axis& ax, const std::vector<std::string>& ids, const Rect& c,
                                const std::string& prefix, const Weights& w) {
  require_nonempty(ids);
  std::vector<Clause> out;
  out.push_back(hard(prefix + ".first",
                     Formula::And({eq(ax.main(ids[0]), ax.main(c)), eq(ax.cross(ids[0]), ax.cross(c))})));
  for (const auto& id : ids) out.push_back(hard(prefix + ".contain." + id, contained(ax, id, c)));
  for (std::size_t i = 1; i < ids.size(); ++i) {
    std::vector<std::string> before(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(i));
    out.push_back(hard(prefix + ".wrap." + ids[i],
                       Formula::Or({adjacent(ax, ids[i - 1], ids[i]),
                                    next_row(ax, before, ids[i], ax.main(c))})));
    out.push_back(soft(prefix + ".adjacent." + ids[i], w.preferred, adjacent(ax, ids[i - 1], ids[i])));
  }
  return out;
}

}  // namespace detail

/// Left-to-right flow that wraps into rows.
inline std::vector<Clause> flow_horizontal(const std::vector<std::string>& ids, const Rect& container,
                                           const std::string& prefix, const Weights& w = {}) {
  return detail::flow({false}, ids, container, prefix, w);
}

/// Top-to-bottom flow that wraps into columns.
inline std::vector<Clause> flow_vertical(const std::vector<std::string>& ids, const Rect& container,
                                         const std::string& prefix, const Weights& w = {}) {
  return detail::flow({true}, ids, container, prefix, w);
}

/// Horizontal or vertical flow, chosen by the solver. All pairs share one
/// orientation through a single disjunction of the two per-pair
/// conjunctions.
inline std::vector<Clause> flow_either(const std::vector<std::string>& ids, const Rect& c,
                                       const std::string& prefix, const Weights& w = {}) {
  detail::require_nonempty(ids);
  const detail::Axis h{false}, v{true};
  std::vector<Clause> out;
  out.push_back(hard(prefix + ".first", Formula::And({eq(left(ids[0]), c.left), eq(top(ids[0]), c.top)})));
  for (const auto& id : ids) out.push_back(hard(prefix + ".contain." + id, detail::contained(h, id, c)));
  if (ids.size() < 2) return out;
  std::vector<Formula> hpairs, vpairs;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    std::vector<std::string> before(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(i));
    hpairs.push_back(Formula::Or({detail::adjacent(h, ids[i - 1], ids[i]),
                                  detail::next_row(h, before, ids[i], c.left)}));
    vpairs.push_back(Formula::Or({detail::adjacent(v, ids[i - 1], ids[i]),
                                  detail::next_row(v, before, ids[i], c.top)}));
  }
  out.push_back(hard(prefix + ".orientation",
                     Formula::Or({detail::all_of(hpairs), detail::all_of(vpairs)})));
  for (std::size_t i = 1; i < ids.size(); ++i) {
    out.push_back(soft(prefix + ".h.adjacent." + ids[i], w.preferred, detail::adjacent(h, ids[i - 1], ids[i])));
    out.push_back(soft(prefix + ".v.adjacent." + ids[i], w.preferred, detail::adjacent(v, ids[i - 1], ids[i])));
  }
  return out;
}

/// A group that stacks its children vertically or lines them up
/// horizontally, whichever fits.
inline std::vector<Clause> rotation_group(const std::string& group,
                                          const std::vector<std::string>& children,
                                          const std::string& prefix) {
  if (children.empty()) throw Error(ErrorCode::EmptyChildList, "rotation group " + group);
  auto arrangement = [&](const detail::Axis& ax) {
    // the group's main size is the sum; its cross size is the max
    LinExpr sum;
    for (const auto& ch : children) sum += ax.main_size(ch);
    std::vector<Formula> kids{eq(ax.main_size(group), sum)};
    std::vector<Formula> touch;
    for (const auto& ch : children) {
      kids.push_back(ge(ax.cross_size(group), ax.cross_size(ch)));
      touch.push_back(eq(ax.cross_size(group), ax.cross_size(ch)));
    }
    kids.push_back(detail::any_of(std::move(touch)));
    for (std::size_t i = 0; i < children.size(); ++i) {
      kids.push_back(eq(ax.main(children[i]), i == 0 ? ax.main(group) : ax.main_end(children[i - 1])));
      kids.push_back(eq(ax.cross(children[i]), ax.cross(group)));
    }
    return Formula::And(std::move(kids));
  };
  return {hard(prefix + ".rotate", Formula::Or({arrangement({true}), arrangement({false})}))};
}

/// Equal sizes across sub-layouts: every widget matches the first one.
inline std::vector<Clause> cross_cutting_equalize(const std::vector<std::vector<std::string>>& groups,
                                                  const std::string& prefix, const Weights& w = {}) {
  std::vector<std::string> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  if (all.size() < 2) throw Error(ErrorCode::FewerThanTwoWidgets, "equalize needs two widgets");
  std::vector<Clause> out;
  for (std::size_t i = 1; i < all.size(); ++i)
    out.push_back(soft(prefix + ".equal." + all[i], w.preferred,
                       Formula::And({eq(width(all[i]), width(all[0])),
                                     eq(height(all[i]), height(all[0]))})));
  return out;
}

/// Number of widgets that go into the top area of a connected flow.
inline std::size_t connected_top_count(double window_width, double widget_width, std::size_t n) {
  if (!(widget_width > 0)) throw Error(ErrorCode::ZeroWidgetWidth, "connected flow widget width");
  const double t = std::floor(window_width / widget_width);
  return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(n)));
}

/// Two toolbars sharing one widget sequence: a horizontal flow on top
/// holding as many widgets as the window width allows, the rest flowing
/// vertically on the left.
inline std::vector<Clause> connected_flow(const Rect& area_top, const Rect& area_left,
                                          const std::vector<std::string>& ids, double widget_width,
                                          double window_width, const std::string& prefix,
                                          const Weights& w = {}) {
  detail::require_nonempty(ids);
  const std::size_t t = connected_top_count(window_width, widget_width, ids.size());
  std::vector<std::string> top_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(t));
  std::vector<std::string> left_ids(ids.begin() + static_cast<std::ptrdiff_t>(t), ids.end());
  std::vector<Clause> out;
  if (!top_ids.empty()) out = flow_horizontal(top_ids, area_top, prefix + ".top", w);
  if (!left_ids.empty()) {
    auto more = flow_vertical(left_ids, area_left, prefix + ".left", w);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

inline std::vector<std::size_t> factors(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= n; ++k)
    if (n % k == 0) out.push_back(k);
  return out;
}

/// Per-row counts to try, best first: closest to the count that fits the
/// width, ties toward the larger factor.
inline std::vector<std::size_t> balanced_row_counts(std::size_t n, double available_width,
                                                    double widget_width) {
  if (!(widget_width > 0)) throw Error(ErrorCode::ZeroWidgetWidth, "balanced flow widget width");
  const double p = std::clamp(std::floor(available_width / widget_width), 1.0, static_cast<double>(n));
  auto f = factors(n);
  std::stable_sort(f.begin(), f.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(static_cast<double>(a) - p), db = std::abs(static_cast<double>(b) - p);
    return da != db ? da < db : a > b;
  });
  return f;
}

/// Rows of equal length, the length being a factor of the widget count.
inline std::vector<Clause> balanced_flow(const std::vector<std::string>& ids, const Rect& c,
                                         double widget_width, double available_width,
                                         const std::string& prefix) {
  detail::require_nonempty(ids);
  const detail::Axis h{false};
  std::vector<Clause> out;
  for (const auto& id : ids) out.push_back(hard(prefix + ".contain." + id, detail::contained(h, id, c)));
  std::vector<Formula> same;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    same.push_back(eq(width(ids[i]), width(ids[0])));
    same.push_back(eq(height(ids[i]), height(ids[0])));
  }
  if (!same.empty()) out.push_back(hard(prefix + ".same_size", detail::all_of(std::move(same))));

  std::vector<Formula> arrangements;
  for (std::size_t k : balanced_row_counts(ids.size(), available_width, widget_width)) {
    std::vector<Formula> kids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool row_start = i % k == 0;
      kids.push_back(eq(left(ids[i]), row_start ? c.left : right(ids[i - 1])));
      kids.push_back(eq(top(ids[i]), i < k ? c.top : bottom(ids[i - k])));
    }
    arrangements.push_back(Formula::And(std::move(kids)));
  }
  out.push_back(hard(prefix + ".rows", detail::any_of(std::move(arrangements))));
  return out;
}

/// The sub-layout sits in one of several slots, earlier slots first.
inline std::vector<Clause> alternative_positions(const std::string& id, const std::vector<Rect>& slots,
                                                 const std::string& prefix) {
  if (slots.size() < 2) throw Error(ErrorCode::FewerThanTwoSlots, id);
  std::vector<Formula> kids;
  for (const auto& s : slots)
    kids.push_back(Formula::And({eq(left(id), s.left), eq(top(id), s.top), le(right(id), s.right()),
                                 le(bottom(id), s.bottom())}));
  return {hard(prefix + ".slot", Formula::Or(std::move(kids)))};
}

namespace detail {
inline Formula at_size(const std::string& id, double w, double h) {
  return Formula::And({eq(width(id), w), eq(height(id), h)});
}
inline Formula at_least(const std::string& id, double w, double h) {
  return Formula::And({ge(width(id), w), ge(height(id), h)});
}
}  // namespace detail

/// Either the primary widget or its replacement is shown, at the same
/// place; the primary is preferred.
inline std::vector<Clause> alternative_widgets(const Widget& primary, const Widget& fallback,
                                               const std::string& prefix, const Weights& w = {}) {
  if (primary.id == fallback.id) throw Error(ErrorCode::SameWidget, primary.id);
  const auto& p = primary.id;
  const auto& f = fallback.id;
  auto hidden = [](const std::string& id) { return detail::at_size(id, 0, 0); };
  // the shown widget's size is left to the preferred-size objective
  Formula first = Formula::And({detail::at_least(p, primary.min.w, primary.min.h), hidden(f)});
  Formula second = Formula::And({hidden(p), detail::at_least(f, fallback.min.w, fallback.min.h)});
  return {
      hard(prefix + ".choose", Formula::Or({first, second})),
      hard(prefix + ".colocate", Formula::And({eq(left(f), left(p)), eq(top(f), top(p))})),
      soft(prefix + ".primary", w.preferred, first),
      soft(prefix + ".fallback", w.fallback, second),
  };
}

/// Shown at preferred size or hidden (size 0); lower priorities give way
/// first.
inline std::vector<Clause> optional_widget(const Widget& widget, Priority priority,
                                           const std::string& prefix, const Weights& w = {}) {
  const auto& id = widget.id;
  Formula keep = detail::at_size(id, widget.pref.w, widget.pref.h);
  Formula drop = detail::at_size(id, 0, 0);
  if (priority == Priority::high) return {hard(prefix + ".keep", keep)};
  const bool medium = priority == Priority::medium;
  return {hard(prefix + ".either", Formula::Or({keep, drop})),
          soft(prefix + ".keep", medium ? w.medium_keep : w.low_keep, keep),
          soft(prefix + ".drop", medium ? w.medium_drop : w.low_drop, drop)};
}

/// Horizontal flow around a fixed rectangle inside the container.
inline std::vector<Clause> flow_around_fixed(const std::vector<std::string>& ids, const Box& fixed,
                                             const Rect& c, const std::string& prefix,
                                             const Weights& w = {}) {
  detail::require_nonempty(ids);
  const detail::Axis h{false};
  const double fl = fixed.left, fr = fixed.right(), ft = fixed.top, fb = fixed.bottom();

  // vertical overlap with the fixed rows, as strict inequalities
  auto shares_row = [&](const std::string& id) {
    return Formula::And({Formula::Not(ge(top(id), fb)), Formula::Not(le(bottom(id), ft))});
  };

  // above, below, or beside the fixed area; beside only when sharing its rows
  auto avoid = [&](const std::string& id) {
    return Formula::Or({le(bottom(id), ft), ge(top(id), fb), Formula::And({shares_row(id), le(right(id), fl)}),
                        Formula::And({shares_row(id), ge(left(id), fr)})});
  };

  std::vector<Clause> out;
  out.push_back(hard(prefix + ".first",
                     Formula::Or({Formula::And({eq(left(ids[0]), c.left), eq(top(ids[0]), c.top)}),
                                  Formula::And({eq(left(ids[0]), fr), eq(top(ids[0]), c.top)})})));
  const std::vector<LinExpr> below_fixed{LinExpr(fb)};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& cur = ids[i];
    out.push_back(hard(prefix + ".contain." + cur, detail::contained(h, cur, c)));
    if (i == 0) {
      out.push_back(hard(prefix + ".avoid." + cur, avoid(cur)));
      continue;
    }
    const auto& prev = ids[i - 1];
    std::vector<std::string> before(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(i));
    Formula jump = Formula::And({eq(top(cur), top(prev)), le(right(prev), fl), eq(left(cur), fr),
                                 shares_row(cur)});
    Formula row_start = detail::next_row(h, before, cur, c.left, below_fixed);
    Formula row_after_fixed = detail::next_row(h, before, cur, LinExpr(fr), below_fixed);
    out.push_back(hard(prefix + ".wrap." + cur,
                       Formula::Or({detail::adjacent(h, prev, cur), jump, row_start, row_after_fixed})));
    out.push_back(hard(prefix + ".avoid." + cur, avoid(cur)));
    out.push_back(soft(prefix + ".same_row." + cur, w.preferred, eq(top(cur), top(prev))));
    out.push_back(soft(prefix + ".next_row." + cur, w.fallback, row_start));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instances

enum class Kind {
  flow_h,
  flow_v,
  flow_either,
  rotation_group,
  cross_cut_equalize,
  connected_flow,
  balanced_flow,
  alt_positions,
  alt_widgets,
  optional_widget,
  flow_around_fixed,
};

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::flow_h: return "hflow";
    case Kind::flow_v: return "vflow";
    case Kind::flow_either: return "eitherflow";
    case Kind::rotation_group: return "rotate_group";
    case Kind::cross_cut_equalize: return "equalize";
    case Kind::connected_flow: return "connected";
    case Kind::balanced_flow: return "balanced";
    case Kind::alt_positions: return "alt_positions";
    case Kind::alt_widgets: return "alt_widgets";
    case Kind::optional_widget: return "optional";
    case Kind::flow_around_fixed: return "flow_around";
  }
  return "?";
}

/// A container reference: the whole window, a widget's box, or a constant
/// rectangle.
struct Region {
  enum class Kind { root, widget, box };
  Kind kind = Kind::root;
  std::string widget;
  Box box;

  static Region root() { return {}; }
  static Region of(std::string id) { return {Kind::widget, std::move(id), {}}; }
  static Region constant(Box b) { return {Kind::box, {}, b}; }

  Rect rect(const Viewport& vp) const {
    switch (kind) {
      case Kind::root: return Rect::constant(0, 0, vp.width, vp.height);
      case Kind::widget: return Rect::of(widget);
      case Kind::box: return box.rect();
    }
    return {};
  }
  /// Width when known without solving (root or constant).
  std::optional<double> known_width(const Viewport& vp) const {
    if (kind == Kind::root) return vp.width;
    if (kind == Kind::box) return box.width;
    return std::nullopt;
  }
  bool operator==(const Region&) const = default;
};

struct PatternInstance {
  Kind kind = Kind::flow_h;
  /// Ordered widget ids: flow items, rotation children, the optional
  /// widget, or {primary, fallback}.
  std::vector<std::string> targets;
  Region container;
  std::string group;                             // rotation group widget
  std::vector<std::vector<std::string>> groups;  // equalize
  Region area_top, area_left;                    // connected flow
  std::vector<Region> slots;                     // alternative positions
  Box fixed;                                     // flow around fixed
  std::optional<Priority> priority;              // optional widget; default: the widget's
  std::string label_prefix;                      // default "p<index>.<kind>"
  bool operator==(const PatternInstance&) const = default;
};

namespace detail {

inline const Widget& find(const std::vector<Widget>& ws, const std::string& id) {
  for (const auto& w : ws)
    if (w.id == id) return w;
  throw Error(ErrorCode::UnknownTargetWidget, id, {id});
}

inline void check_region(const std::vector<Widget>& ws, const Region& r) {
  if (r.kind == Region::Kind::widget) find(ws, r.widget);
}

}  // namespace detail

/// Clauses of one instance.
inline std::vector<Clause> emit(const PatternInstance& in, const std::vector<Widget>& widgets,
                                const Viewport& vp, const std::string& prefix, const Weights& w = {}) {
  for (const auto& id : in.targets) detail::find(widgets, id);
  for (const auto& g : in.groups)
    for (const auto& id : g) detail::find(widgets, id);
  detail::check_region(widgets, in.container);
  const Rect c = in.container.rect(vp);

  auto common_width = [&]() {
    detail::require_nonempty(in.targets);
    return detail::find(widgets, in.targets.front()).pref.w;
  };

  switch (in.kind) {
    case Kind::flow_h: return flow_horizontal(in.targets, c, prefix, w);
    case Kind::flow_v: return flow_vertical(in.targets, c, prefix, w);
    case Kind::flow_either: return flow_either(in.targets, c, prefix, w);
    case Kind::rotation_group:
      detail::find(widgets, in.group);
      return rotation_group(in.group, in.targets, prefix);
    case Kind::cross_cut_equalize: return cross_cutting_equalize(in.groups, prefix, w);
    case Kind::connected_flow:
      detail::check_region(widgets, in.area_top);
      detail::check_region(widgets, in.area_left);
      return connected_flow(in.area_top.rect(vp), in.area_left.rect(vp), in.targets, common_width(),
                            vp.width, prefix, w);
    case Kind::balanced_flow:
      return balanced_flow(in.targets, c, common_width(), in.container.known_width(vp).value_or(vp.width),
                           prefix);
    case Kind::alt_positions: {
      if (in.targets.size() != 1) throw Error(ErrorCode::BadPatternArgs, "alt_positions takes one item");
      std::vector<Rect> slots;
      for (const auto& s : in.slots) {
        detail::check_region(widgets, s);
        slots.push_back(s.rect(vp));
      }
      return alternative_positions(in.targets[0], slots, prefix);
    }
    case Kind::alt_widgets:
      if (in.targets.size() != 2) throw Error(ErrorCode::BadPatternArgs, "alt_widgets takes two widgets");
      return alternative_widgets(detail::find(widgets, in.targets[0]), detail::find(widgets, in.targets[1]),
                                 prefix, w);
    case Kind::optional_widget:
      if (in.targets.size() != 1) throw Error(ErrorCode::BadPatternArgs, "optional takes one widget");
      {
        const Widget& ow = detail::find(widgets, in.targets[0]);
        return optional_widget(ow, in.priority.value_or(ow.priority), prefix, w);
      }
    case Kind::flow_around_fixed: {
      if (auto cw = in.container.known_width(vp)) {
        const Box outer = in.container.kind == Region::Kind::box
                              ? in.container.box
                              : Box{0, 0, vp.width, vp.height};
        const Box& f = in.fixed;
        const bool inside = f.width > 0 && f.height > 0 && f.left >= outer.left && f.top >= outer.top &&
                            f.right() <= outer.right() && f.bottom() <= outer.bottom();
        if (!inside) throw Error(ErrorCode::FixedOutsideContainer, "fixed area outside container");
        (void)cw;
      }
      return flow_around_fixed(in.targets, in.fixed, c, prefix, w);
    }
  }
  throw Error(ErrorCode::BadPatternArgs, "unknown pattern kind");
}

/// Widgets whose size a pattern controls (no automatic minimum or
/// preferred-size clauses).
inline std::set<std::string> managed_widgets(const std::vector<PatternInstance>& instances) {
  std::set<std::string> out;
  for (const auto& in : instances)
    if (in.kind == Kind::alt_widgets || in.kind == Kind::optional_widget)
      out.insert(in.targets.begin(), in.targets.end());
  return out;
}

inline std::string default_prefix(const PatternInstance& in, std::size_t index) {
  return in.label_prefix.empty() ? "p" + std::to_string(index) + "." + to_string(in.kind)
                                 : in.label_prefix;
}

/// All instances' clauses (in instance order) followed by `extra`, over
/// `widgets` in `viewport`.
inline LayoutProblem compile(const std::vector<PatternInstance>& instances,
                             const std::vector<Widget>& widgets, const Viewport& viewport,
                             std::vector<Clause> extra = {}, const Weights& w = {},
                             double epsilon = kDefaultEpsilon) {
  std::vector<Clause> clauses;
  std::set<std::string> prefixes;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string prefix = default_prefix(instances[i], i);
    if (!prefixes.insert(prefix).second)
      throw Error(ErrorCode::LabelCollision, "duplicate pattern label " + prefix, {prefix});
    auto cs = emit(instances[i], widgets, viewport, prefix, w);
    clauses.insert(clauses.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
  }
  const std::size_t pattern_clauses = clauses.size();
  clauses.insert(clauses.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  AssembleOptions opt;
  opt.epsilon = epsilon;
  opt.managed_size = managed_widgets(instances);
  try {
    return assemble_problem(widgets, viewport, std::move(clauses), std::move(opt));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DuplicateLabel) throw;
    (void)pattern_clauses;
    throw Error(ErrorCode::LabelCollision, e.what(), e.labels());
  }
}

}  // namespace orc::patterns
