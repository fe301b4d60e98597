#include <gtest/gtest.h>

#include <orc/patterns.hpp>
#include <orc/solver.hpp>

#include <random>

using namespace orc;
using namespace orc::patterns;

namespace {

Attr swap_axis(Attr a) {
  switch (a) {
    case Attr::left: return Attr::top;
    case Attr::top: return Attr::left;
    case Attr::width: return Attr::height;
    case Attr::height: return Attr::width;
  }
  return a;
}

Formula transpose(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::atom: {
      LinExpr e(f.atom().lhs.constant());
      for (const auto& [v, c] : f.atom().lhs.terms()) e += LinExpr::var({v.widget, swap_axis(v.attr)}, c);
      return Atom{e, f.atom().rel};
    }
    case Formula::Kind::negation: return Formula::Not(transpose(f.children()[0]));
    case Formula::Kind::all:
    case Formula::Kind::any: {
      std::vector<Formula> kids;
      for (const auto& k : f.children()) kids.push_back(transpose(k));
      return f.kind() == Formula::Kind::all ? Formula::And(std::move(kids)) : Formula::Or(std::move(kids));
    }
  }
  return f;
}

std::vector<Widget> fixed_widgets(int n, double w, double h, const std::string& stem = "w") {
  std::vector<Widget> out;
  for (int i = 0; i < n; ++i) out.push_back(Widget::fixed(stem + std::to_string(i), w, h));
  return out;
}

std::vector<std::string> ids_of(const std::vector<Widget>& ws) {
  std::vector<std::string> out;
  for (const auto& w : ws) out.push_back(w.id);
  return out;
}

PatternInstance instance(Kind k, std::vector<std::string> targets, Region container = Region::root()) {
  PatternInstance in;
  in.kind = k;
  in.targets = std::move(targets);
  in.container = std::move(container);
  return in;
}

struct Placed {
  double l, t, w, h;
};

Placed placed(const Solution& s, const std::string& id) {
  return {s.value({id, Attr::left}), s.value({id, Attr::top}), s.value({id, Attr::width}),
          s.value({id, Attr::height})};
}

bool overlap(const Placed& a, const Placed& b) {
  const double tol = 1e-6;
  return a.l + a.w > b.l + tol && b.l + b.w > a.l + tol && a.t + a.h > b.t + tol && b.t + b.h > a.t + tol;
}

void expect_disjoint_and_inside(const Solution& s, const std::vector<std::string>& ids, double W, double H) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Placed a = placed(s, ids[i]);
    EXPECT_GE(a.l, -1e-6);
    EXPECT_GE(a.t, -1e-6);
    EXPECT_LE(a.l + a.w, W + 1e-6) << ids[i];
    EXPECT_LE(a.t + a.h, H + 1e-6) << ids[i];
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      EXPECT_FALSE(overlap(a, placed(s, ids[j]))) << ids[i] << " " << ids[j];
  }
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::PivotLimit;
}

}  // namespace

TEST(Flow, VerticalIsTransposedHorizontal) {
  std::mt19937 rng(3);
  for (int n = 1; n <= 6; ++n) {
    auto ids = ids_of(fixed_widgets(n, 10, 10));
    std::shuffle(ids.begin(), ids.end(), rng);
    Rect c = Rect::of("box");
    auto h = flow_horizontal(ids, c, "p");
    auto v = flow_vertical(ids, c, "p");
    ASSERT_EQ(h.size(), v.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      EXPECT_EQ(transpose(h[i].formula), v[i].formula) << h[i].label;
      EXPECT_EQ(h[i].strength, v[i].strength);
      EXPECT_EQ(h[i].label, v[i].label);
    }
  }
}

TEST(Flow, ThreeWidgetsWrapToSecondRow) {
  auto ws = fixed_widgets(3, 50, 20);
  auto p = compile({instance(Kind::flow_h, ids_of(ws))}, ws, {120, 100});
  auto s = solve(p);
  EXPECT_TRUE(s.optimal);
  auto b = brute_force_solve(p);
  EXPECT_EQ(s.branch_choices, b.branch_choices);
  EXPECT_DOUBLE_EQ(s.satisfied_weight, b.satisfied_weight);
  EXPECT_DOUBLE_EQ(placed(s, "w1").l, 50);
  EXPECT_DOUBLE_EQ(placed(s, "w1").t, 0);
  EXPECT_DOUBLE_EQ(placed(s, "w2").l, 0);
  EXPECT_DOUBLE_EQ(placed(s, "w2").t, 20);
}

// Greedy row filling is the reference layout for fixed-size widgets.
TEST(Flow, WidthSweepMatchesGreedyRows) {
  for (int n : {1, 4, 5}) {
    auto ws = fixed_widgets(n, 50, 20);
    for (double W = 50; W <= 300; W += 10) {
      auto p = compile({instance(Kind::flow_h, ids_of(ws))}, ws, {W, 200});
      auto s = solve(p);
      const int per_row = static_cast<int>(W / 50);
      for (int i = 0; i < n; ++i) {
        Placed a = placed(s, ws[static_cast<std::size_t>(i)].id);
        EXPECT_DOUBLE_EQ(a.l, 50.0 * (i % per_row)) << "W=" << W << " i=" << i;
        EXPECT_DOUBLE_EQ(a.t, 20.0 * (i / per_row)) << "W=" << W << " i=" << i;
      }
      expect_disjoint_and_inside(s, ids_of(ws), W, 200);
    }
  }
}

TEST(Flow, VerticalSweepMatchesGreedyColumns) {
  auto ws = fixed_widgets(5, 20, 50);
  for (double H = 50; H <= 300; H += 25) {
    auto s = solve(compile({instance(Kind::flow_v, ids_of(ws))}, ws, {200, H}));
    const int per_col = static_cast<int>(H / 50);
    for (int i = 0; i < 5; ++i) {
      Placed a = placed(s, ws[static_cast<std::size_t>(i)].id);
      EXPECT_DOUBLE_EQ(a.t, 50.0 * (i % per_col));
      EXPECT_DOUBLE_EQ(a.l, 20.0 * (i / per_col));
    }
  }
}

TEST(Flow, EitherPicksOrientationThatFits) {
  auto ws = fixed_widgets(3, 30, 30);
  auto wide = solve(compile({instance(Kind::flow_either, ids_of(ws))}, ws, {100, 30}));
  EXPECT_DOUBLE_EQ(placed(wide, "w2").l, 60);
  auto tall = solve(compile({instance(Kind::flow_either, ids_of(ws))}, ws, {30, 100}));
  EXPECT_DOUBLE_EQ(placed(tall, "w2").t, 60);
  EXPECT_DOUBLE_EQ(placed(tall, "w2").l, 0);
}

TEST(Flow, InsideWidgetContainer) {
  auto ws = fixed_widgets(2, 20, 10);
  Widget bar;
  bar.id = "bar";
  bar.min = {0, 0};
  bar.pref = {40, 10};
  ws.push_back(bar);
  auto p = compile({instance(Kind::flow_h, {"w0", "w1"}, Region::of("bar"))}, ws, {100, 100},
                   {hard("place", Formula::And({eq(left("bar"), 30.0), eq(top("bar"), 5.0)}))});
  auto s = solve(p);
  EXPECT_DOUBLE_EQ(placed(s, "w0").l, 30);
  EXPECT_DOUBLE_EQ(placed(s, "w1").l, 50);
  EXPECT_DOUBLE_EQ(placed(s, "w1").t, 5);
}

TEST(Rotation, GroupPreferenceSelectsArrangement) {
  auto ws = fixed_widgets(3, 30, 10, "c");
  Widget g;
  g.id = "g";
  g.min = {0, 0};
  PatternInstance in;
  in.kind = Kind::rotation_group;
  in.group = "g";
  in.targets = ids_of(ws);
  for (auto [pref, vertical] : {std::pair{Size{30, 30}, true}, std::pair{Size{90, 10}, false}}) {
    g.pref = pref;
    auto all = ws;
    all.push_back(g);
    auto s = solve(compile({in}, all, {200, 200}, {hard("anchor", eq(left("g"), 0.0))}));
    EXPECT_DOUBLE_EQ(s.value({"g", Attr::width}), pref.w);
    EXPECT_DOUBLE_EQ(s.value({"g", Attr::height}), pref.h);
    Placed c2 = placed(s, "c2");
    EXPECT_DOUBLE_EQ(vertical ? c2.t - s.value({"g", Attr::top}) : c2.l, vertical ? 20 : 60);
  }
}

TEST(Rotation, FallsBackWhenPreferredDoesNotFit) {
  auto ws = fixed_widgets(3, 30, 10, "c");
  Widget g;
  g.id = "g";
  g.pref = {30, 30};
  ws.push_back(g);
  PatternInstance in;
  in.kind = Kind::rotation_group;
  in.group = "g";
  in.targets = {"c0", "c1", "c2"};
  auto s = solve(compile({in}, ws, {200, 15}, {hard("inside", le(bottom("g"), 15.0))}));
  EXPECT_DOUBLE_EQ(s.value({"g", Attr::width}), 90);
  EXPECT_DOUBLE_EQ(placed(s, "c2").l - placed(s, "c0").l, 60);
}

TEST(Equalize, SoftSizesAcrossGroups) {
  std::vector<Widget> ws{Widget{"a", {10, 10}, {40, 20}, {100, 100}}, Widget{"b", {10, 10}, {60, 20}, {100, 100}},
                         Widget{"c", {10, 10}, {50, 20}, {100, 100}}};
  PatternInstance in;
  in.kind = Kind::cross_cut_equalize;
  in.groups = {{"a"}, {"b", "c"}};
  auto s = solve(compile({in}, ws, {300, 300}));
  EXPECT_DOUBLE_EQ(s.value({"b", Attr::width}), s.value({"a", Attr::width}));
  EXPECT_DOUBLE_EQ(s.value({"c", Attr::width}), s.value({"a", Attr::width}));
}

TEST(Connected, TopCountFollowsWindowWidth) {
  for (double W : {0.0, 49.0, 50.0, 99.0, 100.0, 260.0, 1000.0})
    EXPECT_EQ(connected_top_count(W, 50, 5), static_cast<std::size_t>(std::min(5.0, std::floor(W / 50))));
  EXPECT_EQ(code_of([] { connected_top_count(100, 0, 3); }), ErrorCode::ZeroWidgetWidth);
}

TEST(Connected, SplitsBetweenToolbars) {
  auto ws = fixed_widgets(5, 50, 20);
  PatternInstance in = instance(Kind::connected_flow, ids_of(ws));
  in.area_top = Region::constant({0, 0, 10000, 20});
  in.area_left = Region::constant({0, 20, 50, 10000});
  auto s = solve(compile({in}, ws, {160, 300}));
  EXPECT_DOUBLE_EQ(placed(s, "w2").l, 100);
  EXPECT_DOUBLE_EQ(placed(s, "w2").t, 0);
  EXPECT_DOUBLE_EQ(placed(s, "w3").l, 0);
  EXPECT_DOUBLE_EQ(placed(s, "w3").t, 20);
  EXPECT_DOUBLE_EQ(placed(s, "w4").t, 40);
}

TEST(Balanced, RowCountOrder) {
  EXPECT_EQ(balanced_row_counts(6, 200, 50), (std::vector<std::size_t>{3, 6, 2, 1}));
  EXPECT_EQ(balanced_row_counts(6, 250, 50), (std::vector<std::size_t>{6, 3, 2, 1}));
  EXPECT_EQ(balanced_row_counts(6, 10, 50), (std::vector<std::size_t>{1, 2, 3, 6}));
  EXPECT_EQ(balanced_row_counts(7, 1000, 50), (std::vector<std::size_t>{7, 1}));
}

// Every row holds the same factor of n; the factor is the one closest to
// the fitting count among those that fit.
TEST(Balanced, RowsAreEqualFactorsAcrossWidths) {
  auto ws = fixed_widgets(6, 50, 20);
  for (double W = 50; W <= 400; W += 10) {
    auto s = solve(compile({instance(Kind::balanced_flow, ids_of(ws))}, ws, {W, 200}));
    std::map<double, int> per_row;
    for (const auto& w : ws) per_row[placed(s, w.id).t]++;
    const int k = per_row.begin()->second;
    for (auto [t, count] : per_row) EXPECT_EQ(count, k) << "W=" << W;
    EXPECT_EQ(6 % k, 0);
    const double p = std::clamp(std::floor(W / 50), 1.0, 6.0);
    int expect = 0;
    double best = 1e9;
    for (int f : {6, 3, 2, 1}) {
      if (50.0 * f > W) continue;
      if (std::abs(f - p) < best) best = std::abs(f - p), expect = f;
    }
    EXPECT_EQ(k, expect) << "W=" << W;
    expect_disjoint_and_inside(s, ids_of(ws), W, 200);
  }
}

TEST(AltPositions, FirstSlotThatFits) {
  std::vector<Widget> ws{Widget::fixed("tb", 40, 30)};
  PatternInstance in = instance(Kind::alt_positions, {"tb"});
  in.slots = {Region::constant({0, 0, 100, 20}), Region::constant({0, 0, 50, 100})};
  auto s = solve(compile({in}, ws, {100, 100}));
  EXPECT_EQ(s.branch_choices.at("p0.alt_positions.slot"), 1);
  ws[0] = Widget::fixed("tb", 40, 10);
  s = solve(compile({in}, ws, {100, 100}));
  EXPECT_EQ(s.branch_choices.at("p0.alt_positions.slot"), 0);
}

TEST(AltWidgets, PrimaryWhenRoomFallbackOtherwise) {
  std::vector<Widget> ws{Widget{"big", {60, 20}, {100, 20}, {100, 20}},
                         Widget{"small", {20, 20}, {20, 20}, {20, 20}}};
  PatternInstance in = instance(Kind::alt_widgets, {"big", "small"});
  auto roomy = solve(compile({in}, ws, {150, 50}));
  EXPECT_DOUBLE_EQ(roomy.value({"big", Attr::width}), 100);
  EXPECT_DOUBLE_EQ(roomy.value({"small", Attr::width}), 0);
  auto shrunk = solve(compile({in}, ws, {80, 50}));
  EXPECT_DOUBLE_EQ(shrunk.value({"big", Attr::width}), 80);
  auto tight = solve(compile({in}, ws, {40, 50}));
  EXPECT_DOUBLE_EQ(tight.value({"big", Attr::width}), 0);
  EXPECT_DOUBLE_EQ(tight.value({"small", Attr::width}), 20);
  EXPECT_DOUBLE_EQ(tight.value({"small", Attr::left}), tight.value({"big", Attr::left}));
}

// Shrinking the window never brings an optional widget back, and a low
// priority widget disappears no later than a medium one.
TEST(Optional, MonotoneDisappearance) {
  auto ws = fixed_widgets(4, 50, 20);
  ws[1].priority = Priority::low;
  ws[3].priority = Priority::medium;
  std::vector<PatternInstance> ins{instance(Kind::flow_h, ids_of(ws))};
  for (int i : {1, 3}) {
    PatternInstance o = instance(Kind::optional_widget, {ws[static_cast<std::size_t>(i)].id});
    ins.push_back(o);
  }
  bool low_gone = false, medium_gone = false;
  for (double W = 250; W >= 100; W -= 10) {
    auto s = solve(compile(ins, ws, {W, 20}));
    const bool low = s.value({"w1", Attr::width}) == 0;
    const bool medium = s.value({"w3", Attr::width}) == 0;
    EXPECT_TRUE(low || !low_gone) << W;
    EXPECT_TRUE(medium || !medium_gone) << W;
    EXPECT_TRUE(low || !medium) << W;
    low_gone = low;
    medium_gone = medium;
  }
  EXPECT_TRUE(low_gone);
  EXPECT_TRUE(medium_gone);
}

TEST(Optional, HighPriorityIsHard) {
  auto ws = fixed_widgets(1, 50, 20);
  auto cs = optional_widget(ws[0], Priority::high, "o");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_TRUE(cs[0].is_hard());
  ws[0].priority = Priority::high;
  EXPECT_THROW(solve(compile({instance(Kind::optional_widget, {"w0"})}, ws, {10, 10})), Error);
  PatternInstance medium = instance(Kind::optional_widget, {"w0"});
  medium.priority = Priority::medium;
  auto s = solve(compile({medium}, ws, {10, 10}));
  EXPECT_DOUBLE_EQ(s.value({"w0", Attr::width}), 0);
}

TEST(FlowAround, AvoidsFixedArea) {
  auto ws = fixed_widgets(4, 30, 20);
  PatternInstance in = instance(Kind::flow_around_fixed, ids_of(ws));
  in.fixed = {40, 0, 30, 30};
  for (double W : {100.0, 130.0, 170.0, 250.0}) {
    auto p = compile({in}, ws, {W, 200});
    auto s = solve(p);
    auto b = brute_force_solve(p);
    EXPECT_DOUBLE_EQ(s.satisfied_weight, b.satisfied_weight) << W;
    EXPECT_EQ(s.skeleton, b.skeleton) << W;
    Placed f{40, 0, 30, 30};
    for (const auto& w : ws) EXPECT_FALSE(overlap(placed(s, w.id), f)) << w.id << " W=" << W;
    expect_disjoint_and_inside(s, ids_of(ws), W, 200);
  }
}

TEST(Compile, Errors) {
  auto ws = fixed_widgets(2, 10, 10);
  Viewport vp{100, 100};
  EXPECT_EQ(code_of([&] { compile({instance(Kind::flow_h, {})}, ws, vp); }), ErrorCode::EmptyWidgetList);
  EXPECT_EQ(code_of([&] { compile({instance(Kind::flow_h, {"nope"})}, ws, vp); }),
            ErrorCode::UnknownTargetWidget);
  EXPECT_EQ(code_of([&] { compile({instance(Kind::flow_h, {"w0"}, Region::of("zz"))}, ws, vp); }),
            ErrorCode::UnknownTargetWidget);
  PatternInstance rot;
  rot.kind = Kind::rotation_group;
  rot.group = "w0";
  EXPECT_EQ(code_of([&] { compile({rot}, ws, vp); }), ErrorCode::EmptyChildList);
  PatternInstance eqz;
  eqz.kind = Kind::cross_cut_equalize;
  eqz.groups = {{"w0"}};
  EXPECT_EQ(code_of([&] { compile({eqz}, ws, vp); }), ErrorCode::FewerThanTwoWidgets);
  PatternInstance alt = instance(Kind::alt_positions, {"w0"});
  alt.slots = {Region::root()};
  EXPECT_EQ(code_of([&] { compile({alt}, ws, vp); }), ErrorCode::FewerThanTwoSlots);
  EXPECT_EQ(code_of([&] { compile({instance(Kind::alt_widgets, {"w0", "w0"})}, ws, vp); }),
            ErrorCode::SameWidget);
  PatternInstance around = instance(Kind::flow_around_fixed, {"w0"});
  around.fixed = {90, 90, 20, 20};
  EXPECT_EQ(code_of([&] { compile({around}, ws, vp); }), ErrorCode::FixedOutsideContainer);
  auto zero = ws;
  zero[0].pref.w = zero[0].min.w = 0;
  EXPECT_EQ(code_of([&] { compile({instance(Kind::balanced_flow, {"w0", "w1"})}, zero, vp); }),
            ErrorCode::ZeroWidgetWidth);
  PatternInstance a = instance(Kind::flow_h, {"w0"}), b = instance(Kind::flow_v, {"w1"});
  a.label_prefix = b.label_prefix = "bar";
  EXPECT_EQ(code_of([&] { compile({a, b}, ws, vp); }), ErrorCode::LabelCollision);
  EXPECT_EQ(code_of([&] { compile({a}, ws, vp, {hard("bar.first", le(left("w0"), 5.0))}); }),
            ErrorCode::LabelCollision);
}

TEST(Compile, DeterministicAndLabelled) {
  auto ws = fixed_widgets(3, 10, 10);
  auto make = [&] { return compile({instance(Kind::flow_h, ids_of(ws))}, ws, {100, 100}); };
  EXPECT_EQ(make(), make());
  auto p = make();
  EXPECT_EQ(p.user_clauses().front().label, "p0.hflow.first");
}

TEST(FlowAround, TenWidgetsSplitRowsAroundMiddleArea) {
  auto ws = fixed_widgets(10, 30, 20);
  PatternInstance in = instance(Kind::flow_around_fixed, ids_of(ws));
  in.fixed = {60, 20, 60, 40};
  auto s = solve(compile({in}, ws, {180, 200}));
  Placed f{60, 20, 60, 40};
  bool left_of = false, right_of = false;
  for (const auto& w : ws) {
    Placed a = placed(s, w.id);
    EXPECT_FALSE(overlap(a, f)) << w.id;
    if (a.t < 60 && a.t + a.h > 20) (a.l + a.w <= 60 ? left_of : right_of) = true;
  }
  EXPECT_TRUE(left_of);
  EXPECT_TRUE(right_of);
  expect_disjoint_and_inside(s, ids_of(ws), 180, 200);
}

TEST(FlowAround, FixedAtCornerPushesFirstWidget) {
  auto ws = fixed_widgets(2, 30, 20);
  PatternInstance in = instance(Kind::flow_around_fixed, ids_of(ws));
  in.fixed = {0, 0, 30, 30};
  auto s = solve(compile({in}, ws, {150, 100}));
  EXPECT_DOUBLE_EQ(placed(s, "w0").l, 30);
  EXPECT_DOUBLE_EQ(placed(s, "w0").t, 0);
}
