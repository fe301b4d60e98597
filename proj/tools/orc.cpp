// orc: solve, bench, serve, fmt.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <orc/bench.hpp>
#include <orc/http.hpp>
#include <orc/lang.hpp>
#include <orc/log.hpp>
#include <orc/render.hpp>
#include <orc/solver.hpp>

namespace fs = std::filesystem;
using namespace orc;

namespace {

struct Failure {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{"cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{"cannot write " + path.string()};
}

std::string located(const std::string& path, const lang::Span& span, const std::string& message) {
  if (span.line <= 0) return path + ": error: " + message;
  return path + ":" + std::to_string(span.line) + ":" + std::to_string(span.column) + ": error: " + message;
}

lang::Document load_document(const std::string& path) {
  auto parsed = lang::parse(read_file(path));
  if (!parsed.ok()) {
    std::string msg;
    for (const auto& d : parsed.diagnostics) msg += (msg.empty() ? "" : "\n") + located(path, d.span, d.message);
    throw Failure{msg};
  }
  return std::move(*parsed.document);
}

Viewport parse_viewport(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const std::string ws = text.substr(0, x), hs = text.substr(x + 1);
    Viewport v{std::stod(ws, &a), std::stod(hs, &b)};
    if (a != ws.size() || b != hs.size() || !(v.width >= 0) || !(v.height >= 0)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Failure{"bad viewport '" + text + "' (want WxH)"};
  }
}

struct SolveArgs {
  std::string spec;
  std::vector<std::string> viewports;
  std::string json;
  std::string svg_dir;
  std::optional<int> timeout_ms;
};

struct Outcome {
  Viewport viewport;
  LayoutProblem problem;
  std::optional<Solution> solution;
  std::string error;
};

int cmd_solve(const SolveArgs& a) {
  const lang::Document doc = load_document(a.spec);
  std::vector<Viewport> vps;
  for (const auto& v : a.viewports) vps.push_back(parse_viewport(v));
  if (vps.empty()) {
    if (!doc.window) throw Failure{a.spec + ": error: no --viewport given and the spec has no window"};
    vps.push_back(*doc.window);
  }
  SolveOptions opt;
  if (a.timeout_ms) opt.budget = std::chrono::milliseconds(*a.timeout_ms);

  // viewports are independent; results are written in input order
  std::vector<std::future<Outcome>> jobs;
  for (const auto& vp : vps)
    jobs.push_back(std::async(std::launch::async, [&, vp] {
      Outcome o{vp, {}, std::nullopt, {}};
      try {
        o.problem = lang::lower(doc, vp);
        OrcSolver solver;
        o.solution = solver.solve(o.problem, opt);
      } catch (const lang::SourceError& e) {
        o.error = located(a.spec, e.span(), e.what());
      } catch (const Error& e) {
        o.error = a.spec + ": error: " + e.what();
      }
      return o;
    }));

  int status = 0;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  std::vector<Outcome> done;
  for (auto& j : jobs) done.push_back(j.get());
  for (const auto& o : done) {
    const std::string tag = render::number(o.viewport.width) + "x" + render::number(o.viewport.height);
    if (!o.solution) {
      std::cerr << o.error << " (viewport " << tag << ")\n";
      status = 1;
      continue;
    }
    if (!o.solution->optimal) {
      log::warn("viewport " + tag + ": time budget ran out; layout is the best found");
      if (status == 0) status = 2;
    }
    records.push_back({{"viewport", {{"width", render::clean(o.viewport.width)}, {"height", render::clean(o.viewport.height)}}},
                       {"solution", render::solution_json(o.problem, *o.solution, false)}});
    if (!a.svg_dir.empty())
      write_file(fs::path(a.svg_dir) / (fs::path(a.spec).stem().string() + "_" + tag + ".svg"),
                 render::svg(o.problem, *o.solution));
  }
  const std::string json = records.dump(2) + "\n";
  if (!a.json.empty())
    write_file(a.json, json);
  else if (a.svg_dir.empty() && !records.empty())
    std::cout << json;
  return status;
}

struct BenchArgs {
  std::vector<int> widgets{5, 10, 20, 30};
  std::vector<std::string> ops{"insert", "delete", "move", "resize"};
  int repeats = 10;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  std::vector<bench::Op> ops;
  for (const auto& name : a.ops)
    for (auto op : bench::parse_ops(name)) ops.push_back(op);
  for (int n : a.widgets)
    if (n < 2) throw Failure{"--widgets entries must be at least 2"};
  const auto rows = bench::run_all(a.widgets, ops, a.repeats);
  std::ostringstream csv;
  bench::write_csv(csv, rows);
  if (a.out.empty())
    std::cout << csv.str();
  else
    write_file(a.out, csv.str());
  for (const auto& r : rows) {
    if (r.rebuild)
      log::info(std::string(bench::to_string(r.op)) + " " + std::to_string(r.widgets) +
                ": full rebuild, incremental column equals fresh");
    if (!r.matched)
      log::error(std::string(bench::to_string(r.op)) + " " + std::to_string(r.widgets) +
                 ": incremental and fresh layouts differ");
  }
  for (const auto& r : rows)
    if (!r.matched) return 1;
  return 0;
}

int cmd_fmt(const std::string& path, bool write) {
  const std::string text = lang::print(load_document(path));
  if (write)
    write_file(path, text);
  else
    std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layout solver for OR-constraint GUI specifications"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve a spec at one or more window sizes");
  solve->add_option("spec", solve_args.spec, "Spec file (.orc)")->required();
  solve->add_option("--viewport", solve_args.viewports, "Window size WxH; repeatable");
  solve->add_option("--json", solve_args.json, "Write solutions as JSON here");
  solve->add_option("--svg-dir", solve_args.svg_dir, "Write one SVG per viewport here");
  solve->add_option("--timeout-ms", solve_args.timeout_ms, "Search budget per viewport")->check(CLI::NonNegativeNumber);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time fresh against incremental re-solves");
  bench->add_option("--widgets", bench_args.widgets, "Widget counts")->delimiter(',');
  bench->add_option("--ops", bench_args.ops, "insert, delete, move, resize, resize_widget, resize_window")
      ->delimiter(',');
  bench->add_option("--repeats", bench_args.repeats, "Timed runs per row")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_args.out, "CSV output path (default stdout)");

  int port = 8080;
  std::string host = "127.0.0.1";
  int budget_ms = 500;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--budget-ms", budget_ms, "Search budget per solve")->check(CLI::PositiveNumber);

  std::string fmt_path;
  bool fmt_write = false;
  auto* fmt = app.add_subcommand("fmt", "Print a spec in canonical form");
  fmt->add_option("spec", fmt_path, "Spec file (.orc)")->required();
  fmt->add_flag("--write", fmt_write, "Rewrite the file in place");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(solve_args);
    if (*bench) return cmd_bench(bench_args);
    if (*fmt) return cmd_fmt(fmt_path, fmt_write);
    if (*serve) {
      service::Service svc{std::chrono::milliseconds(budget_ms)};
      if (!service::serve(svc, host, port)) {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << f.message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
