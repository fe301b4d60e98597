#pragma once

// Solution output: JSON records and SVG drawings.

#include <charconv>
#include <cmath>
#include <map>
#include <string>

#include <json.hpp>

#include "model.hpp"

namespace orc::render {

/// Coordinates are reported rounded to 1e-6 px so that JSON and SVG agree
/// and LP noise does not leak into the output.
inline double clean(double v) {
  double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

inline std::string number(double v) {
  char buf[400];
  auto r = std::to_chars(buf, buf + sizeof buf, clean(v), std::chars_format::fixed);
  return std::string(buf, r.ptr);
}

struct Box {
  std::string id;
  std::string kind;
  double left = 0, top = 0, width = 0, height = 0;
  bool visible() const { return width > 0 && height > 0; }
};

/// Widget boxes in declaration order.
inline std::vector<Box> boxes(const LayoutProblem& p, const Solution& s) {
  std::vector<Box> out;
  for (const auto& w : p.widgets())
    out.push_back({w.id, w.kind, clean(s.value({w.id, Attr::left})), clean(s.value({w.id, Attr::top})),
                   clean(s.value({w.id, Attr::width})), clean(s.value({w.id, Attr::height}))});
  return out;
}

/// {optimal, satisfied_weight, widgets, branch_choices[, solve_ms]}.
inline nlohmann::ordered_json solution_json(const LayoutProblem& p, const Solution& s, bool with_timing = true) {
  nlohmann::ordered_json j;
  j["optimal"] = s.optimal;
  j["satisfied_weight"] = clean(s.satisfied_weight);
  auto& ws = j["widgets"] = nlohmann::ordered_json::array();
  for (const auto& b : boxes(p, s))
    ws.push_back({{"id", b.id},
                  {"left", b.left},
                  {"top", b.top},
                  {"width", b.width},
                  {"height", b.height},
                  {"visible", b.visible()}});
  auto& bc = j["branch_choices"] = nlohmann::ordered_json::object();
  for (const auto& [label, index] : s.branch_choices) bc[label] = index;
  if (with_timing) j["solve_ms"] = s.solve_ms;
  return j;
}

struct Theme {
  struct Paint {
    std::string fill, stroke;
  };
  Paint widget{"#dbe8f6", "#2f5d8a"};
  std::map<std::string, Paint> by_kind;
  double font_size = 12;
  std::string label_color = "#1b1b1b";
  std::string border = "#888888";
  std::string border_dash = "4 3";

  const Paint& paint(const std::string& kind) const {
    auto it = by_kind.find(kind);
    return it == by_kind.end() ? widget : it->second;
  }
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// One rect and one centered label per visible widget, in declaration
/// order; the window outline is a path so that rects are widgets only.
inline std::string svg(const LayoutProblem& p, const Solution& s, const Theme& theme = {}) {
  const std::string W = number(p.viewport().width), H = number(p.viewport().height);
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + W + " " + H + "\" width=\"" + W +
                    "\" height=\"" + H + "\">\n";
  out += "  <path d=\"M0 0H" + W + "V" + H + "H0Z\" fill=\"none\" stroke=\"" + theme.border +
         "\" stroke-dasharray=\"" + theme.border_dash + "\"/>\n";
  for (const auto& b : boxes(p, s)) {
    if (!b.visible()) continue;
    const auto& paint = theme.paint(b.kind);
    const std::string id = xml_escape(b.id);
    out += "  <g data-id=\"" + id + "\">\n";
    out += "    <rect x=\"" + number(b.left) + "\" y=\"" + number(b.top) + "\" width=\"" + number(b.width) +
           "\" height=\"" + number(b.height) + "\" fill=\"" + paint.fill + "\" stroke=\"" + paint.stroke + "\"/>\n";
    out += "    <text x=\"" + number(b.left + b.width / 2) + "\" y=\"" + number(b.top + b.height / 2) +
           "\" font-size=\"" + number(theme.font_size) + "\" fill=\"" + theme.label_color +
           "\" text-anchor=\"middle\" dominant-baseline=\"central\">" + id + "</text>\n";
    out += "  </g>\n";
  }
  return out + "</svg>\n";
}

}  // namespace orc::render
