#include "asc/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "asc/error.hpp"

namespace asc {

namespace {

struct Item {
  std::string title;  // node type or token text, made visible
  std::string score;  // empty when scores are hidden
  Color fill;
  bool error = false;
  std::string ref;  // "n<id>" or "t<index>"
  std::vector<std::size_t> children;
};

struct Scene {
  std::vector<Item> items;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> roots;
};

std::string visible(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

Scene build_tree_scene(const AnnotatedTree& a, const RenderConfig& cfg) {
  Scene scene;
  const SyntaxTree& tree = a.tree;
  const bool partial = cfg.mode == RenderMode::Partial;
  std::vector<std::size_t> slot(tree.size(), SIZE_MAX);
  for (NodeId id = 0; id < tree.size(); ++id) {
    const SyntaxNode& n = tree.node(id);
    if (partial && n.is_terminal()) continue;
    Item item;
    item.title = visible(n.node_type);
    if (cfg.show_scores) item.score = format_score(a.nodes[id].score, cfg.precision);
    item.fill = color_of(a.nodes[id].score);
    item.error = n.is_error();
    item.ref = "n" + std::to_string(id);
    slot[id] = scene.items.size();
    // Preorder: the parent (if included) already has a slot.
    if (id != 0 && slot[n.parent] != SIZE_MAX) {
      scene.edges.emplace_back(slot[n.parent], slot[id]);
      scene.items[slot[n.parent]].children.push_back(slot[id]);
    } else {
      scene.roots.push_back(slot[id]);
    }
    scene.items.push_back(std::move(item));
  }
  return scene;
}

Scene build_sequence_scene(const std::vector<TokenRecord>& tokens, const RenderConfig& cfg) {
  Scene scene;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Item item;
    item.title = visible(tokens[i].text);
    if (cfg.show_scores) item.score = format_score(tokens[i].ntp, cfg.precision);
    item.fill = color_of(tokens[i].ntp);
    item.ref = "t" + std::to_string(i);
    if (i > 0) scene.edges.emplace_back(i - 1, i);
    scene.items.push_back(std::move(item));
  }
  return scene;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string render_dot(const Scene& scene, RenderMode mode) {
  std::string out = "digraph asc {\n";
  out += mode == RenderMode::Sequence ? "  graph [rankdir=LR, ordering=out, nodesep=0.1, ranksep=0.1];\n"
                                      : "  graph [rankdir=TB, ordering=out, nodesep=0.2, ranksep=0.35];\n";
  out += "  node [shape=box, style=\"rounded,filled\", fontname=\"Helvetica\", fontsize=10, color=\"#555555\"];\n";
  out += "  edge [arrowhead=none, color=\"#777777\"];\n";
  for (const Item& item : scene.items) {
    out += "  " + item.ref + " [label=\"" + dot_escape(item.title);
    if (!item.score.empty()) out += "\\n" + item.score;
    out += "\", fillcolor=\"" + item.fill.hex() + "\"";
    if (item.error) out += ", color=\"#000000\", penwidth=3, style=\"rounded,filled,dashed\"";
    out += "];\n";
  }
  for (const auto& [from, to] : scene.edges) {
    out += "  " + scene.items[from].ref + " -> " + scene.items[to].ref + ";\n";
  }
  out += "}\n";
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

constexpr double kCharWidth = 7.0;
constexpr double kLineHeight = 14.0;
constexpr double kPad = 6.0;
constexpr double kGap = 10.0;
constexpr double kLevelGap = 36.0;
constexpr double kMargin = 10.0;

struct Box {
  double x = 0, y = 0, w = 0, h = 0;
};

double box_width(const Item& item) {
  const auto chars = std::max<std::size_t>({item.title.size(), item.score.size(), 1});
  return static_cast<double>(chars) * kCharWidth + 2 * kPad;
}

double box_height(const Item& item) { return (item.score.empty() ? 1 : 2) * kLineHeight + kPad; }

void emit_item(std::string& out, const Item& item, const Box& b) {
  out += "<g class=\"node" + std::string(item.error ? " error" : "") + "\" id=\"" + item.ref + "\">";
  out += "<rect x=\"" + num(b.x) + "\" y=\"" + num(b.y) + "\" width=\"" + num(b.w) + "\" height=\"" + num(b.h) +
         "\" rx=\"4\" fill=\"" + item.fill.hex() + "\"";
  out += item.error ? " stroke=\"#000000\" stroke-width=\"3\" stroke-dasharray=\"4 2\"/>"
                    : " stroke=\"#555555\" stroke-width=\"1\"/>";
  const double cx = b.x + b.w / 2;
  out += "<text x=\"" + num(cx) + "\" y=\"" + num(b.y + kPad / 2 + kLineHeight - 3) +
         "\" text-anchor=\"middle\" xml:space=\"preserve\">" + xml_escape(item.title) + "</text>";
  if (!item.score.empty()) {
    out += "<text x=\"" + num(cx) + "\" y=\"" + num(b.y + kPad / 2 + 2 * kLineHeight - 3) +
           "\" text-anchor=\"middle\">" + xml_escape(item.score) + "</text>";
  }
  out += "</g>\n";
}

std::string svg_open(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
         "\" font-family=\"monospace\" font-size=\"11\">\n";
}

std::string render_tree_svg(const Scene& scene) {
  const std::size_t n = scene.items.size();
  std::vector<double> subtree(n, 0.0);
  std::vector<double> level_height;
  std::vector<std::size_t> level(n, 0);
  // Items are in preorder, so children follow their parent.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c : scene.items[i].children) level[c] = level[i] + 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (level[i] >= level_height.size()) level_height.resize(level[i] + 1, 0.0);
    level_height[level[i]] = std::max(level_height[level[i]], box_height(scene.items[i]));
  }
  for (std::size_t i = n; i-- > 0;) {
    double kids = 0.0;
    for (std::size_t c : scene.items[i].children) kids += subtree[c];
    if (!scene.items[i].children.empty()) kids += kGap * static_cast<double>(scene.items[i].children.size() - 1);
    subtree[i] = std::max(box_width(scene.items[i]), kids);
  }
  std::vector<double> level_y(level_height.size(), kMargin);
  for (std::size_t l = 1; l < level_height.size(); ++l) level_y[l] = level_y[l - 1] + level_height[l - 1] + kLevelGap;

  std::vector<Box> boxes(n);
  std::vector<double> left(n, 0.0);
  double cursor = kMargin;
  for (std::size_t r : scene.roots) {
    left[r] = cursor;
    cursor += subtree[r] + kGap;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Item& item = scene.items[i];
    Box& b = boxes[i];
    b.w = box_width(item);
    b.h = box_height(item);
    b.x = left[i] + (subtree[i] - b.w) / 2;
    b.y = level_y[level[i]];
    double kids = 0.0;
    for (std::size_t c : item.children) kids += subtree[c];
    if (!item.children.empty()) kids += kGap * static_cast<double>(item.children.size() - 1);
    double x = left[i] + (subtree[i] - kids) / 2;
    for (std::size_t c : item.children) {
      left[c] = x;
      x += subtree[c] + kGap;
    }
  }

  const double width = std::max(cursor - kGap, kMargin) + kMargin;
  const double height = level_y.empty() ? 2 * kMargin : level_y.back() + level_height.back() + kMargin;
  std::string out = svg_open(width, height);
  out += "<g class=\"edges\" stroke=\"#777777\" stroke-width=\"1\">\n";
  for (const auto& [from, to] : scene.edges) {
    const Box& p = boxes[from];
    const Box& c = boxes[to];
    out += "<line class=\"edge\" x1=\"" + num(p.x + p.w / 2) + "\" y1=\"" + num(p.y + p.h) + "\" x2=\"" +
           num(c.x + c.w / 2) + "\" y2=\"" + num(c.y) + "\"/>\n";
  }
  out += "</g>\n<g class=\"nodes\">\n";
  for (std::size_t i = 0; i < n; ++i) emit_item(out, scene.items[i], boxes[i]);
  out += "</g>\n</svg>\n";
  return out;
}

std::string render_sequence_svg(const Scene& scene, const std::vector<TokenRecord>& tokens) {
  constexpr double kMaxRow = 1200.0;
  std::vector<Box> boxes(scene.items.size());
  double x = kMargin, y = kMargin, row_h = 0.0, width = 2 * kMargin;
  for (std::size_t i = 0; i < scene.items.size(); ++i) {
    Box& b = boxes[i];
    b.w = box_width(scene.items[i]);
    b.h = box_height(scene.items[i]);
    if (x > kMargin && x + b.w > kMaxRow) {
      x = kMargin;
      y += row_h + kGap;
      row_h = 0.0;
    }
    b.x = x;
    b.y = y;
    x += b.w + 4.0;
    row_h = std::max(row_h, b.h);
    width = std::max(width, x - 4.0 + kMargin);
    // Follow the source layout: a token ending a line ends the row.
    if (tokens[i].text.find('\n') != std::string::npos) {
      x = kMargin;
      y += row_h + kGap;
      row_h = 0.0;
    }
  }
  const double height = y + row_h + kMargin;
  std::string out = svg_open(width, std::max(height, 2 * kMargin));
  out += "<g class=\"nodes\">\n";
  for (std::size_t i = 0; i < scene.items.size(); ++i) emit_item(out, scene.items[i], boxes[i]);
  out += "</g>\n</svg>\n";
  return out;
}

std::string legend_svg() {
  constexpr double kW = 320.0, kBarY = 18.0, kBarH = 14.0, kX0 = 10.0;
  std::string out = svg_open(kW + 2 * kX0, 64.0);
  out += "<defs><linearGradient id=\"asc-scale\" x1=\"0\" x2=\"1\" y1=\"0\" y2=\"0\">";
  out += "<stop offset=\"0\" stop-color=\"" + kColorLow.hex() + "\"/>";
  out += "<stop offset=\"0.5\" stop-color=\"" + kColorMid.hex() + "\"/>";
  out += "<stop offset=\"1\" stop-color=\"" + kColorHigh.hex() + "\"/>";
  out += "</linearGradient></defs>\n";
  out += "<rect x=\"" + num(kX0) + "\" y=\"" + num(kBarY) + "\" width=\"" + num(kW) + "\" height=\"" + num(kBarH) +
         "\" fill=\"url(#asc-scale)\" stroke=\"#555555\"/>\n";
  for (double t : {0.0, 0.5, 1.0}) {
    out += "<text x=\"" + num(kX0 + t * kW) + "\" y=\"" + num(kBarY + kBarH + 14) + "\" text-anchor=\"middle\">" +
           format_score(t, 1) + "</text>\n";
  }
  auto threshold = [&](double t, const char* label) {
    const double x = kX0 + t * kW;
    out += "<line class=\"threshold\" x1=\"" + num(x) + "\" y1=\"" + num(kBarY - 4) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(kBarY + kBarH + 4) + "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(kBarY - 6) + "\" text-anchor=\"middle\">" + label + "</text>\n";
  };
  threshold(kErroneousThreshold, "0.5");
  threshold(kConfidentThreshold, "0.6");
  out += "</svg>\n";
  return out;
}

std::string render_html(const std::string& svg, RenderMode mode) {
  std::string out = "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  out += "<title>AsC-Viz " + std::string(render_mode_name(mode)) + "</title>\n";
  out += "<style>body{font-family:sans-serif;margin:16px}.figure{overflow:auto}"
         ".legend p{margin:4px 0;font-size:13px}</style>\n</head>\n<body>\n";
  out += "<div class=\"legend\">\n" + legend_svg();
  out += "<p>Blue: confident (score &#8805; 0.6). Red: erroneous (score &lt; 0.5). Gray: no score. "
         "Dashed black outline: ERROR node.</p>\n</div>\n";
  out += "<div class=\"figure\">\n" + svg + "</div>\n</body>\n</html>\n";
  return out;
}

std::uint8_t lerp(std::uint8_t a, std::uint8_t b, double t) {
  return static_cast<std::uint8_t>(std::lround(a + (static_cast<double>(b) - a) * t));
}

}  // namespace

std::string_view render_mode_name(RenderMode mode) {
  switch (mode) {
    case RenderMode::Partial: return "partial";
    case RenderMode::Complete: return "complete";
    case RenderMode::Sequence: return "sequence";
  }
  return "complete";
}

std::string_view format_extension(OutputFormat format) {
  switch (format) {
    case OutputFormat::Dot: return "dot";
    case OutputFormat::Svg: return "svg";
    case OutputFormat::Html: return "html";
  }
  return "dot";
}

RenderMode parse_render_mode(std::string_view name) {
  if (name == "partial") return RenderMode::Partial;
  if (name == "complete") return RenderMode::Complete;
  if (name == "sequence") return RenderMode::Sequence;
  throw ConfigError("unknown render mode '" + std::string(name) + "' (expected partial, complete or sequence)");
}

OutputFormat parse_output_format(std::string_view name) {
  if (name == "dot") return OutputFormat::Dot;
  if (name == "svg") return OutputFormat::Svg;
  if (name == "html") return OutputFormat::Html;
  throw ConfigError("unsupported output format '" + std::string(name) + "' (expected dot, svg or html)");
}

std::string Color::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
  return buf;
}

Color color_of(std::optional<double> score) {
  if (!score || std::isnan(*score)) return kColorAbsent;
  const double s = std::clamp(*score, 0.0, 1.0);
  if (s <= 0.5) {
    const double t = s / 0.5;
    return {lerp(kColorLow.r, kColorMid.r, t), lerp(kColorLow.g, kColorMid.g, t), lerp(kColorLow.b, kColorMid.b, t)};
  }
  const double t = (s - 0.5) / 0.5;
  return {lerp(kColorMid.r, kColorHigh.r, t), lerp(kColorMid.g, kColorHigh.g, t), lerp(kColorMid.b, kColorHigh.b, t)};
}

std::string format_score(std::optional<double> score, int precision) {
  if (!score) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", std::clamp(precision, 0, 17), *score);
  return buf;
}

std::string render(const AnnotatedTree& annotated, const std::vector<TokenRecord>& tokens, const RenderConfig& config) {
  const Scene scene = config.mode == RenderMode::Sequence ? build_sequence_scene(tokens, config)
                                                          : build_tree_scene(annotated, config);
  switch (config.format) {
    case OutputFormat::Dot: return render_dot(scene, config.mode);
    case OutputFormat::Svg:
      return config.mode == RenderMode::Sequence ? render_sequence_svg(scene, tokens) : render_tree_svg(scene);
    case OutputFormat::Html:
      return render_html(
          config.mode == RenderMode::Sequence ? render_sequence_svg(scene, tokens) : render_tree_svg(scene),
          config.mode);
  }
  throw ConfigError("unsupported output format");
}

std::string render_file_name(std::string_view snippet_id, RenderMode mode, OutputFormat format) {
  std::string out;
  for (char c : snippet_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    out += ok ? c : '_';
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
  return out + "." + std::string(render_mode_name(mode)) + "." + std::string(format_extension(format));
}

}  // namespace asc
