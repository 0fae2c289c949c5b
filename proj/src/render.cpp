#include "geobench/render.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "geobench/rng.hpp"

namespace geobench {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;

Point dirv(double a) { return {std::cos(a), std::sin(a)}; }

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Stroke font: straight-segment glyphs on a 6x8 grid, y down.
// ---------------------------------------------------------------------------

using GlyphStroke = std::vector<std::array<double, 2>>;
using Glyph = std::vector<GlyphStroke>;

const std::map<char, Glyph>& glyph_table() {
  static const std::map<char, Glyph> table = {
      {'A', {{{0, 8}, {3, 0}, {6, 8}}, {{1, 5}, {5, 5}}}},
      {'B', {{{0, 0}, {0, 8}}, {{0, 0}, {4, 0}, {5, 1}, {5, 3}, {4, 4}, {0, 4}}, {{4, 4}, {5, 5}, {5, 7}, {4, 8}, {0, 8}}}},
      {'C', {{{6, 1}, {4, 0}, {2, 0}, {0, 2}, {0, 6}, {2, 8}, {4, 8}, {6, 7}}}},
      {'D', {{{0, 0}, {0, 8}}, {{0, 0}, {3, 0}, {5, 1}, {6, 3}, {6, 5}, {5, 7}, {3, 8}, {0, 8}}}},
      {'E', {{{6, 0}, {0, 0}, {0, 8}, {6, 8}}, {{0, 4}, {4, 4}}}},
      {'F', {{{6, 0}, {0, 0}, {0, 8}}, {{0, 4}, {4, 4}}}},
      {'G', {{{6, 1}, {4, 0}, {2, 0}, {0, 2}, {0, 6}, {2, 8}, {4, 8}, {6, 7}, {6, 4}, {3, 4}}}},
      {'H', {{{0, 0}, {0, 8}}, {{6, 0}, {6, 8}}, {{0, 4}, {6, 4}}}},
      {'I', {{{1, 0}, {5, 0}}, {{3, 0}, {3, 8}}, {{1, 8}, {5, 8}}}},
      {'J', {{{5, 0}, {5, 6}, {4, 8}, {2, 8}, {0, 6}}}},
      {'K', {{{0, 0}, {0, 8}}, {{6, 0}, {0, 4}, {6, 8}}}},
      {'L', {{{0, 0}, {0, 8}, {6, 8}}}},
      {'M', {{{0, 8}, {0, 0}, {3, 5}, {6, 0}, {6, 8}}}},
      {'N', {{{0, 8}, {0, 0}, {6, 8}, {6, 0}}}},
      {'O', {{{2, 0}, {4, 0}, {6, 2}, {6, 6}, {4, 8}, {2, 8}, {0, 6}, {0, 2}, {2, 0}}}},
      {'P', {{{0, 8}, {0, 0}, {4, 0}, {6, 1}, {6, 3}, {4, 4}, {0, 4}}}},
      {'Q', {{{2, 0}, {4, 0}, {6, 2}, {6, 6}, {4, 8}, {2, 8}, {0, 6}, {0, 2}, {2, 0}}, {{4, 6}, {6, 8}}}},
      {'R', {{{0, 8}, {0, 0}, {4, 0}, {6, 1}, {6, 3}, {4, 4}, {0, 4}}, {{3, 4}, {6, 8}}}},
      {'S', {{{6, 1}, {4, 0}, {2, 0}, {0, 1}, {0, 3}, {2, 4}, {4, 4}, {6, 5}, {6, 7}, {4, 8}, {2, 8}, {0, 7}}}},
      {'T', {{{0, 0}, {6, 0}}, {{3, 0}, {3, 8}}}},
      {'U', {{{0, 0}, {0, 6}, {2, 8}, {4, 8}, {6, 6}, {6, 0}}}},
      {'V', {{{0, 0}, {3, 8}, {6, 0}}}},
      {'W', {{{0, 0}, {1, 8}, {3, 3}, {5, 8}, {6, 0}}}},
      {'X', {{{0, 0}, {6, 8}}, {{6, 0}, {0, 8}}}},
      {'Y', {{{0, 0}, {3, 4}, {6, 0}}, {{3, 4}, {3, 8}}}},
      {'Z', {{{0, 0}, {6, 0}, {0, 8}, {6, 8}}}},
      {'0', {{{2, 0}, {4, 0}, {6, 2}, {6, 6}, {4, 8}, {2, 8}, {0, 6}, {0, 2}, {2, 0}}}},
      {'1', {{{1, 2}, {3, 0}, {3, 8}}, {{1, 8}, {5, 8}}}},
      {'2', {{{0, 2}, {2, 0}, {4, 0}, {6, 2}, {6, 3}, {0, 8}, {6, 8}}}},
      {'3', {{{0, 1}, {2, 0}, {4, 0}, {6, 1}, {6, 3}, {4, 4}, {2, 4}}, {{4, 4}, {6, 5}, {6, 7}, {4, 8}, {2, 8}, {0, 7}}}},
      {'4', {{{4, 8}, {4, 0}, {0, 5}, {6, 5}}}},
      {'5', {{{6, 0}, {0, 0}, {0, 3}, {4, 3}, {6, 5}, {6, 6}, {4, 8}, {2, 8}, {0, 7}}}},
      {'6', {{{5, 0}, {3, 0}, {1, 1}, {0, 3}, {0, 6}, {2, 8}, {4, 8}, {6, 6}, {6, 5}, {4, 4}, {1, 4}}}},
      {'7', {{{0, 0}, {6, 0}, {2, 8}}}},
      {'8', {{{2, 0}, {4, 0}, {5, 1}, {5, 3}, {4, 4}, {2, 4}, {1, 3}, {1, 1}, {2, 0}}, {{2, 4}, {4, 4}, {6, 5}, {6, 7}, {4, 8}, {2, 8}, {0, 7}, {0, 5}, {2, 4}}}},
      {'9', {{{1, 8}, {3, 8}, {5, 7}, {6, 5}, {6, 2}, {4, 0}, {2, 0}, {0, 2}, {0, 3}, {2, 4}, {5, 4}}}},
  };
  return table;
}

// Glyph strokes in canvas space, centered on `anchor`.
std::vector<GlyphStroke> glyph_strokes(char ch, const Point& anchor, double font_size) {
  const auto it = glyph_table().find(ch);
  const double s = 0.72 * font_size / 8.0;  // cap height
  std::vector<GlyphStroke> out;
  if (it == glyph_table().end()) {
    // fallback: small box
    out.push_back({{0, 0}, {6, 0}, {6, 8}, {0, 8}, {0, 0}});
  } else {
    out = it->second;
  }
  for (auto& stroke : out) {
    for (auto& p : stroke) {
      p[0] = anchor.x() + (p[0] - 3.0) * s;
      p[1] = anchor.y() + (p[1] - 4.0) * s;
    }
  }
  return out;
}

double glyph_text_width(const std::string& text, double font_size) {
  const double s = 0.72 * font_size / 8.0;
  return text.empty() ? 0.0 : (static_cast<double>(text.size()) * 8.0 - 2.0) * s;
}

double hex_channel(const std::string& hex, int idx) {
  const auto nib = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return 0;
  };
  if (hex.size() != 7 || hex[0] != '#') return 0.0;
  return (nib(hex[1 + 2 * idx]) * 16 + nib(hex[2 + 2 * idx])) / 255.0;
}

double hex_to_gray(const std::string& hex) {
  return 0.2126 * hex_channel(hex, 0) + 0.7152 * hex_channel(hex, 1) + 0.0722 * hex_channel(hex, 2);
}

}  // namespace

// ---------------------------------------------------------------------------
// Annotation -> vector document
// ---------------------------------------------------------------------------

namespace {

Point label_anchor_polygon(const std::vector<Point>& vs, std::size_t k, double offset) {
  const std::size_t n = vs.size();
  const Point v = vs[k];
  const Point u = (vs[(k + n - 1) % n] - v).normalized();
  const Point w = (vs[(k + 1) % n] - v).normalized();
  Point out = -(u + w);
  if (out.norm() < 1e-9) out = Point(0, -1);
  return v + offset * out.normalized();
}

Point object_anchor(const SceneObject& g) {
  switch (g.kind) {
    case ShapeKind::circle:
    case ShapeKind::ellipse:
    case ShapeKind::semicircle:
      return g.vertices[0];
    case ShapeKind::segment:
      return 0.5 * (g.vertices[0] + g.vertices[1]);
    default:
      return polygon_centroid(g.vertices);
  }
}

}  // namespace

VectorDocument render(const Annotation& annotation, const StyleSpec& style) {
  VectorDocument doc;
  doc.width = annotation.width;
  doc.height = annotation.height;
  doc.background = style.background;

  DrawStyle stroke;
  stroke.stroke = style.foreground;
  stroke.stroke_width = style.line_width;
  stroke.font_size = style.font_size;

  const double label_offset = 10.0;
  std::set<std::string> drawn_labels;

  for (const auto& obj : annotation.objects) {
    if (!obj.geometry) {
      throw RenderError("object " + obj.id + " has no drawable geometry (shape " + obj.shape + ")");
    }
    const SceneObject& g = *obj.geometry;
    const bool marker_mode = obj.attributes.count("marker") > 0;

    DrawCommand cmd;
    cmd.style = stroke;
    cmd.group = obj.id;
    switch (g.kind) {
      case ShapeKind::circle:
        cmd.kind = DrawCommand::Kind::circle;
        cmd.center = g.vertices[0];
        cmd.radius = g.radius;
        doc.commands.push_back(cmd);
        break;
      case ShapeKind::ellipse:
        cmd.kind = DrawCommand::Kind::ellipse;
        cmd.center = g.vertices[0];
        cmd.rx = g.axis_a;
        cmd.ry = g.axis_b;
        cmd.rotation = g.rotation;
        doc.commands.push_back(cmd);
        break;
      case ShapeKind::semicircle: {
        cmd.kind = DrawCommand::Kind::arc;
        cmd.center = g.vertices[0];
        cmd.radius = g.radius;
        cmd.angle_start = g.rotation;
        cmd.angle_end = g.rotation + kPi;
        doc.commands.push_back(cmd);
        DrawCommand chord;
        chord.style = stroke;
        chord.group = obj.id;
        chord.kind = DrawCommand::Kind::polyline;
        chord.points = {g.vertices[0] + g.radius * dirv(g.rotation),
                        g.vertices[0] + g.radius * dirv(g.rotation + kPi)};
        doc.commands.push_back(chord);
        break;
      }
      case ShapeKind::segment:
        cmd.kind = DrawCommand::Kind::polyline;
        cmd.points = g.vertices;
        doc.commands.push_back(cmd);
        break;
      default: {
        if (!shape_info(g.kind).is_polygon) {
          throw RenderError("object kind unknown to the draw table");
        }
        cmd.kind = DrawCommand::Kind::polygon;
        cmd.points = g.vertices;
        doc.commands.push_back(cmd);
        break;
      }
    }

    if (marker_mode) {
      DrawCommand text;
      text.style = stroke;
      text.group = obj.id;
      text.kind = DrawCommand::Kind::text;
      text.center = object_anchor(g);
      text.text = obj.attributes.at("marker");
      doc.commands.push_back(text);
      continue;
    }

    for (std::size_t k = 0; k < g.labels.size(); ++k) {
      const std::string& label = g.labels[k];
      if (label.empty() || !drawn_labels.insert(label).second) continue;
      DrawCommand text;
      text.style = stroke;
      text.group = obj.id;
      text.kind = DrawCommand::Kind::text;
      text.text = label;
      switch (g.kind) {
        case ShapeKind::circle:
        case ShapeKind::ellipse:
        case ShapeKind::semicircle:
          text.center = g.vertices[0] + Point(0, -label_offset);
          break;
        case ShapeKind::segment: {
          const Point other = g.vertices[k == 0 ? 1 : 0];
          Point out = g.vertices[k] - other;
          if (out.norm() < 1e-9) out = Point(0, -1);
          text.center = g.vertices[k] + label_offset * out.normalized();
          break;
        }
        default:
          text.center = label_anchor_polygon(g.vertices, k, label_offset);
          break;
      }
      doc.commands.push_back(text);
    }
  }

  return doc;
}

// ---------------------------------------------------------------------------
// SVG emission
// ---------------------------------------------------------------------------

std::string VectorDocument::to_svg() const {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"" << background
     << "\"/>\n";

  std::string open_group;
  const auto close_group = [&] {
    if (!open_group.empty()) {
      os << "</g>\n";
      open_group.clear();
    }
  };

  for (const auto& c : commands) {
    if (c.group != open_group) {
      close_group();
      os << "<g data-object=\"" << c.group << "\">\n";
      open_group = c.group;
    }
    const std::string dash = c.style.dashed ? " stroke-dasharray=\"6 5\"" : "";
    switch (c.kind) {
      case DrawCommand::Kind::polyline:
      case DrawCommand::Kind::polygon: {
        os << (c.kind == DrawCommand::Kind::polygon ? "<polygon" : "<polyline") << " points=\"";
        for (std::size_t i = 0; i < c.points.size(); ++i) {
          if (i) os << " ";
          os << fmt2(c.points[i].x()) << "," << fmt2(c.points[i].y());
        }
        os << "\" fill=\"none\" stroke=\"" << c.style.stroke << "\" stroke-width=\""
           << fmt2(c.style.stroke_width) << "\"" << dash << "/>\n";
        break;
      }
      case DrawCommand::Kind::circle:
        os << "<circle cx=\"" << fmt2(c.center.x()) << "\" cy=\"" << fmt2(c.center.y())
           << "\" r=\"" << fmt2(c.radius) << "\" fill=\"none\" stroke=\"" << c.style.stroke
           << "\" stroke-width=\"" << fmt2(c.style.stroke_width) << "\"" << dash << "/>\n";
        break;
      case DrawCommand::Kind::ellipse:
        os << "<ellipse cx=\"" << fmt2(c.center.x()) << "\" cy=\"" << fmt2(c.center.y())
           << "\" rx=\"" << fmt2(c.rx) << "\" ry=\"" << fmt2(c.ry) << "\" fill=\"none\" stroke=\""
           << c.style.stroke << "\" stroke-width=\"" << fmt2(c.style.stroke_width) << "\""
           << " transform=\"rotate(" << fmt2(c.rotation * 180.0 / kPi) << " "
           << fmt2(c.center.x()) << " " << fmt2(c.center.y()) << ")\"" << dash << "/>\n";
        break;
      case DrawCommand::Kind::arc: {
        const Point p0 = c.center + c.radius * dirv(c.angle_start);
        const Point p1 = c.center + c.radius * dirv(c.angle_end);
        const bool large = (c.angle_end - c.angle_start) > kPi;
        os << "<path d=\"M " << fmt2(p0.x()) << " " << fmt2(p0.y()) << " A " << fmt2(c.radius)
           << " " << fmt2(c.radius) << " 0 " << (large ? 1 : 0) << " 1 " << fmt2(p1.x()) << " "
           << fmt2(p1.y()) << "\" fill=\"none\" stroke=\"" << c.style.stroke
           << "\" stroke-width=\"" << fmt2(c.style.stroke_width) << "\"" << dash << "/>\n";
        break;
      }
      case DrawCommand::Kind::text:
        os << "<text x=\"" << fmt2(c.center.x()) << "\" y=\"" << fmt2(c.center.y())
           << "\" font-size=\"" << fmt2(c.style.font_size)
           << "\" font-family=\"sans-serif\" text-anchor=\"middle\" dominant-baseline=\"middle\""
           << " fill=\"" << c.style.stroke << "\">" << c.text << "</text>\n";
        break;
    }
  }
  close_group();
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------------

namespace {

struct InkCanvas {
  Raster* raster;
  double scale;

  void blend(int x, int y, double cov, double fg) {
    if (cov <= 0 || x < 0 || y < 0 || x >= raster->width || y >= raster->height) return;
    double& v = raster->at(x, y);
    v = (1.0 - cov) * v + cov * fg;
  }

  static double coverage(double dist, double halfw) {
    return std::clamp(halfw + 0.5 - dist, 0.0, 1.0);
  }

  void stroke_segment(const Point& a, const Point& b, double halfw, double fg) {
    const double x1 = std::min(a.x(), b.x()) - halfw - 1;
    const double x2 = std::max(a.x(), b.x()) + halfw + 1;
    const double y1 = std::min(a.y(), b.y()) - halfw - 1;
    const double y2 = std::max(a.y(), b.y()) + halfw + 1;
    for (int y = std::max(0, (int)std::floor(y1)); y <= std::min(raster->height - 1, (int)std::ceil(y2)); ++y) {
      for (int x = std::max(0, (int)std::floor(x1)); x <= std::min(raster->width - 1, (int)std::ceil(x2)); ++x) {
        const Point p(x + 0.5, y + 0.5);
        blend(x, y, coverage(distance_point_segment(p, a, b), halfw), fg);
      }
    }
  }

  void stroke_ring(const Point& c, double r, double halfw, double fg) {
    const int x1 = std::max(0, (int)std::floor(c.x() - r - halfw - 1));
    const int x2 = std::min(raster->width - 1, (int)std::ceil(c.x() + r + halfw + 1));
    const int y1 = std::max(0, (int)std::floor(c.y() - r - halfw - 1));
    const int y2 = std::min(raster->height - 1, (int)std::ceil(c.y() + r + halfw + 1));
    for (int y = y1; y <= y2; ++y) {
      for (int x = x1; x <= x2; ++x) {
        const Point p(x + 0.5, y + 0.5);
        blend(x, y, coverage(std::abs((p - c).norm() - r), halfw), fg);
      }
    }
  }

  void stroke_arc(const Point& c, double r, double a0, double a1, double halfw, double fg) {
    const int x1 = std::max(0, (int)std::floor(c.x() - r - halfw - 1));
    const int x2 = std::min(raster->width - 1, (int)std::ceil(c.x() + r + halfw + 1));
    const int y1 = std::max(0, (int)std::floor(c.y() - r - halfw - 1));
    const int y2 = std::min(raster->height - 1, (int)std::ceil(c.y() + r + halfw + 1));
    const double span = a1 - a0;
    const Point e0 = c + r * dirv(a0);
    const Point e1 = c + r * dirv(a1);
    for (int y = y1; y <= y2; ++y) {
      for (int x = x1; x <= x2; ++x) {
        const Point p(x + 0.5, y + 0.5);
        const Point v = p - c;
        double ang = std::atan2(v.y(), v.x()) - a0;
        while (ang < 0) ang += kTau;
        double dist;
        if (ang <= span) {
          dist = std::abs(v.norm() - r);
        } else {
          dist = std::min((p - e0).norm(), (p - e1).norm());
        }
        blend(x, y, coverage(dist, halfw), fg);
      }
    }
  }

  void stroke_ellipse(const Point& c, double rx, double ry, double rot, double halfw, double fg) {
    const double rmax = std::max(rx, ry);
    const int x1 = std::max(0, (int)std::floor(c.x() - rmax - halfw - 1));
    const int x2 = std::min(raster->width - 1, (int)std::ceil(c.x() + rmax + halfw + 1));
    const int y1 = std::max(0, (int)std::floor(c.y() - rmax - halfw - 1));
    const int y2 = std::min(raster->height - 1, (int)std::ceil(c.y() + rmax + halfw + 1));
    const Eigen::Rotation2Dd inv(-rot);
    for (int y = y1; y <= y2; ++y) {
      for (int x = x1; x <= x2; ++x) {
        const Point p(x + 0.5, y + 0.5);
        const Point q = inv * (p - c);
        const double fx = q.x() / rx, fy = q.y() / ry;
        const double f = fx * fx + fy * fy - 1.0;
        const double gx = 2.0 * q.x() / (rx * rx), gy = 2.0 * q.y() / (ry * ry);
        const double g = std::hypot(gx, gy);
        const double dist = g > 1e-12 ? std::abs(f) / g : std::abs(f);
        blend(x, y, coverage(dist, halfw), fg);
      }
    }
  }
};

// Dash a segment into on/off runs (6 on, 5 off in canvas units).
std::vector<std::pair<Point, Point>> dash_segment(const Point& a, const Point& b, double scale) {
  const double on = 6.0 * scale, off = 5.0 * scale;
  const double len = (b - a).norm();
  std::vector<std::pair<Point, Point>> out;
  if (len < 1e-9) return out;
  const Point d = (b - a) / len;
  double t = 0;
  while (t < len) {
    const double t1 = std::min(len, t + on);
    out.emplace_back(a + t * d, a + t1 * d);
    t = t1 + off;
  }
  return out;
}

}  // namespace

Raster rasterize(const VectorDocument& doc, double scale) {
  if (scale <= 0) throw std::invalid_argument("scale must be positive");
  Raster raster;
  raster.width = static_cast<int>(std::lround(doc.width * scale));
  raster.height = static_cast<int>(std::lround(doc.height * scale));
  raster.intensity.assign(static_cast<std::size_t>(raster.width) * raster.height,
                          hex_to_gray(doc.background));

  InkCanvas canvas{&raster, scale};

  for (const auto& c : doc.commands) {
    const double fg = hex_to_gray(c.style.stroke);
    const double halfw = 0.5 * c.style.stroke_width * scale;
    const auto S = [&](const Point& p) { return Point(p.x() * scale, p.y() * scale); };

    switch (c.kind) {
      case DrawCommand::Kind::polyline:
      case DrawCommand::Kind::polygon: {
        const std::size_t n = c.points.size();
        const std::size_t edges = c.kind == DrawCommand::Kind::polygon ? n : n - 1;
        for (std::size_t i = 0; i < edges; ++i) {
          const Point a = S(c.points[i]);
          const Point b = S(c.points[(i + 1) % n]);
          if (c.style.dashed) {
            for (const auto& [p, q] : dash_segment(a, b, scale)) canvas.stroke_segment(p, q, halfw, fg);
          } else {
            canvas.stroke_segment(a, b, halfw, fg);
          }
        }
        break;
      }
      case DrawCommand::Kind::circle:
        canvas.stroke_ring(S(c.center), c.radius * scale, halfw, fg);
        break;
      case DrawCommand::Kind::ellipse:
        canvas.stroke_ellipse(S(c.center), c.rx * scale, c.ry * scale, c.rotation, halfw, fg);
        break;
      case DrawCommand::Kind::arc:
        canvas.stroke_arc(S(c.center), c.radius * scale, c.angle_start, c.angle_end, halfw, fg);
        break;
      case DrawCommand::Kind::text: {
        const double font = c.style.font_size * scale;
        const double glyph_hw = std::max(0.55, font / 18.0);
        const double advance = 8.0 * 0.72 * font / 8.0;
        const double total_w = glyph_text_width(c.text, font);
        Point anchor = S(c.center);
        anchor.x() -= total_w / 2.0 - 0.27 * font;  // first glyph center
        for (char ch : c.text) {
          for (const auto& stroke : glyph_strokes(ch, anchor, font)) {
            for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
              canvas.stroke_segment(Point(stroke[i][0], stroke[i][1]),
                                    Point(stroke[i + 1][0], stroke[i + 1][1]), glyph_hw, fg);
            }
          }
          anchor.x() += advance;
        }
        break;
      }
    }
  }

  return raster;
}

Raster apply_noise(const Raster& raster, double variance, std::uint64_t seed) {
  if (!(variance > 0.0) || variance > 1.0) {
    throw std::invalid_argument("noise variance must be in (0, 1]");
  }
  Rng rng(derive_seed(seed, 0x6e6f6973ULL));
  const double sigma = std::sqrt(variance);
  Raster out = raster;
  for (auto& v : out.intensity) {
    v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Visual distractors
// ---------------------------------------------------------------------------

namespace {

// Catmull-Rom interpolation through control points, sampled as a polyline.
std::vector<Point> smooth_stroke(const std::vector<Point>& control) {
  std::vector<Point> pts;
  if (control.size() < 2) return control;
  std::vector<Point> c;
  c.push_back(control.front());
  for (const auto& p : control) c.push_back(p);
  c.push_back(control.back());
  for (std::size_t i = 0; i + 3 < c.size(); ++i) {
    for (int s = 0; s < 10; ++s) {
      const double t = s / 10.0;
      const double t2 = t * t, t3 = t2 * t;
      const Point p = 0.5 * ((2.0 * c[i + 1]) + (-c[i] + c[i + 2]) * t +
                             (2.0 * c[i] - 5.0 * c[i + 1] + 4.0 * c[i + 2] - c[i + 3]) * t2 +
                             (-c[i] + 3.0 * c[i + 1] - 3.0 * c[i + 2] + c[i + 3]) * t3);
      pts.push_back(p);
    }
  }
  pts.push_back(c[c.size() - 2]);
  return pts;
}

}  // namespace

DistractorResult apply_distractors(const Annotation& annotation, const VectorDocument& doc,
                                   const std::set<DistractorKind>& kinds, std::uint64_t seed) {
  if (kinds.empty()) throw std::invalid_argument("no distractor kinds requested");
  DistractorResult result;
  result.doc = doc;
  Rng rng(derive_seed(seed, 0x64697374ULL));

  DrawStyle style;
  style.stroke = annotation.style.foreground;
  style.stroke_width = std::max(1.4, annotation.style.line_width * 0.8);
  style.font_size = annotation.style.font_size;

  if (kinds.count(DistractorKind::scribble) && !annotation.objects.empty()) {
    const int strokes = static_cast<int>(rng.uniform_int(1, 3));
    for (int s = 0; s < strokes; ++s) {
      const auto& obj =
          annotation.objects[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(annotation.objects.size()) - 1))];
      const Box box = obj.box;
      const int control_count = static_cast<int>(rng.uniform_int(3, 6));
      std::vector<Point> control;
      // keep the first point inside the box proper so the stroke overlaps it
      control.emplace_back(rng.uniform(box.x1, box.x2), rng.uniform(box.y1, box.y2));
      for (int k = 1; k < control_count; ++k) {
        control.emplace_back(rng.uniform(box.x1 - 10.0, box.x2 + 10.0),
                             rng.uniform(box.y1 - 10.0, box.y2 + 10.0));
      }
      DrawCommand cmd;
      cmd.kind = DrawCommand::Kind::polyline;
      cmd.points = smooth_stroke(control);
      cmd.style = style;
      cmd.group = "distractor";
      result.doc.commands.push_back(cmd);
    }
  }

  if (kinds.count(DistractorKind::wedge)) {
    std::vector<const AnnotationObject*> polygons;
    for (const auto& obj : annotation.objects) {
      if (obj.geometry && shape_info(obj.geometry->kind).is_polygon) polygons.push_back(&obj);
    }
    if (polygons.empty()) {
      result.wedge_skipped = true;
    } else {
      const int wedges = static_cast<int>(rng.uniform_int(1, 2));
      for (int wi = 0; wi < wedges; ++wi) {
        const auto* obj = polygons[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(polygons.size()) - 1))];
        const auto& vs = obj->geometry->vertices;
        const std::size_t n = vs.size();
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(n) - 1));
        const Point v = vs[k];
        const Point u = (vs[(k + n - 1) % n] - v).normalized();
        const Point w = (vs[(k + 1) % n] - v).normalized();
        const double a0 = std::atan2(u.y(), u.x());
        const double angle = std::acos(std::clamp(u.dot(w), -1.0, 1.0));
        const double sweep = (u.x() * w.y() - u.y() * w.x()) >= 0 ? angle : -angle;
        DrawCommand cmd;
        cmd.kind = DrawCommand::Kind::arc;
        cmd.center = v;
        cmd.radius = 10.0;
        cmd.angle_start = sweep >= 0 ? a0 : a0 + sweep;
        cmd.angle_end = cmd.angle_start + std::abs(sweep);
        cmd.style = style;
        cmd.group = "distractor";
        result.doc.commands.push_back(cmd);
      }
    }
  }

  if (kinds.count(DistractorKind::auxiliary)) {
    // dashed helper segment between two labeled points
    std::vector<std::pair<std::string, Point>> labeled;
    std::set<std::string> seen;
    for (const auto& obj : annotation.objects) {
      if (!obj.geometry) continue;
      for (std::size_t i = 0; i < obj.geometry->labels.size(); ++i) {
        const auto& l = obj.geometry->labels[i];
        if (!l.empty() && seen.insert(l).second) labeled.emplace_back(l, obj.geometry->vertices[i]);
      }
    }
    if (labeled.size() >= 2) {
      const std::size_t i = static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(labeled.size()) - 1));
      std::size_t j = i;
      while (j == i) j = static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(labeled.size()) - 1));
      DrawCommand cmd;
      cmd.kind = DrawCommand::Kind::polyline;
      cmd.points = {labeled[i].second, labeled[j].second};
      cmd.style = style;
      cmd.style.dashed = true;
      cmd.group = "distractor";
      result.doc.commands.push_back(cmd);
    }
  }

  return result;
}

// ---------------------------------------------------------------------------
// PNG encoding (8-bit grayscale)
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

}  // namespace

std::string png_bytes(const Raster& raster) {
  std::string out;
  out.append("\x89PNG\r\n\x1a\n", 8);

  const auto chunk = [&](const char* type, const std::string& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    std::string body = std::string(type, 4) + data;
    out += body;
    const auto crc =
        crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
  };

  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(raster.width));
  put_u32(ihdr, static_cast<std::uint32_t>(raster.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace
  chunk("IHDR", ihdr);

  std::string scanlines;
  scanlines.reserve(static_cast<std::size_t>(raster.height) * (raster.width + 1));
  for (int y = 0; y < raster.height; ++y) {
    scanlines.push_back(0);  // filter: none
    for (int x = 0; x < raster.width; ++x) {
      const double v = std::clamp(raster.at(x, y), 0.0, 1.0);
      scanlines.push_back(static_cast<char>(std::lround(v * 255.0)));
    }
  }
  uLongf comp_len = compressBound(static_cast<uLong>(scanlines.size()));
  std::string compressed(comp_len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &comp_len,
                reinterpret_cast<const Bytef*>(scanlines.data()),
                static_cast<uLong>(scanlines.size()), 6) != Z_OK) {
    throw std::runtime_error("PNG deflate failed");
  }
  compressed.resize(comp_len);
  chunk("IDAT", compressed);
  chunk("IEND", "");
  return out;
}

void write_png(const std::string& path, const Raster& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::string bytes = png_bytes(raster);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace geobench
