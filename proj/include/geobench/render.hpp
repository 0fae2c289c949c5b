#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "geobench/annotation.hpp"
#include "geobench/geometry.hpp"

namespace geobench {

class RenderError : public std::runtime_error {
 public:
  explicit RenderError(const std::string& what) : std::runtime_error(what) {}
};

struct DrawStyle {
  std::string stroke = "#000000";
  double stroke_width = 2.0;
  bool dashed = false;
  double font_size = 14.0;
};

struct DrawCommand {
  enum class Kind { polyline, polygon, circle, ellipse, arc, text };
  Kind kind = Kind::polyline;
  std::vector<Point> points;  // polyline / polygon
  Point center{0, 0};         // circle / ellipse / arc / text anchor
  double radius = 0;          // circle / arc
  double rx = 0, ry = 0;      // ellipse semi-axes
  double rotation = 0;        // ellipse tilt
  double angle_start = 0;     // arc, parametric angles (y-down)
  double angle_end = 0;
  std::string text;
  DrawStyle style;
  std::string group;  // object id or "distractor"
};

struct VectorDocument {
  int width = 512;
  int height = 512;
  std::string background = "#ffffff";
  std::vector<DrawCommand> commands;

  std::string to_svg() const;
};

// Translate an annotation into draw commands: one group per object, labels
// placed along the outward angle bisector 10 px from each labeled vertex.
// Throws RenderError when an object has no drawable geometry.
VectorDocument render(const Annotation& annotation, const StyleSpec& style);

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> intensity;  // grayscale, row-major, values in [0,1]

  double& at(int x, int y) { return intensity[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return intensity[static_cast<std::size_t>(y) * width + x]; }
};

Raster rasterize(const VectorDocument& doc, double scale = 1.0);

// Additive zero-mean Gaussian pixel noise with the given variance, clipped to
// [0,1]. Throws std::invalid_argument when variance is outside (0,1].
Raster apply_noise(const Raster& raster, double variance, std::uint64_t seed);

enum class DistractorKind { scribble, wedge, auxiliary };

struct DistractorResult {
  VectorDocument doc;
  bool wedge_skipped = false;  // wedge requested but no polygon corner exists
};

// Visual-only perturbations: the annotation is never touched.
DistractorResult apply_distractors(const Annotation& annotation, const VectorDocument& doc,
                                   const std::set<DistractorKind>& kinds, std::uint64_t seed);

// 8-bit grayscale PNG encoding.
std::string png_bytes(const Raster& raster);
void write_png(const std::string& path, const Raster& raster);

}  // namespace geobench
