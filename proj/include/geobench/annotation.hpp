#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geobench/geometry.hpp"
#include "geobench/rng.hpp"
#include "json.hpp"

namespace geobench {

// ---------------------------------------------------------------------------
// Boxes and spatial relations
// ---------------------------------------------------------------------------

struct Box {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  bool valid() const { return x1 <= x2 && y1 <= y2; }
  double cx() const { return (x1 + x2) / 2.0; }
  double cy() const { return (y1 + y2) / 2.0; }
  bool operator==(const Box&) const = default;

  // Canonical textual form "(x1, y1, x2, y2)" used in answers and captions.
  std::string to_text() const;
};

enum class SpatialRelation { top_left, top_right, bottom_left, bottom_right };

std::string to_string(SpatialRelation rel);
std::optional<SpatialRelation> spatial_relation_from_string(const std::string& s);
SpatialRelation diagonal_opposite(SpatialRelation rel);

// Minimal integer box containing the object's rendered geometry.
Box bounding_box(const SceneObject& object);

// Position of b relative to a, comparing box centers under y-down
// coordinates. Ties resolve to "right" on x and "top" on y.
SpatialRelation spatial_relation(const Box& a, const Box& b);

// ---------------------------------------------------------------------------
// Style
// ---------------------------------------------------------------------------

struct StyleSpec {
  std::string foreground = "#1e4482";
  std::string background = "#ffffff";
  double line_width = 2.0;
  double font_size = 14.0;

  bool operator==(const StyleSpec&) const = default;
};

// Fixed single-hue luminance ramp the foreground color is drawn from.
const std::vector<std::string>& monochromatic_palette();

StyleSpec sample_style(Rng& rng);

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

struct AnnotationObject {
  std::string id;
  std::string shape;  // natural-language shape name, e.g. "isosceles triangle"
  std::map<std::string, std::string> attributes;
  Box box;
  bool prominent = true;
  bool counted = true;  // legends/titles from chart data are grounding-only
  std::optional<SceneObject> geometry;  // present for synthesized plane scenes
};

struct AnnotationRelation {
  std::string kind;
  std::string subject_id;
  std::string object_id;
  bool spatial = false;
};

struct CarriedQA {
  std::string question;
  bool answer_yes = true;
};

struct Annotation {
  std::string image_id;
  std::string subject = "plane";  // plane | solid | graph
  int width = 512;
  int height = 512;
  StyleSpec style;
  std::optional<std::string> chart_type;  // graph subject
  std::vector<AnnotationObject> objects;
  std::vector<AnnotationRelation> relations;
  std::vector<CarriedQA> carried_qa;  // graph subject: source true/false questions

  nlohmann::ordered_json to_json() const;
  static Annotation from_json(const nlohmann::json& j);
  std::string serialize() const;

  const AnnotationObject* find_object(const std::string& id) const;
  int prominent_count() const;
  bool operator==(const Annotation& other) const { return to_json() == other.to_json(); }
};

// Scene -> annotation. One object entry per scene object with its computed
// box, mathematical relations copied, and one spatial relation per unordered
// prominent pair. Marker mode swaps vertex-letter attributes for a single
// numeric marker per object.
Annotation to_annotation(const Scene& scene, const StyleSpec& style,
                         const std::string& image_id = "", bool marker_mode = false);

// Validates raw JSON text against the canonical schema. Returns an empty list
// when the document is valid; otherwise one message per violation, each
// naming the offending path.
std::vector<std::string> validate_annotation(const std::string& raw);

// JSONL helpers.
std::vector<Annotation> read_annotations(const std::string& path);
void write_annotations(const std::string& path, const std::vector<Annotation>& annotations);

}  // namespace geobench
