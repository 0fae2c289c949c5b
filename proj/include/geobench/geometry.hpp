#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace geobench {

using Point = Eigen::Vector2d;

// ---------------------------------------------------------------------------
// Registries
// ---------------------------------------------------------------------------

enum class ShapeKind {
  isosceles_triangle,
  equilateral_triangle,
  right_triangle,
  scalene_triangle,
  square,
  rectangle,
  parallelogram,
  rhombus,
  isosceles_trapezoid,
  right_trapezoid,
  pentagon,
  hexagon,
  circle,
  semicircle,
  ellipse,
  segment,
};

enum class RelationKind {
  on,
  intersection,
  parallel,
  perpendicular,
  tangent,
  midpoint,
  angle_bisection,
  angle_trisection,
  reflection,
  symmetry_axis,
};

enum class ShapeFamily { triangles, quadrilaterals, polygons, conics, lines };

struct ShapeInfo {
  ShapeKind kind;
  std::string id;       // stable identifier used in configs and JSON
  std::string display;  // natural-language name used in questions/captions
  int label_count;      // vertex labels the shape consumes
  bool is_polygon;      // closed polygon with straight sides
  ShapeFamily family;
  bool has_symmetry_axis;
};

// What must already exist in the scene before a relation clause is valid.
enum class PrereqClass { any_object, segment_like, circle_like, polygon_like, symmetric_shape };

struct RelationInfo {
  RelationKind kind;
  std::string id;
  std::string display;
  PrereqClass prereq;
  int fresh_objects;  // primitives the relation introduces when sampled
};

const std::vector<ShapeInfo>& shape_registry();
const std::vector<RelationInfo>& relation_registry();
const ShapeInfo& shape_info(ShapeKind kind);
const RelationInfo& relation_info(RelationKind kind);
std::optional<ShapeKind> shape_kind_from_id(const std::string& id);
std::optional<RelationKind> relation_kind_from_id(const std::string& id);

// ---------------------------------------------------------------------------
// Clause programs
// ---------------------------------------------------------------------------

struct Clause {
  bool is_shape = true;
  ShapeKind shape = ShapeKind::segment;
  RelationKind relation = RelationKind::on;
  // Indices of previously declared objects. For relation clauses the last
  // operand is the anchor; a leading operand, when present, names an existing
  // object that the relation constrains instead of introducing a fresh one.
  std::vector<int> operands;
  std::vector<std::string> fresh_labels;
  int corner = -1;  // polygon corner for angle relations
};

struct GenerationConfig {
  int min_shapes = 1;
  int max_shapes = 4;
  int min_relations = 0;
  int max_relations = 3;
  int canvas_width = 512;
  int canvas_height = 512;
  double margin = 16.0;
  int max_attempts = 64;
  // Sampling pools; empty means the full registry.
  std::vector<std::string> shape_pool;
  std::vector<std::string> relation_pool;

  nlohmann::ordered_json to_json() const;
  static GenerationConfig from_json(const nlohmann::json& j);
};

struct ClauseProgram {
  std::vector<Clause> clauses;
  std::uint64_t seed = 0;
  std::string config_hash;

  int object_count() const;
  nlohmann::ordered_json to_json() const;
  std::string serialize() const;  // canonical byte form
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

ClauseProgram sample_program(std::uint64_t seed, const GenerationConfig& config);

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

enum class RejectReason {
  malformed,
  missing_prerequisites,
  contradictory_pair,
  duplicate_relation,
  over_constrained,
};

std::string to_string(RejectReason reason);

struct Rejection {
  RejectReason reason;
  std::string detail;
};

struct VerifiedProgram {
  ClauseProgram program;
  GenerationConfig config;
};

using VerifyResult = std::variant<VerifiedProgram, Rejection>;

VerifyResult verify_program(const ClauseProgram& program, const GenerationConfig& config);

// ---------------------------------------------------------------------------
// Scenes
// ---------------------------------------------------------------------------

struct SceneObject {
  int id = 0;
  ShapeKind kind = ShapeKind::segment;
  // Polygon vertices, segment endpoints, or [center] for circle-like kinds.
  std::vector<Point> vertices;
  std::vector<std::string> labels;  // one per vertex entry
  double radius = 0.0;              // circle / semicircle
  double axis_a = 0.0;              // ellipse semi-major
  double axis_b = 0.0;              // ellipse semi-minor
  double rotation = 0.0;            // ellipse tilt / semicircle start angle

  std::string label_string() const;  // concatenated labels, e.g. "ABCD"
};

struct SceneRelation {
  RelationKind kind = RelationKind::on;
  int subject = 0;  // constrained or introduced object
  int anchor = 0;   // pre-existing object the relation refers to
  int corner = -1;  // polygon corner for angle relations
  int aux = -1;     // axis object for reflection, second ray for trisection
};

struct Scene {
  int width = 512;
  int height = 512;
  double margin = 16.0;
  std::vector<SceneObject> objects;
  std::vector<SceneRelation> relations;
  std::vector<int> prominence_set;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
  std::string serialize() const;
};

struct RealizationFailure {
  std::string detail;
};

using RealizeResult = std::variant<Scene, RealizationFailure>;

RealizeResult realize_program(const VerifiedProgram& verified, std::uint64_t seed);

// Residual of relation `relation_index` in the scene, normalized by
// max(width, height) where the quantity has length units. Zero iff the
// relation holds exactly; throws std::out_of_range on a bad index.
double relation_residual(const Scene& scene, std::size_t relation_index);

// ---------------------------------------------------------------------------
// Geometry helpers (free functions over Eigen types)
// ---------------------------------------------------------------------------

// Signed area in y-down screen coordinates: negative for polygons whose
// vertices run clockwise on screen.
double signed_area(std::span<const Point> polygon);

Point polygon_centroid(std::span<const Point> polygon);

double distance_point_segment(const Point& p, const Point& a, const Point& b);

// Minimal distance between two segments; zero iff they intersect.
double segment_distance(const Point& a0, const Point& a1, const Point& b0, const Point& b1);

// Reflect p across the line through a and b.
Point reflect_point(const Point& p, const Point& a, const Point& b);

// |sin| of the angle between two directions; zero iff parallel.
double parallel_residual(const Point& d0, const Point& d1);

// |cos| of the angle between two directions; zero iff perpendicular.
double perpendicular_residual(const Point& d0, const Point& d1);

// Distance from p to the object's outline (not its interior).
double boundary_distance(const SceneObject& object, const Point& p);

// Float axis-aligned bounds of the object's rendered geometry.
struct Bounds {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  Point center() const { return {(x1 + x2) / 2.0, (y1 + y2) / 2.0}; }
};

Bounds object_bounds(const SceneObject& object);

double bounds_iou(const Bounds& a, const Bounds& b);

}  // namespace geobench
