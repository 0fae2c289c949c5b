#include "geobench/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "geobench/digest.hpp"
#include "geobench/rng.hpp"

namespace geobench {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;

double deg(double d) { return d * kPi / 180.0; }

Point dir(double angle) { return {std::cos(angle), std::sin(angle)}; }

Point rot90(const Point& v) { return {-v.y(), v.x()}; }

double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

// ---------------------------------------------------------------------------
// Registries
// ---------------------------------------------------------------------------

const std::vector<ShapeInfo>& shape_registry() {
  static const std::vector<ShapeInfo> registry = {
      {ShapeKind::isosceles_triangle, "isosceles_triangle", "isosceles triangle", 3, true, ShapeFamily::triangles, true},
      {ShapeKind::equilateral_triangle, "equilateral_triangle", "equilateral triangle", 3, true, ShapeFamily::triangles, true},
      {ShapeKind::right_triangle, "right_triangle", "right triangle", 3, true, ShapeFamily::triangles, false},
      {ShapeKind::scalene_triangle, "scalene_triangle", "scalene triangle", 3, true, ShapeFamily::triangles, false},
      {ShapeKind::square, "square", "square", 4, true, ShapeFamily::quadrilaterals, true},
      {ShapeKind::rectangle, "rectangle", "rectangle", 4, true, ShapeFamily::quadrilaterals, true},
      {ShapeKind::parallelogram, "parallelogram", "parallelogram", 4, true, ShapeFamily::quadrilaterals, false},
      {ShapeKind::rhombus, "rhombus", "rhombus", 4, true, ShapeFamily::quadrilaterals, true},
      {ShapeKind::isosceles_trapezoid, "isosceles_trapezoid", "isosceles trapezoid", 4, true, ShapeFamily::quadrilaterals, true},
      {ShapeKind::right_trapezoid, "right_trapezoid", "right trapezoid", 4, true, ShapeFamily::quadrilaterals, false},
      {ShapeKind::pentagon, "pentagon", "pentagon", 5, true, ShapeFamily::polygons, true},
      {ShapeKind::hexagon, "hexagon", "hexagon", 6, true, ShapeFamily::polygons, true},
      {ShapeKind::circle, "circle", "circle", 1, false, ShapeFamily::conics, true},
      {ShapeKind::semicircle, "semicircle", "semicircle", 1, false, ShapeFamily::conics, true},
      {ShapeKind::ellipse, "ellipse", "ellipse", 1, false, ShapeFamily::conics, true},
      {ShapeKind::segment, "segment", "segment", 2, false, ShapeFamily::lines, true},
  };
  return registry;
}

const std::vector<RelationInfo>& relation_registry() {
  static const std::vector<RelationInfo> registry = {
      {RelationKind::on, "on", "on", PrereqClass::any_object, 1},
      {RelationKind::intersection, "intersection", "intersection", PrereqClass::segment_like, 1},
      {RelationKind::parallel, "parallel", "parallel", PrereqClass::segment_like, 1},
      {RelationKind::perpendicular, "perpendicular", "perpendicular", PrereqClass::segment_like, 1},
      {RelationKind::tangent, "tangent", "tangent", PrereqClass::circle_like, 1},
      {RelationKind::midpoint, "midpoint", "midpoint", PrereqClass::segment_like, 1},
      {RelationKind::angle_bisection, "angle_bisection", "angle bisection", PrereqClass::polygon_like, 1},
      {RelationKind::angle_trisection, "angle_trisection", "angle trisection", PrereqClass::polygon_like, 2},
      {RelationKind::reflection, "reflection", "reflection", PrereqClass::any_object, 2},
      {RelationKind::symmetry_axis, "symmetry_axis", "symmetry axis", PrereqClass::symmetric_shape, 1},
  };
  return registry;
}

const ShapeInfo& shape_info(ShapeKind kind) {
  return shape_registry()[static_cast<std::size_t>(kind)];
}

const RelationInfo& relation_info(RelationKind kind) {
  return relation_registry()[static_cast<std::size_t>(kind)];
}

std::optional<ShapeKind> shape_kind_from_id(const std::string& id) {
  for (const auto& info : shape_registry())
    if (info.id == id) return info.kind;
  return std::nullopt;
}

std::optional<RelationKind> relation_kind_from_id(const std::string& id) {
  for (const auto& info : relation_registry())
    if (info.id == id) return info.kind;
  return std::nullopt;
}

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::malformed: return "Malformed";
    case RejectReason::missing_prerequisites: return "MissingPrerequisites";
    case RejectReason::contradictory_pair: return "ContradictoryPair";
    case RejectReason::duplicate_relation: return "DuplicateRelation";
    case RejectReason::over_constrained: return "OverConstrained";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

double signed_area(std::span<const Point> polygon) {
  // Shoelace with the y axis flipped so that screen-clockwise traversal
  // (y grows downward) yields a negative value.
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = polygon[i];
    const Point& q = polygon[(i + 1) % n];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return -0.5 * twice;
}

Point polygon_centroid(std::span<const Point> polygon) {
  Point sum = Point::Zero();
  for (const auto& p : polygon) sum += p;
  return sum / static_cast<double>(polygon.size());
}

double distance_point_segment(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

bool segments_properly_cross(const Point& a0, const Point& a1, const Point& b0, const Point& b1) {
  const auto side = [](const Point& p, const Point& q, const Point& r) {
    return cross2(q - p, r - p);
  };
  const double d1 = side(a0, a1, b0);
  const double d2 = side(a0, a1, b1);
  const double d3 = side(b0, b1, a0);
  const double d4 = side(b0, b1, a1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

double segment_distance(const Point& a0, const Point& a1, const Point& b0, const Point& b1) {
  if (segments_properly_cross(a0, a1, b0, b1)) return 0.0;
  return std::min(std::min(distance_point_segment(b0, a0, a1), distance_point_segment(b1, a0, a1)),
                  std::min(distance_point_segment(a0, b0, b1), distance_point_segment(a1, b0, b1)));
}

Point reflect_point(const Point& p, const Point& a, const Point& b) {
  const Point d = (b - a).normalized();
  const Point v = p - a;
  const Point proj = v.dot(d) * d;
  return a + 2.0 * proj - v;
}

double parallel_residual(const Point& d0, const Point& d1) {
  return std::abs(cross2(d0, d1)) / (d0.norm() * d1.norm());
}

double perpendicular_residual(const Point& d0, const Point& d1) {
  return std::abs(d0.dot(d1)) / (d0.norm() * d1.norm());
}

namespace {

Point ellipse_point(const SceneObject& e, double t) {
  const Eigen::Rotation2Dd rot(e.rotation);
  return e.vertices[0] + rot * Point(e.axis_a * std::cos(t), e.axis_b * std::sin(t));
}

// First-order distance from p to an ellipse outline: |f| / |grad f| with
// f the implicit equation in the local frame.
double ellipse_outline_distance(const SceneObject& e, const Point& p) {
  const Eigen::Rotation2Dd rot(-e.rotation);
  const Point q = rot * (p - e.vertices[0]);
  const double fx = q.x() / e.axis_a;
  const double fy = q.y() / e.axis_b;
  const double f = fx * fx + fy * fy - 1.0;
  const double gx = 2.0 * q.x() / (e.axis_a * e.axis_a);
  const double gy = 2.0 * q.y() / (e.axis_b * e.axis_b);
  const double g = std::hypot(gx, gy);
  if (g <= 1e-12) return std::abs(f);
  return std::abs(f) / g;
}

double normalize_angle(double a) {
  while (a < 0) a += kTau;
  while (a >= kTau) a -= kTau;
  return a;
}

// Semicircle outline: arc from rotation to rotation + pi, plus the chord.
std::pair<Point, Point> semicircle_chord(const SceneObject& s) {
  const Point c = s.vertices[0];
  return {c + s.radius * dir(s.rotation), c + s.radius * dir(s.rotation + kPi)};
}

double semicircle_outline_distance(const SceneObject& s, const Point& p) {
  const auto [e0, e1] = semicircle_chord(s);
  const double chord = distance_point_segment(p, e0, e1);
  const Point c = s.vertices[0];
  const Point v = p - c;
  const double ang = normalize_angle(std::atan2(v.y(), v.x()) - s.rotation);
  double arc;
  if (ang <= kPi) {
    arc = std::abs(v.norm() - s.radius);
  } else {
    arc = std::min((p - e0).norm(), (p - e1).norm());
  }
  return std::min(chord, arc);
}

}  // namespace

double boundary_distance(const SceneObject& object, const Point& p) {
  switch (object.kind) {
    case ShapeKind::circle:
      return std::abs((p - object.vertices[0]).norm() - object.radius);
    case ShapeKind::ellipse:
      return ellipse_outline_distance(object, p);
    case ShapeKind::semicircle:
      return semicircle_outline_distance(object, p);
    case ShapeKind::segment:
      return distance_point_segment(p, object.vertices[0], object.vertices[1]);
    default: {
      double best = std::numeric_limits<double>::infinity();
      const auto& vs = object.vertices;
      for (std::size_t i = 0; i < vs.size(); ++i) {
        best = std::min(best, distance_point_segment(p, vs[i], vs[(i + 1) % vs.size()]));
      }
      return best;
    }
  }
}

Bounds object_bounds(const SceneObject& object) {
  Bounds b;
  switch (object.kind) {
    case ShapeKind::circle: {
      const Point& c = object.vertices[0];
      b = {c.x() - object.radius, c.y() - object.radius, c.x() + object.radius, c.y() + object.radius};
      break;
    }
    case ShapeKind::ellipse: {
      const Point& c = object.vertices[0];
      const double ct = std::cos(object.rotation), st = std::sin(object.rotation);
      const double ex = std::sqrt(object.axis_a * object.axis_a * ct * ct + object.axis_b * object.axis_b * st * st);
      const double ey = std::sqrt(object.axis_a * object.axis_a * st * st + object.axis_b * object.axis_b * ct * ct);
      b = {c.x() - ex, c.y() - ey, c.x() + ex, c.y() + ey};
      break;
    }
    case ShapeKind::semicircle: {
      const Point& c = object.vertices[0];
      const auto [e0, e1] = semicircle_chord(object);
      double x1 = std::min(e0.x(), e1.x()), x2 = std::max(e0.x(), e1.x());
      double y1 = std::min(e0.y(), e1.y()), y2 = std::max(e0.y(), e1.y());
      // Arc extremes occur where the parametric angle crosses a multiple of
      // pi/2 inside [rotation, rotation + pi].
      for (int k = -4; k <= 8; ++k) {
        const double phi = k * kPi / 2.0;
        if (phi >= object.rotation - 1e-12 && phi <= object.rotation + kPi + 1e-12) {
          const Point p = c + object.radius * dir(phi);
          x1 = std::min(x1, p.x());
          x2 = std::max(x2, p.x());
          y1 = std::min(y1, p.y());
          y2 = std::max(y2, p.y());
        }
      }
      b = {x1, y1, x2, y2};
      break;
    }
    default: {
      double x1 = object.vertices[0].x(), x2 = x1, y1 = object.vertices[0].y(), y2 = y1;
      for (const auto& v : object.vertices) {
        x1 = std::min(x1, v.x());
        x2 = std::max(x2, v.x());
        y1 = std::min(y1, v.y());
        y2 = std::max(y2, v.y());
      }
      b = {x1, y1, x2, y2};
      break;
    }
  }
  return b;
}

double bounds_iou(const Bounds& a, const Bounds& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

std::string SceneObject::label_string() const {
  std::string s;
  for (const auto& l : labels) s += l;
  return s;
}

// ---------------------------------------------------------------------------
// Configs and programs
// ---------------------------------------------------------------------------

nlohmann::ordered_json GenerationConfig::to_json() const {
  nlohmann::ordered_json j;
  j["min_shapes"] = min_shapes;
  j["max_shapes"] = max_shapes;
  j["min_relations"] = min_relations;
  j["max_relations"] = max_relations;
  j["canvas_width"] = canvas_width;
  j["canvas_height"] = canvas_height;
  j["margin"] = margin;
  j["max_attempts"] = max_attempts;
  j["shape_pool"] = shape_pool;
  j["relation_pool"] = relation_pool;
  return j;
}

GenerationConfig GenerationConfig::from_json(const nlohmann::json& j) {
  GenerationConfig c;
  c.min_shapes = j.value("min_shapes", c.min_shapes);
  c.max_shapes = j.value("max_shapes", c.max_shapes);
  c.min_relations = j.value("min_relations", c.min_relations);
  c.max_relations = j.value("max_relations", c.max_relations);
  c.canvas_width = j.value("canvas_width", c.canvas_width);
  c.canvas_height = j.value("canvas_height", c.canvas_height);
  c.margin = j.value("margin", c.margin);
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  if (j.contains("shape_pool")) c.shape_pool = j["shape_pool"].get<std::vector<std::string>>();
  if (j.contains("relation_pool")) c.relation_pool = j["relation_pool"].get<std::vector<std::string>>();
  return c;
}

namespace {

int clause_fresh_objects(const Clause& c) {
  if (c.is_shape) return 1;
  if (c.operands.size() >= 2) return 0;  // constrains an existing object
  return relation_info(c.relation).fresh_objects;
}

void validate_config(const GenerationConfig& config) {
  if (config.min_shapes > config.max_shapes) throw ConfigError("min_shapes > max_shapes");
  if (config.min_relations > config.max_relations) throw ConfigError("min_relations > max_relations");
  if (config.min_shapes < 1) throw ConfigError("min_shapes must be >= 1");
  if (config.min_relations < 0) throw ConfigError("min_relations must be >= 0");
  if (config.canvas_width < 96 || config.canvas_height < 96) throw ConfigError("canvas too small");
  if (config.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  for (const auto& id : config.shape_pool)
    if (!shape_kind_from_id(id)) throw ConfigError("unknown shape in pool: " + id);
  for (const auto& id : config.relation_pool)
    if (!relation_kind_from_id(id)) throw ConfigError("unknown relation in pool: " + id);
}

std::vector<ShapeKind> effective_shape_pool(const GenerationConfig& config) {
  std::vector<ShapeKind> pool;
  if (config.shape_pool.empty()) {
    for (const auto& info : shape_registry()) pool.push_back(info.kind);
  } else {
    for (const auto& id : config.shape_pool) pool.push_back(*shape_kind_from_id(id));
  }
  return pool;
}

std::vector<RelationKind> effective_relation_pool(const GenerationConfig& config) {
  std::vector<RelationKind> pool;
  if (config.relation_pool.empty()) {
    for (const auto& info : relation_registry()) pool.push_back(info.kind);
  } else {
    for (const auto& id : config.relation_pool) pool.push_back(*relation_kind_from_id(id));
  }
  return pool;
}

bool kind_matches_prereq(ShapeKind kind, PrereqClass prereq) {
  const ShapeInfo& info = shape_info(kind);
  switch (prereq) {
    case PrereqClass::any_object: return true;
    case PrereqClass::segment_like: return kind == ShapeKind::segment;
    case PrereqClass::circle_like: return kind == ShapeKind::circle;
    case PrereqClass::polygon_like: return info.is_polygon;
    case PrereqClass::symmetric_shape: return info.has_symmetry_axis;
  }
  return false;
}

// Labels consumed by a relation clause that introduces fresh primitives.
int relation_fresh_labels(RelationKind kind, ShapeKind source_kind) {
  switch (kind) {
    case RelationKind::on:
    case RelationKind::intersection:
    case RelationKind::parallel:
    case RelationKind::perpendicular:
    case RelationKind::tangent:
    case RelationKind::midpoint:
      return 2;
    case RelationKind::angle_bisection:
      return 1;  // ray reuses the corner label
    case RelationKind::angle_trisection:
      return 2;
    case RelationKind::reflection:
      return 2 + shape_info(source_kind).label_count;
    case RelationKind::symmetry_axis:
      return 2;
  }
  return 0;
}

}  // namespace

int ClauseProgram::object_count() const {
  int n = 0;
  for (const auto& c : clauses) n += clause_fresh_objects(c);
  return n;
}

nlohmann::ordered_json ClauseProgram::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["clauses"] = nlohmann::ordered_json::array();
  for (const auto& c : clauses) {
    nlohmann::ordered_json cj;
    if (c.is_shape) {
      cj["type"] = "shape";
      cj["kind"] = shape_info(c.shape).id;
    } else {
      cj["type"] = "relation";
      cj["kind"] = relation_info(c.relation).id;
      cj["operands"] = c.operands;
      if (c.corner >= 0) cj["corner"] = c.corner;
    }
    cj["fresh_labels"] = c.fresh_labels;
    j["clauses"].push_back(cj);
  }
  return j;
}

std::string ClauseProgram::serialize() const { return to_json().dump(); }

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

ClauseProgram sample_program(std::uint64_t seed, const GenerationConfig& config) {
  validate_config(config);

  Rng rng(derive_seed(seed, 0x73616d70ULL));
  ClauseProgram program;
  program.seed = seed;
  program.config_hash = sha256_hex(config.to_json().dump());

  std::vector<char> alphabet;
  for (char c = 'A'; c <= 'Z'; ++c) alphabet.push_back(c);
  rng.shuffle(alphabet);
  std::size_t next_label = 0;
  const auto take_labels = [&](int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(std::string(1, alphabet[next_label++]));
    return out;
  };
  const auto labels_left = [&] { return alphabet.size() - next_label; };

  const auto shape_pool = effective_shape_pool(config);
  const auto relation_pool = effective_relation_pool(config);

  std::vector<ShapeKind> declared;  // kinds of declared objects, in order

  const int shape_count = static_cast<int>(rng.uniform_int(config.min_shapes, config.max_shapes));
  for (int i = 0; i < shape_count; ++i) {
    ShapeKind kind = shape_pool[0];
    bool found = false;
    for (int tries = 0; tries < 24; ++tries) {
      kind = rng.choice(shape_pool);
      if (static_cast<std::size_t>(shape_info(kind).label_count) <= labels_left()) {
        found = true;
        break;
      }
    }
    if (!found) break;  // alphabet exhausted
    Clause clause;
    clause.is_shape = true;
    clause.shape = kind;
    clause.fresh_labels = take_labels(shape_info(kind).label_count);
    program.clauses.push_back(clause);
    declared.push_back(kind);
  }

  const int relation_count = static_cast<int>(rng.uniform_int(config.min_relations, config.max_relations));
  for (int i = 0; i < relation_count; ++i) {
    // Relations whose prerequisites are met by some already-declared object.
    std::vector<RelationKind> eligible;
    for (RelationKind rk : relation_pool) {
      const auto& info = relation_info(rk);
      for (ShapeKind dk : declared) {
        if (kind_matches_prereq(dk, info.prereq)) {
          eligible.push_back(rk);
          break;
        }
      }
    }
    if (eligible.empty()) break;

    const RelationKind rk = rng.choice(eligible);
    std::vector<int> anchors;
    for (std::size_t oi = 0; oi < declared.size(); ++oi) {
      if (kind_matches_prereq(declared[oi], relation_info(rk).prereq)) anchors.push_back(static_cast<int>(oi));
    }
    const int anchor = anchors[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(anchors.size()) - 1))];
    const ShapeKind anchor_kind = declared[static_cast<std::size_t>(anchor)];

    const int need = relation_fresh_labels(rk, anchor_kind);
    if (static_cast<std::size_t>(need) > labels_left()) continue;  // not enough letters left

    Clause clause;
    clause.is_shape = false;
    clause.relation = rk;
    clause.operands = {anchor};
    clause.fresh_labels = take_labels(need);
    if (rk == RelationKind::angle_bisection || rk == RelationKind::angle_trisection) {
      clause.corner = static_cast<int>(rng.uniform_int(0, shape_info(anchor_kind).label_count - 1));
    }
    program.clauses.push_back(clause);
    // Track the objects this relation introduces.
    switch (rk) {
      case RelationKind::reflection:
        declared.push_back(ShapeKind::segment);  // axis
        declared.push_back(anchor_kind);         // mirror copy
        break;
      case RelationKind::angle_trisection:
        declared.push_back(ShapeKind::segment);
        declared.push_back(ShapeKind::segment);
        break;
      default:
        declared.push_back(ShapeKind::segment);
        break;
    }
  }

  return program;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

VerifyResult verify_program(const ClauseProgram& program, const GenerationConfig& config) {
  validate_config(config);

  if (program.clauses.empty()) {
    return Rejection{RejectReason::malformed, "program has no clauses"};
  }
  if (!program.clauses.front().is_shape) {
    return Rejection{RejectReason::malformed, "first clause must be a shape clause"};
  }

  std::vector<ShapeKind> declared;
  std::set<std::string> seen_labels;
  std::set<int> constrained;  // objects already constrained by a relation
  std::map<std::pair<int, int>, std::vector<RelationKind>> pair_relations;

  static const std::vector<std::pair<RelationKind, RelationKind>> contradictions = {
      {RelationKind::parallel, RelationKind::intersection},
      {RelationKind::parallel, RelationKind::perpendicular},
  };

  for (std::size_t ci = 0; ci < program.clauses.size(); ++ci) {
    const Clause& c = program.clauses[ci];
    const int declared_before = static_cast<int>(declared.size());

    for (const auto& label : c.fresh_labels) {
      if (label.size() != 1 || label[0] < 'A' || label[0] > 'Z') {
        return Rejection{RejectReason::malformed, "labels must be single uppercase letters"};
      }
      if (!seen_labels.insert(label).second) {
        return Rejection{RejectReason::malformed, "duplicate label " + label};
      }
    }

    if (c.is_shape) {
      if (!c.operands.empty()) return Rejection{RejectReason::malformed, "shape clause takes no operands"};
      if (static_cast<int>(c.fresh_labels.size()) != shape_info(c.shape).label_count) {
        return Rejection{RejectReason::malformed, "wrong label count for " + shape_info(c.shape).id};
      }
      declared.push_back(c.shape);
      continue;
    }

    const RelationInfo& info = relation_info(c.relation);
    if (c.operands.empty() || c.operands.size() > 2) {
      return Rejection{RejectReason::missing_prerequisites, info.id + " requires an anchor operand"};
    }
    for (int op : c.operands) {
      if (op < 0 || op >= declared_before) {
        return Rejection{RejectReason::malformed, "operand references an undeclared object"};
      }
    }

    const int anchor = c.operands.back();
    if (!kind_matches_prereq(declared[static_cast<std::size_t>(anchor)], info.prereq)) {
      return Rejection{RejectReason::missing_prerequisites,
                       info.id + " prerequisites not met by anchor object"};
    }
    if (c.relation == RelationKind::angle_bisection || c.relation == RelationKind::angle_trisection) {
      const int corners = shape_info(declared[static_cast<std::size_t>(anchor)]).label_count;
      if (c.corner < 0 || c.corner >= corners) {
        return Rejection{RejectReason::malformed, "corner index out of range"};
      }
    }

    int subject;
    if (c.operands.size() == 2) {
      if (c.relation == RelationKind::reflection || c.relation == RelationKind::angle_trisection) {
        return Rejection{RejectReason::malformed, info.id + " cannot constrain an existing object"};
      }
      subject = c.operands.front();
      if (subject == anchor) return Rejection{RejectReason::malformed, "relation relates an object to itself"};
      if (anchor > subject) {
        return Rejection{RejectReason::malformed, "anchor must be declared before the subject"};
      }
      if (declared[static_cast<std::size_t>(subject)] != ShapeKind::segment) {
        return Rejection{RejectReason::missing_prerequisites, "constrained subject must be a segment"};
      }
      if (!c.fresh_labels.empty()) {
        return Rejection{RejectReason::malformed, "constraining relation introduces no labels"};
      }
    } else {
      const ShapeKind anchor_kind = declared[static_cast<std::size_t>(anchor)];
      if (static_cast<int>(c.fresh_labels.size()) != relation_fresh_labels(c.relation, anchor_kind)) {
        return Rejection{RejectReason::malformed, "wrong label count for relation " + info.id};
      }
      subject = declared_before;  // first introduced object
      switch (c.relation) {
        case RelationKind::reflection:
          declared.push_back(ShapeKind::segment);
          declared.push_back(anchor_kind);
          break;
        case RelationKind::angle_trisection:
          declared.push_back(ShapeKind::segment);
          declared.push_back(ShapeKind::segment);
          break;
        default:
          declared.push_back(ShapeKind::segment);
          break;
      }
    }

    // Rule table first: contradictory or duplicate relations on a pair.
    const auto key = std::minmax(subject, anchor);
    auto& kinds = pair_relations[{key.first, key.second}];
    for (RelationKind prev : kinds) {
      if (prev == c.relation) {
        return Rejection{RejectReason::duplicate_relation,
                         info.id + " declared twice for the same pair"};
      }
      for (const auto& [a, b] : contradictions) {
        if ((prev == a && c.relation == b) || (prev == b && c.relation == a)) {
          return Rejection{RejectReason::contradictory_pair,
                           relation_info(prev).id + " and " + info.id + " on the same pair"};
        }
      }
    }
    kinds.push_back(c.relation);

    if (c.operands.size() == 2 && !constrained.insert(subject).second) {
      return Rejection{RejectReason::over_constrained, "object constrained by more than one relation"};
    }
  }

  return VerifiedProgram{program, config};
}

// ---------------------------------------------------------------------------
// Realization
// ---------------------------------------------------------------------------

namespace {

struct Realizer {
  const GenerationConfig& cfg;
  Rng rng;
  double W, H, m, scale;
  std::string failure;

  Realizer(const GenerationConfig& config, std::uint64_t seed)
      : cfg(config),
        rng(derive_seed(seed, 0x7265616cULL)),
        W(config.canvas_width),
        H(config.canvas_height),
        m(config.margin),
        scale(std::min(W, H) / 512.0) {}

  bool in_margins(const Point& p) const {
    return p.x() >= m && p.x() <= W - m && p.y() >= m && p.y() <= H - m;
  }

  bool bounds_in_margins(const Bounds& b) const {
    return b.x1 >= m && b.y1 >= m && b.x2 <= W - m && b.y2 <= H - m;
  }

  void fail(const std::string& what) {
    if (failure.empty()) failure = what;
  }

  // Max ray parameter that keeps origin + t*d inside the margins.
  double ray_limit(const Point& origin, const Point& d) const {
    double t = std::numeric_limits<double>::infinity();
    if (d.x() > 1e-12) t = std::min(t, (W - m - origin.x()) / d.x());
    if (d.x() < -1e-12) t = std::min(t, (m - origin.x()) / d.x());
    if (d.y() > 1e-12) t = std::min(t, (H - m - origin.y()) / d.y());
    if (d.y() < -1e-12) t = std::min(t, (m - origin.y()) / d.y());
    return std::max(t, 0.0);
  }

  bool separated(const Bounds& a, const Bounds& b) const {
    if (bounds_iou(a, b) >= 0.05) return false;
    return (a.center() - b.center()).norm() >= 24.0;
  }

  // ---- default shape constructions ----

  std::vector<Point> canonical_polygon(ShapeKind kind, double s) {
    const auto regular = [&](int n, double lo, double hi) {
      const double radius = rng.uniform(lo, hi) * s;
      const double phase = rng.uniform(0.0, kTau);
      std::vector<Point> vs;
      for (int k = 0; k < n; ++k) vs.push_back(radius * dir(phase + k * kTau / n));
      return vs;
    };
    switch (kind) {
      case ShapeKind::equilateral_triangle: return regular(3, 55, 105);
      case ShapeKind::square: return regular(4, 55, 105);
      case ShapeKind::pentagon: return regular(5, 52, 100);
      case ShapeKind::hexagon: return regular(6, 50, 95);
      case ShapeKind::isosceles_triangle: {
        const double w = rng.uniform(38, 80) * s;
        const double ratio = rng.bernoulli(0.55) ? rng.uniform(0.78, 0.95) : rng.uniform(1.35, 2.4);
        const double h = ratio * w;
        return {{0, -h}, {w, h / 2}, {-w, h / 2}};
      }
      case ShapeKind::right_triangle: {
        double a = rng.uniform(55, 150) * s;
        double b = rng.uniform(55, 150) * s;
        while (std::abs(a - b) < 0.2 * std::max(a, b)) b = rng.uniform(55, 150) * s;
        std::vector<Point> vs = {{0, 0}, {a, 0}, {0, b}};
        const Point c = polygon_centroid(vs);
        for (auto& v : vs) v -= c;
        return vs;
      }
      case ShapeKind::scalene_triangle: {
        const double radius = rng.uniform(55, 105) * s;
        for (int tries = 0; tries < 64; ++tries) {
          const double g1 = rng.uniform(deg(60), deg(140));
          const double g2 = rng.uniform(deg(60), deg(140));
          const double g3 = kTau - g1 - g2;
          if (g3 < deg(70) || g3 > deg(165)) continue;
          const double phase = rng.uniform(0.0, kTau);
          std::vector<Point> vs = {radius * dir(phase), radius * dir(phase + g1),
                                   radius * dir(phase + g1 + g2)};
          double sides[3];
          bool ok = true;
          for (int k = 0; k < 3; ++k) sides[k] = (vs[(k + 1) % 3] - vs[k]).norm();
          const double smax = std::max({sides[0], sides[1], sides[2]});
          for (int k = 0; k < 3 && ok; ++k)
            for (int l = k + 1; l < 3; ++l)
              if (std::abs(sides[k] - sides[l]) < 0.07 * smax) ok = false;
          for (int k = 0; k < 3 && ok; ++k) {
            const Point u = (vs[(k + 2) % 3] - vs[k]).normalized();
            const Point w = (vs[(k + 1) % 3] - vs[k]).normalized();
            const double ang = std::acos(std::clamp(u.dot(w), -1.0, 1.0));
            if (ang < deg(22) || (ang > deg(82) && ang < deg(98))) ok = false;
          }
          if (ok) return vs;
        }
        return {};  // placement loop retries
      }
      case ShapeKind::rectangle: {
        const double w = rng.uniform(90, 210) * s;
        const double h = w * rng.uniform(0.45, 0.78);
        return {{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}};
      }
      case ShapeKind::parallelogram: {
        const double a = rng.uniform(85, 190) * s;
        double b = rng.uniform(55, 140) * s;
        while (std::abs(a - b) < 0.18 * std::max(a, b)) b = rng.uniform(55, 140) * s;
        const double beta = rng.uniform(deg(38), deg(72));
        const Point u(a, 0), v = b * dir(beta);
        const Point p0 = -(u + v) / 2;
        return {p0, p0 + u, p0 + u + v, p0 + v};
      }
      case ShapeKind::rhombus: {
        const double side = rng.uniform(70, 150) * s;
        const double beta = rng.uniform(deg(38), deg(72));
        const Point u(side, 0), v = side * dir(beta);
        const Point p0 = -(u + v) / 2;
        return {p0, p0 + u, p0 + u + v, p0 + v};
      }
      case ShapeKind::isosceles_trapezoid: {
        const double a = rng.uniform(110, 220) * s;
        const double b = a * rng.uniform(0.38, 0.72);
        const double h = rng.uniform(55, 130) * s;
        return {{-b / 2, -h / 2}, {b / 2, -h / 2}, {a / 2, h / 2}, {-a / 2, h / 2}};
      }
      case ShapeKind::right_trapezoid: {
        const double a = rng.uniform(100, 200) * s;
        const double b = a * rng.uniform(0.45, 0.8);
        const double h = rng.uniform(60, 130) * s;
        std::vector<Point> vs = {{0, -h}, {b, -h}, {a, 0}, {0, 0}};
        const Point c = polygon_centroid(vs);
        for (auto& v : vs) v -= c;
        return vs;
      }
      default: return {};
    }
  }

  std::optional<SceneObject> place_shape(ShapeKind kind, const std::vector<std::string>& labels,
                                         const std::vector<Bounds>& keep_away, double size_factor) {
    const ShapeInfo& info = shape_info(kind);
    const double s = scale * size_factor;
    const int soft_until = (cfg.max_attempts * 3) / 4;
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      SceneObject obj;
      obj.kind = kind;
      obj.labels = labels;

      if (info.is_polygon) {
        std::vector<Point> local = canonical_polygon(kind, s);
        if (local.empty()) continue;
        const double theta = rng.uniform(0.0, kTau);
        const Eigen::Rotation2Dd rot(theta);
        for (auto& v : local) v = rot * v;
        double x1 = local[0].x(), x2 = x1, y1 = local[0].y(), y2 = y1;
        for (const auto& v : local) {
          x1 = std::min(x1, v.x());
          x2 = std::max(x2, v.x());
          y1 = std::min(y1, v.y());
          y2 = std::max(y2, v.y());
        }
        if (W - 2 * m < x2 - x1 || H - 2 * m < y2 - y1) continue;
        const double cx = rng.uniform(m - x1, W - m - x2);
        const double cy = rng.uniform(m - y1, H - m - y2);
        obj.vertices = local;
        for (auto& v : obj.vertices) v += Point(cx, cy);
      } else if (kind == ShapeKind::circle) {
        obj.radius = rng.uniform(40, 95) * s;
        if (W - 2 * (m + obj.radius) <= 1 || H - 2 * (m + obj.radius) <= 1) continue;
        obj.vertices = {Point(rng.uniform(m + obj.radius, W - m - obj.radius),
                              rng.uniform(m + obj.radius, H - m - obj.radius))};
      } else if (kind == ShapeKind::semicircle) {
        obj.radius = rng.uniform(45, 105) * s;
        obj.rotation = rng.uniform(0.0, kTau);
        if (W - 2 * (m + obj.radius) <= 1 || H - 2 * (m + obj.radius) <= 1) continue;
        obj.vertices = {Point(rng.uniform(m + obj.radius, W - m - obj.radius),
                              rng.uniform(m + obj.radius, H - m - obj.radius))};
      } else if (kind == ShapeKind::ellipse) {
        obj.axis_a = rng.uniform(55, 115) * s;
        obj.axis_b = obj.axis_a * rng.uniform(0.42, 0.72);
        obj.rotation = rng.uniform(0.0, kPi);
        if (W - 2 * (m + obj.axis_a) <= 1 || H - 2 * (m + obj.axis_a) <= 1) continue;
        obj.vertices = {Point(rng.uniform(m + obj.axis_a, W - m - obj.axis_a),
                              rng.uniform(m + obj.axis_a, H - m - obj.axis_a))};
      } else {  // segment
        const double len = rng.uniform(80, 230) * s;
        const double theta = rng.uniform(0.0, kTau);
        const Point half = 0.5 * len * dir(theta);
        const double hx = std::abs(half.x()), hy = std::abs(half.y());
        if (W - 2 * m < 2 * hx || H - 2 * m < 2 * hy) continue;
        const double cx = rng.uniform(m + hx, W - m - hx);
        const double cy = rng.uniform(m + hy, H - m - hy);
        obj.vertices = {Point(cx, cy) - half, Point(cx, cy) + half};
      }

      const Bounds b = object_bounds(obj);
      if (!bounds_in_margins(b)) continue;
      if (attempt < soft_until) {
        bool clear = true;
        for (const auto& other : keep_away) {
          if (!separated(b, other)) {
            clear = false;
            break;
          }
        }
        if (!clear) continue;
      }
      return obj;
    }
    fail("shape placement exhausted attempts for " + info.id);
    return std::nullopt;
  }

  // ---- relation constructions ----

  SceneObject make_segment(const Point& a, const Point& b, const std::vector<std::string>& labels) {
    SceneObject obj;
    obj.kind = ShapeKind::segment;
    obj.vertices = {a, b};
    obj.labels = labels;
    return obj;
  }

  Point boundary_point(const SceneObject& target) {
    switch (target.kind) {
      case ShapeKind::circle:
        return target.vertices[0] + target.radius * dir(rng.uniform(0.0, kTau));
      case ShapeKind::ellipse:
        return ellipse_point(target, rng.uniform(0.0, kTau));
      case ShapeKind::semicircle: {
        if (rng.bernoulli(0.6)) {
          const double phi = target.rotation + rng.uniform(0.1, kPi - 0.1);
          return target.vertices[0] + target.radius * dir(phi);
        }
        const auto [e0, e1] = semicircle_chord(target);
        const double t = rng.uniform(0.15, 0.85);
        return e0 + t * (e1 - e0);
      }
      case ShapeKind::segment: {
        const double t = rng.uniform(0.15, 0.85);
        return target.vertices[0] + t * (target.vertices[1] - target.vertices[0]);
      }
      default: {
        const std::size_t n = target.vertices.size();
        const std::size_t e = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        const double t = rng.uniform(0.1, 0.9);
        return target.vertices[e] + t * (target.vertices[(e + 1) % n] - target.vertices[e]);
      }
    }
  }

  std::optional<SceneObject> construct_on(const SceneObject& anchor, const std::vector<std::string>& labels) {
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const Point p0 = boundary_point(anchor);
      if (!in_margins(p0)) continue;
      const Point d = dir(rng.uniform(0.0, kTau));
      const double len = std::min(rng.uniform(45, 140) * scale, ray_limit(p0, d));
      if (len < 35 * scale) continue;
      const Point p1 = p0 + len * d;
      if (!in_margins(p1)) continue;
      if (boundary_distance(anchor, p1) < 15 * scale) continue;
      return make_segment(p0, p1, labels);
    }
    fail("on-construction exhausted attempts");
    return std::nullopt;
  }

  std::optional<SceneObject> construct_parallel(const SceneObject& anchor, const std::vector<std::string>& labels) {
    const Point d = (anchor.vertices[1] - anchor.vertices[0]).normalized();
    const Point n = rot90(d);
    const Point mid = 0.5 * (anchor.vertices[0] + anchor.vertices[1]);
    const double alen = (anchor.vertices[1] - anchor.vertices[0]).norm();
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double offset = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(28, 120) * scale;
      const double slide = rng.uniform(-60, 60) * scale;
      const double len = alen * rng.uniform(0.6, 1.3);
      const Point c = mid + offset * n + slide * d;
      const Point p0 = c - 0.5 * len * d, p1 = c + 0.5 * len * d;
      if (!in_margins(p0) || !in_margins(p1)) continue;
      return make_segment(p0, p1, labels);
    }
    fail("parallel-construction exhausted attempts");
    return std::nullopt;
  }

  std::optional<SceneObject> construct_perpendicular(const SceneObject& anchor,
                                                     const std::vector<std::string>& labels) {
    const Point d = (anchor.vertices[1] - anchor.vertices[0]).normalized();
    const Point n = rot90(d);
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double t = rng.uniform(0.25, 0.75);
      const Point q = anchor.vertices[0] + t * (anchor.vertices[1] - anchor.vertices[0]);
      const double l1 = rng.uniform(30, 110) * scale;
      const double l2 = rng.uniform(30, 110) * scale;
      const Point p0 = q - l1 * n, p1 = q + l2 * n;
      if (!in_margins(p0) || !in_margins(p1)) continue;
      return make_segment(p0, p1, labels);
    }
    fail("perpendicular-construction exhausted attempts");
    return std::nullopt;
  }

  std::optional<SceneObject> construct_intersection(const SceneObject& anchor,
                                                    const std::vector<std::string>& labels) {
    const Point d = (anchor.vertices[1] - anchor.vertices[0]).normalized();
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double t = rng.uniform(0.3, 0.7);
      const Point q = anchor.vertices[0] + t * (anchor.vertices[1] - anchor.vertices[0]);
      const double delta = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(deg(25), deg(90));
      const Point e = Eigen::Rotation2Dd(delta) * d;
      const double l1 = rng.uniform(35, 120) * scale;
      const double l2 = rng.uniform(35, 120) * scale;
      const Point p0 = q - l1 * e, p1 = q + l2 * e;
      if (!in_margins(p0) || !in_margins(p1)) continue;
      if (!segments_properly_cross(p0, p1, anchor.vertices[0], anchor.vertices[1])) continue;
      return make_segment(p0, p1, labels);
    }
    fail("intersection-construction exhausted attempts");
    return std::nullopt;
  }

  std::optional<SceneObject> construct_tangent(const SceneObject& circle,
                                               const std::vector<std::string>& labels) {
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double phi = rng.uniform(0.0, kTau);
      const Point u = dir(phi);
      const Point p = circle.vertices[0] + circle.radius * u;
      const Point t = rot90(u);
      const double l1 = rng.uniform(35, 115) * scale;
      const double l2 = rng.uniform(35, 115) * scale;
      const Point p0 = p - l1 * t, p1 = p + l2 * t;
      if (!in_margins(p0) || !in_margins(p1)) continue;
      return make_segment(p0, p1, labels);
    }
    fail("tangent-construction exhausted attempts");
    return std::nullopt;
  }

  std::optional<SceneObject> construct_midpoint(const SceneObject& anchor,
                                                const std::vector<std::string>& labels) {
    const Point mid = 0.5 * (anchor.vertices[0] + anchor.vertices[1]);
    const Point ad = (anchor.vertices[1] - anchor.vertices[0]).normalized();
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const Point d = dir(rng.uniform(0.0, kTau));
      if (std::abs(cross2(d, ad)) < 0.35) continue;
      const double len = std::min(rng.uniform(45, 140) * scale, ray_limit(mid, d));
      if (len < 35 * scale) continue;
      const Point p1 = mid + len * d;
      if (!in_margins(mid) || !in_margins(p1)) continue;
      return make_segment(mid, p1, labels);
    }
    fail("midpoint-construction exhausted attempts");
    return std::nullopt;
  }

  struct CornerFrame {
    Point vertex;
    Point u, w;    // unit vectors along the adjacent edges
    double angle;  // interior angle
    double sweep;  // signed rotation from u toward w through the interior
  };

  static CornerFrame corner_frame(const SceneObject& poly, int corner) {
    const std::size_t n = poly.vertices.size();
    const std::size_t k = static_cast<std::size_t>(corner);
    const Point v = poly.vertices[k];
    const Point u = (poly.vertices[(k + n - 1) % n] - v).normalized();
    const Point w = (poly.vertices[(k + 1) % n] - v).normalized();
    const double angle = std::acos(std::clamp(u.dot(w), -1.0, 1.0));
    const double sweep = cross2(u, w) >= 0 ? angle : -angle;
    return {v, u, w, angle, sweep};
  }

  std::optional<SceneObject> construct_corner_ray(const SceneObject& poly, int corner, double fraction,
                                                  const std::string& end_label) {
    const CornerFrame f = corner_frame(poly, corner);
    const Point d = Eigen::Rotation2Dd(f.sweep * fraction) * f.u;
    const double limit = ray_limit(f.vertex, d);
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double lo = std::max(40.0 * scale, 0.35 * limit);
      if (lo > 0.92 * limit) break;
      const double len = rng.uniform(lo, 0.92 * limit);
      const Point p1 = f.vertex + len * d;
      if (!in_margins(p1)) continue;
      return make_segment(f.vertex, p1, {poly.labels[static_cast<std::size_t>(corner)], end_label});
    }
    fail("corner-ray construction exhausted attempts");
    return std::nullopt;
  }

  // Axis segment covering the projection of `cover` onto the line (base, d).
  std::optional<SceneObject> axis_segment(const Point& base, const Point& d,
                                          const std::vector<Bounds>& cover,
                                          const std::vector<std::string>& labels) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& b : cover) {
      const Point corners[4] = {{b.x1, b.y1}, {b.x2, b.y1}, {b.x2, b.y2}, {b.x1, b.y2}};
      for (const auto& c : corners) {
        const double t = (c - base).dot(d);
        if (first) {
          lo = hi = t;
          first = false;
        } else {
          lo = std::min(lo, t);
          hi = std::max(hi, t);
        }
      }
    }
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double over = rng.uniform(14, 32) * scale;
      double t0 = lo - over, t1 = hi + over;
      t1 = std::min(t1, ray_limit(base, d));
      t0 = std::max(t0, -ray_limit(base, -d));
      if (t1 - t0 < 55 * scale) break;
      const Point p0 = base + t0 * d, p1 = base + t1 * d;
      if (!in_margins(p0) || !in_margins(p1)) continue;
      return make_segment(p0, p1, labels);
    }
    fail("axis segment construction exhausted attempts");
    return std::nullopt;
  }

  SceneObject reflect_object(const SceneObject& src, const Point& a, const Point& b,
                             const std::vector<std::string>& labels) {
    SceneObject out;
    out.kind = src.kind;
    out.labels = labels;
    out.radius = src.radius;
    out.axis_a = src.axis_a;
    out.axis_b = src.axis_b;
    const double psi = std::atan2((b - a).y(), (b - a).x());
    if (src.kind == ShapeKind::ellipse) {
      out.rotation = normalize_angle(2 * psi - src.rotation);
    } else if (src.kind == ShapeKind::semicircle) {
      out.rotation = normalize_angle(2 * psi - src.rotation - kPi);
    }
    for (const auto& v : src.vertices) out.vertices.push_back(reflect_point(v, a, b));
    if (shape_info(src.kind).is_polygon) {
      // Restore on-screen clockwise order.
      std::reverse(out.vertices.begin(), out.vertices.end());
    }
    return out;
  }

  std::optional<std::pair<SceneObject, SceneObject>> construct_reflection(
      const SceneObject& source, const std::vector<std::string>& axis_labels,
      const std::vector<std::string>& mirror_labels) {
    const Bounds sb = object_bounds(source);
    const Point center = sb.center();
    const double radius = 0.5 * std::hypot(sb.width(), sb.height());
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double psi = rng.uniform(0.0, kTau);
      const Point d = dir(psi);
      const Point n = rot90(d);
      const double gap = rng.uniform(14, 55) * scale;
      const Point base = center + (radius + gap) * n;
      SceneObject mirror = reflect_object(source, base, base + d, mirror_labels);
      if (!bounds_in_margins(object_bounds(mirror))) continue;
      auto axis = axis_segment(base, d, {sb, object_bounds(mirror)}, axis_labels);
      if (!axis) continue;
      return std::make_pair(*axis, mirror);
    }
    fail("reflection construction exhausted attempts");
    return std::nullopt;
  }

  // Axis line of a symmetric shape: a point on it and a unit direction.
  std::optional<std::pair<Point, Point>> symmetry_axis_line(const SceneObject& shape) {
    const auto& vs = shape.vertices;
    const auto mid = [&](std::size_t i, std::size_t j) { return 0.5 * (vs[i] + vs[j]); };
    const auto through = [&](const Point& p, const Point& q) -> std::optional<std::pair<Point, Point>> {
      if ((q - p).norm() < 1e-9) return std::nullopt;
      return std::make_pair(p, (q - p).normalized());
    };
    switch (shape.kind) {
      case ShapeKind::isosceles_triangle:
        return through(vs[0], mid(1, 2));
      case ShapeKind::equilateral_triangle: {
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 2));
        return through(vs[k], mid((k + 1) % 3, (k + 2) % 3));
      }
      case ShapeKind::square: {
        if (rng.bernoulli(0.5)) {
          const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 1));
          return through(vs[k], vs[k + 2]);
        }
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 1));
        return through(mid(k, k + 1), mid(k + 2, (k + 3) % 4));
      }
      case ShapeKind::rectangle: {
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 1));
        return through(mid(k, k + 1), mid(k + 2, (k + 3) % 4));
      }
      case ShapeKind::rhombus: {
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 1));
        return through(vs[k], vs[k + 2]);
      }
      case ShapeKind::isosceles_trapezoid:
        return through(mid(0, 1), mid(2, 3));
      case ShapeKind::pentagon: {
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 4));
        return through(vs[k], mid((k + 2) % 5, (k + 3) % 5));
      }
      case ShapeKind::hexagon: {
        if (rng.bernoulli(0.5)) {
          const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 2));
          return through(vs[k], vs[k + 3]);
        }
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(0, 2));
        return through(mid(k, k + 1), mid(k + 3, (k + 4) % 6));
      }
      case ShapeKind::circle:
        return std::make_pair(vs[0], dir(rng.uniform(0.0, kTau)));
      case ShapeKind::semicircle:
        return std::make_pair(vs[0], dir(shape.rotation + kPi / 2));
      case ShapeKind::ellipse:
        return std::make_pair(vs[0], dir(shape.rotation + (rng.bernoulli(0.5) ? 0.0 : kPi / 2)));
      case ShapeKind::segment:
        return std::make_pair(mid(0, 1), rot90((vs[1] - vs[0]).normalized()));
      default:
        return std::nullopt;
    }
  }

  std::optional<SceneObject> construct_symmetry_axis(const SceneObject& shape,
                                                     const std::vector<std::string>& labels) {
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const auto line = symmetry_axis_line(shape);
      if (!line) break;
      auto axis = axis_segment(line->first, line->second, {object_bounds(shape)}, labels);
      if (axis) return axis;
    }
    fail("symmetry-axis construction exhausted attempts");
    return std::nullopt;
  }
};

}  // namespace

namespace {

RealizeResult realize_once(const VerifiedProgram& verified, std::uint64_t seed,
                           std::uint64_t attempt_seed) {
  const ClauseProgram& program = verified.program;
  const GenerationConfig& cfg = verified.config;
  Realizer rz(cfg, attempt_seed);

  // Object index -> clause index of the relation constraining it (two-operand
  // relation clauses constrain existing segments).
  std::map<int, std::size_t> constraints;
  // Shape-clause objects that a later reflection mirrors; placed compactly so
  // the mirror copy has room.
  std::set<int> reflected;
  {
    for (std::size_t ci = 0; ci < program.clauses.size(); ++ci) {
      const Clause& c = program.clauses[ci];
      if (c.is_shape) continue;
      if (c.operands.size() == 2) constraints[c.operands[0]] = ci;
      if (c.relation == RelationKind::reflection) reflected.insert(c.operands.back());
    }
  }

  Scene scene;
  scene.width = cfg.canvas_width;
  scene.height = cfg.canvas_height;
  scene.margin = cfg.margin;
  scene.seed = seed;

  std::vector<Bounds> shape_bounds;  // separation among sampled shapes

  const auto construct_via_relation = [&](const Clause& rel, const std::vector<std::string>& labels)
      -> std::optional<SceneObject> {
    const SceneObject& anchor = scene.objects[static_cast<std::size_t>(rel.operands.back())];
    switch (rel.relation) {
      case RelationKind::on: return rz.construct_on(anchor, labels);
      case RelationKind::parallel: return rz.construct_parallel(anchor, labels);
      case RelationKind::perpendicular: return rz.construct_perpendicular(anchor, labels);
      case RelationKind::intersection: return rz.construct_intersection(anchor, labels);
      case RelationKind::tangent: return rz.construct_tangent(anchor, labels);
      case RelationKind::midpoint: return rz.construct_midpoint(anchor, labels);
      case RelationKind::angle_bisection:
        return rz.construct_corner_ray(anchor, rel.corner, 0.5, labels.back());
      case RelationKind::symmetry_axis: return rz.construct_symmetry_axis(anchor, labels);
      default: return std::nullopt;
    }
  };

  for (std::size_t ci = 0; ci < program.clauses.size(); ++ci) {
    const Clause& c = program.clauses[ci];
    if (c.is_shape) {
      const int obj_index = static_cast<int>(scene.objects.size());
      std::optional<SceneObject> obj;
      const auto it = constraints.find(obj_index);
      if (it != constraints.end()) {
        obj = construct_via_relation(program.clauses[it->second], c.fresh_labels);
        if (obj) obj->labels = c.fresh_labels;
      } else {
        const double size_factor = reflected.count(obj_index) ? 0.6 : 1.0;
        obj = rz.place_shape(c.shape, c.fresh_labels, shape_bounds, size_factor);
        if (obj) shape_bounds.push_back(object_bounds(*obj));
      }
      if (!obj) return RealizationFailure{rz.failure.empty() ? "shape placement failed" : rz.failure};
      obj->id = obj_index;
      scene.objects.push_back(*obj);
      continue;
    }

    const int anchor = c.operands.back();
    if (c.operands.size() == 2) {
      // The constrained object was realized by its own shape clause.
      SceneRelation rel;
      rel.kind = c.relation;
      rel.subject = c.operands[0];
      rel.anchor = anchor;
      rel.corner = c.corner;
      scene.relations.push_back(rel);
      continue;
    }

    switch (c.relation) {
      case RelationKind::angle_trisection: {
        const SceneObject& poly = scene.objects[static_cast<std::size_t>(anchor)];
        auto ray1 = rz.construct_corner_ray(poly, c.corner, 1.0 / 3.0, c.fresh_labels[0]);
        auto ray2 = rz.construct_corner_ray(poly, c.corner, 2.0 / 3.0, c.fresh_labels[1]);
        if (!ray1 || !ray2) return RealizationFailure{rz.failure};
        ray1->id = static_cast<int>(scene.objects.size());
        scene.objects.push_back(*ray1);
        ray2->id = static_cast<int>(scene.objects.size());
        scene.objects.push_back(*ray2);
        SceneRelation rel;
        rel.kind = c.relation;
        rel.subject = ray1->id;
        rel.anchor = anchor;
        rel.corner = c.corner;
        rel.aux = ray2->id;
        scene.relations.push_back(rel);
        break;
      }
      case RelationKind::reflection: {
        const SceneObject& source = scene.objects[static_cast<std::size_t>(anchor)];
        const int n_mirror = shape_info(source.kind).label_count;
        std::vector<std::string> axis_labels(c.fresh_labels.begin(), c.fresh_labels.begin() + 2);
        std::vector<std::string> mirror_labels(c.fresh_labels.begin() + 2,
                                               c.fresh_labels.begin() + 2 + n_mirror);
        auto pair = rz.construct_reflection(source, axis_labels, mirror_labels);
        if (!pair) return RealizationFailure{rz.failure};
        pair->first.id = static_cast<int>(scene.objects.size());
        scene.objects.push_back(pair->first);
        pair->second.id = static_cast<int>(scene.objects.size());
        scene.objects.push_back(pair->second);
        SceneRelation rel;
        rel.kind = c.relation;
        rel.subject = pair->second.id;  // mirror copy
        rel.anchor = anchor;
        rel.aux = pair->first.id;  // axis
        scene.relations.push_back(rel);
        break;
      }
      default: {
        auto obj = construct_via_relation(c, c.fresh_labels);
        if (!obj) return RealizationFailure{rz.failure};
        obj->id = static_cast<int>(scene.objects.size());
        scene.objects.push_back(*obj);
        SceneRelation rel;
        rel.kind = c.relation;
        rel.subject = obj->id;
        rel.anchor = anchor;
        rel.corner = c.corner;
        scene.relations.push_back(rel);
        break;
      }
    }
  }

  // Prominence: greedy pass keeping objects that satisfy the separation rule
  // against everything already kept.
  std::vector<Bounds> kept;
  for (const auto& obj : scene.objects) {
    const Bounds b = object_bounds(obj);
    bool ok = true;
    for (const auto& other : kept) {
      if (!rz.separated(b, other)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      scene.prominence_set.push_back(obj.id);
      kept.push_back(b);
    }
  }

  // Final validation: margins, orientation, residuals.
  for (const auto& obj : scene.objects) {
    if (!rz.bounds_in_margins(object_bounds(obj))) {
      return RealizationFailure{"object escaped canvas margins"};
    }
    if (shape_info(obj.kind).is_polygon && signed_area(obj.vertices) >= 0) {
      return RealizationFailure{"polygon vertices not clockwise"};
    }
  }
  for (std::size_t ri = 0; ri < scene.relations.size(); ++ri) {
    if (relation_residual(scene, ri) > 1e-6) {
      return RealizationFailure{"relation residual above tolerance"};
    }
  }

  return scene;
}

}  // namespace

RealizeResult realize_program(const VerifiedProgram& verified, std::uint64_t seed) {
  // Bounded whole-scene retry: each round redraws all coordinates from a
  // seed derived deterministically from (seed, round).
  std::string last_failure = "no rounds attempted";
  for (int round = 0; round < verified.config.max_attempts; ++round) {
    auto result = realize_once(verified, seed, derive_seed(seed, 0xe11e0000ULL + static_cast<std::uint64_t>(round)));
    if (std::holds_alternative<Scene>(result)) return result;
    last_failure = std::get<RealizationFailure>(result).detail;
  }
  return RealizationFailure{"max attempts exhausted: " + last_failure};
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

namespace {

double set_match_residual(const std::vector<Point>& expected, const std::vector<Point>& actual) {
  double worst = 0.0;
  for (const auto& e : expected) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : actual) best = std::min(best, (e - a).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

// Points that pin down an object's geometry for reflection/symmetry checks;
// chosen symmetric so the sets map onto themselves under valid reflections.
std::vector<Point> key_points(const SceneObject& obj) {
  switch (obj.kind) {
    case ShapeKind::circle:
      return {obj.vertices[0]};
    case ShapeKind::ellipse:
      return {obj.vertices[0], ellipse_point(obj, 0.0), ellipse_point(obj, kPi),
              ellipse_point(obj, kPi / 2), ellipse_point(obj, 3 * kPi / 2)};
    case ShapeKind::semicircle: {
      const auto [e0, e1] = semicircle_chord(obj);
      return {obj.vertices[0], e0, e1, obj.vertices[0] + obj.radius * dir(obj.rotation + kPi / 2)};
    }
    default:
      return obj.vertices;
  }
}

}  // namespace

double relation_residual(const Scene& scene, std::size_t relation_index) {
  if (relation_index >= scene.relations.size()) {
    throw std::out_of_range("relation index out of range");
  }
  const SceneRelation& rel = scene.relations[relation_index];
  const SceneObject& subject = scene.objects.at(static_cast<std::size_t>(rel.subject));
  const SceneObject& anchor = scene.objects.at(static_cast<std::size_t>(rel.anchor));
  const double norm = std::max(scene.width, scene.height);

  const auto seg_dir = [](const SceneObject& s) { return Point(s.vertices[1] - s.vertices[0]); };

  switch (rel.kind) {
    case RelationKind::on:
      return boundary_distance(anchor, subject.vertices[0]) / norm;
    case RelationKind::intersection:
      return segment_distance(subject.vertices[0], subject.vertices[1], anchor.vertices[0],
                              anchor.vertices[1]) /
             norm;
    case RelationKind::parallel:
      return parallel_residual(seg_dir(subject), seg_dir(anchor));
    case RelationKind::perpendicular:
      return perpendicular_residual(seg_dir(subject), seg_dir(anchor));
    case RelationKind::tangent: {
      const Point a = subject.vertices[0], b = subject.vertices[1];
      const Point d = (b - a).normalized();
      const double line_dist = std::abs(cross2(d, anchor.vertices[0] - a));
      return std::abs(line_dist - anchor.radius) / norm;
    }
    case RelationKind::midpoint:
      return (subject.vertices[0] - 0.5 * (anchor.vertices[0] + anchor.vertices[1])).norm() / norm;
    case RelationKind::angle_bisection: {
      const auto f = Realizer::corner_frame(anchor, rel.corner);
      const Point expected = Eigen::Rotation2Dd(f.sweep * 0.5) * f.u;
      return parallel_residual(seg_dir(subject), expected);
    }
    case RelationKind::angle_trisection: {
      const auto f = Realizer::corner_frame(anchor, rel.corner);
      const Point e1 = Eigen::Rotation2Dd(f.sweep / 3.0) * f.u;
      const Point e2 = Eigen::Rotation2Dd(2.0 * f.sweep / 3.0) * f.u;
      double r = parallel_residual(seg_dir(subject), e1);
      if (rel.aux >= 0) {
        const SceneObject& second = scene.objects.at(static_cast<std::size_t>(rel.aux));
        r = std::max(r, parallel_residual(seg_dir(second), e2));
      }
      return r;
    }
    case RelationKind::reflection: {
      const SceneObject& axis = scene.objects.at(static_cast<std::size_t>(rel.aux));
      std::vector<Point> expected;
      for (const auto& p : key_points(anchor)) {
        expected.push_back(reflect_point(p, axis.vertices[0], axis.vertices[1]));
      }
      return set_match_residual(expected, key_points(subject)) / norm;
    }
    case RelationKind::symmetry_axis: {
      // subject is the axis segment, anchor the symmetric shape
      std::vector<Point> expected;
      for (const auto& p : key_points(anchor)) {
        expected.push_back(reflect_point(p, subject.vertices[0], subject.vertices[1]));
      }
      return set_match_residual(expected, key_points(anchor)) / norm;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Scene serialization
// ---------------------------------------------------------------------------

nlohmann::ordered_json Scene::to_json() const {
  nlohmann::ordered_json j;
  j["canvas"] = {{"width", width}, {"height", height}};
  j["margin"] = margin;
  j["seed"] = seed;
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : objects) {
    nlohmann::ordered_json oj;
    oj["id"] = o.id;
    oj["kind"] = shape_info(o.kind).id;
    oj["vertices"] = nlohmann::ordered_json::array();
    for (const auto& v : o.vertices) oj["vertices"].push_back({v.x(), v.y()});
    oj["labels"] = o.labels;
    if (o.radius > 0) oj["radius"] = o.radius;
    if (o.axis_a > 0) {
      oj["axis_a"] = o.axis_a;
      oj["axis_b"] = o.axis_b;
    }
    if (o.kind == ShapeKind::ellipse || o.kind == ShapeKind::semicircle) oj["rotation"] = o.rotation;
    j["objects"].push_back(oj);
  }
  j["relations"] = nlohmann::ordered_json::array();
  for (const auto& r : relations) {
    nlohmann::ordered_json rj;
    rj["kind"] = relation_info(r.kind).id;
    rj["subject"] = r.subject;
    rj["anchor"] = r.anchor;
    if (r.corner >= 0) rj["corner"] = r.corner;
    if (r.aux >= 0) rj["aux"] = r.aux;
    j["relations"].push_back(rj);
  }
  j["prominence_set"] = prominence_set;
  return j;
}

std::string Scene::serialize() const { return to_json().dump(); }

}  // namespace geobench
