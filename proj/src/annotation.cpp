#include "geobench/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace geobench {

std::string Box::to_text() const {
  std::ostringstream os;
  os << "(" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ")";
  return os.str();
}

std::string to_string(SpatialRelation rel) {
  switch (rel) {
    case SpatialRelation::top_left: return "top-left";
    case SpatialRelation::top_right: return "top-right";
    case SpatialRelation::bottom_left: return "bottom-left";
    case SpatialRelation::bottom_right: return "bottom-right";
  }
  return "top-left";
}

std::optional<SpatialRelation> spatial_relation_from_string(const std::string& s) {
  if (s == "top-left") return SpatialRelation::top_left;
  if (s == "top-right") return SpatialRelation::top_right;
  if (s == "bottom-left") return SpatialRelation::bottom_left;
  if (s == "bottom-right") return SpatialRelation::bottom_right;
  return std::nullopt;
}

SpatialRelation diagonal_opposite(SpatialRelation rel) {
  switch (rel) {
    case SpatialRelation::top_left: return SpatialRelation::bottom_right;
    case SpatialRelation::top_right: return SpatialRelation::bottom_left;
    case SpatialRelation::bottom_left: return SpatialRelation::top_right;
    case SpatialRelation::bottom_right: return SpatialRelation::top_left;
  }
  return SpatialRelation::bottom_right;
}

Box bounding_box(const SceneObject& object) {
  if (object.vertices.empty()) throw std::invalid_argument("empty geometry");
  const Bounds b = object_bounds(object);
  return Box{static_cast<int>(std::floor(b.x1)), static_cast<int>(std::floor(b.y1)),
             static_cast<int>(std::ceil(b.x2)), static_cast<int>(std::ceil(b.y2))};
}

SpatialRelation spatial_relation(const Box& a, const Box& b) {
  const double dx = b.cx() - a.cx();
  const double dy = b.cy() - a.cy();
  const bool right = dx >= 0;  // tie resolves right
  const bool top = dy <= 0;    // tie resolves top
  if (top) return right ? SpatialRelation::top_right : SpatialRelation::top_left;
  return right ? SpatialRelation::bottom_right : SpatialRelation::bottom_left;
}

const std::vector<std::string>& monochromatic_palette() {
  // Single blue hue, dark to light.
  static const std::vector<std::string> palette = {
      "#0b1d3a", "#14305e", "#1e4482", "#2857a6", "#326bca", "#2f7bdb", "#6c9ef2", "#9cbdf6",
  };
  return palette;
}

StyleSpec sample_style(Rng& rng) {
  StyleSpec s;
  s.foreground = rng.choice(monochromatic_palette());
  s.line_width = 1.5 + 0.5 * static_cast<double>(rng.uniform_int(0, 3));
  s.font_size = static_cast<double>(rng.uniform_int(12, 16));
  return s;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json geometry_to_json(const SceneObject& o) {
  nlohmann::ordered_json j;
  j["kind"] = shape_info(o.kind).id;
  j["vertices"] = nlohmann::ordered_json::array();
  for (const auto& v : o.vertices) j["vertices"].push_back({v.x(), v.y()});
  j["labels"] = o.labels;
  if (o.radius > 0) j["radius"] = o.radius;
  if (o.axis_a > 0) {
    j["axis_a"] = o.axis_a;
    j["axis_b"] = o.axis_b;
  }
  if (o.kind == ShapeKind::ellipse || o.kind == ShapeKind::semicircle) j["rotation"] = o.rotation;
  return j;
}

SceneObject geometry_from_json(const nlohmann::json& j) {
  SceneObject o;
  const auto kind = shape_kind_from_id(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown geometry kind");
  o.kind = *kind;
  for (const auto& v : j.at("vertices")) o.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  o.labels = j.at("labels").get<std::vector<std::string>>();
  o.radius = j.value("radius", 0.0);
  o.axis_a = j.value("axis_a", 0.0);
  o.axis_b = j.value("axis_b", 0.0);
  o.rotation = j.value("rotation", 0.0);
  return o;
}

}  // namespace

nlohmann::ordered_json Annotation::to_json() const {
  nlohmann::ordered_json j;
  j["image_id"] = image_id;
  j["subject"] = subject;
  j["canvas"] = {{"width", width}, {"height", height}};
  j["style"] = {{"foreground", style.foreground},
                {"background", style.background},
                {"line_width", style.line_width},
                {"font_size", style.font_size}};
  if (chart_type) j["chart_type"] = *chart_type;
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : objects) {
    nlohmann::ordered_json oj;
    oj["id"] = o.id;
    oj["shape"] = o.shape;
    oj["attributes"] = o.attributes;
    oj["box"] = {{"x1", o.box.x1}, {"y1", o.box.y1}, {"x2", o.box.x2}, {"y2", o.box.y2}};
    oj["prominent"] = o.prominent;
    if (!o.counted) oj["counted"] = false;
    if (o.geometry) oj["geometry"] = geometry_to_json(*o.geometry);
    j["objects"].push_back(oj);
  }
  j["relations"] = nlohmann::ordered_json::array();
  for (const auto& r : relations) {
    j["relations"].push_back({{"kind", r.kind},
                              {"subject_id", r.subject_id},
                              {"object_id", r.object_id},
                              {"spatial", r.spatial}});
  }
  if (!carried_qa.empty()) {
    j["carried_qa"] = nlohmann::ordered_json::array();
    for (const auto& q : carried_qa) {
      j["carried_qa"].push_back({{"question", q.question}, {"answer_yes", q.answer_yes}});
    }
  }
  return j;
}

Annotation Annotation::from_json(const nlohmann::json& j) {
  Annotation a;
  a.image_id = j.at("image_id").get<std::string>();
  a.subject = j.at("subject").get<std::string>();
  a.width = j.at("canvas").at("width").get<int>();
  a.height = j.at("canvas").at("height").get<int>();
  const auto& st = j.at("style");
  a.style.foreground = st.at("foreground").get<std::string>();
  a.style.background = st.at("background").get<std::string>();
  a.style.line_width = st.at("line_width").get<double>();
  a.style.font_size = st.at("font_size").get<double>();
  if (j.contains("chart_type")) a.chart_type = j["chart_type"].get<std::string>();
  for (const auto& oj : j.at("objects")) {
    AnnotationObject o;
    o.id = oj.at("id").get<std::string>();
    o.shape = oj.at("shape").get<std::string>();
    for (const auto& [k, v] : oj.at("attributes").items()) o.attributes[k] = v.get<std::string>();
    o.box = Box{oj.at("box").at("x1").get<int>(), oj.at("box").at("y1").get<int>(),
                oj.at("box").at("x2").get<int>(), oj.at("box").at("y2").get<int>()};
    o.prominent = oj.value("prominent", true);
    o.counted = oj.value("counted", true);
    if (oj.contains("geometry")) o.geometry = geometry_from_json(oj["geometry"]);
    a.objects.push_back(std::move(o));
  }
  for (const auto& rj : j.at("relations")) {
    AnnotationRelation r;
    r.kind = rj.at("kind").get<std::string>();
    r.subject_id = rj.at("subject_id").get<std::string>();
    r.object_id = rj.at("object_id").get<std::string>();
    r.spatial = rj.at("spatial").get<bool>();
    a.relations.push_back(std::move(r));
  }
  if (j.contains("carried_qa")) {
    for (const auto& qj : j["carried_qa"]) {
      a.carried_qa.push_back({qj.at("question").get<std::string>(), qj.at("answer_yes").get<bool>()});
    }
  }
  return a;
}

std::string Annotation::serialize() const { return to_json().dump(); }

const AnnotationObject* Annotation::find_object(const std::string& id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

int Annotation::prominent_count() const {
  int n = 0;
  for (const auto& o : objects)
    if (o.prominent && o.counted) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Scene -> annotation
// ---------------------------------------------------------------------------

Annotation to_annotation(const Scene& scene, const StyleSpec& style, const std::string& image_id,
                         bool marker_mode) {
  Annotation a;
  a.image_id = image_id.empty() ? "plane_" + std::to_string(scene.seed) : image_id;
  a.subject = "plane";
  a.width = scene.width;
  a.height = scene.height;
  a.style = style;

  const std::set<int> prominent(scene.prominence_set.begin(), scene.prominence_set.end());

  for (const auto& obj : scene.objects) {
    AnnotationObject o;
    o.id = "obj" + std::to_string(obj.id);
    o.shape = shape_info(obj.kind).display;
    if (marker_mode) {
      o.attributes["marker"] = std::to_string(obj.id + 1);
    } else {
      o.attributes["vertices"] = obj.label_string();
    }
    o.box = bounding_box(obj);
    o.prominent = prominent.count(obj.id) > 0;
    o.geometry = obj;
    a.objects.push_back(std::move(o));
  }

  for (const auto& rel : scene.relations) {
    AnnotationRelation r;
    r.kind = relation_info(rel.kind).id;
    r.subject_id = "obj" + std::to_string(rel.subject);
    r.object_id = "obj" + std::to_string(rel.anchor);
    r.spatial = false;
    a.relations.push_back(std::move(r));
  }

  // One spatial relation per unordered pair of prominent objects, stated as
  // the later object's position relative to the earlier one.
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    if (!a.objects[i].prominent) continue;
    for (std::size_t k = i + 1; k < a.objects.size(); ++k) {
      if (!a.objects[k].prominent) continue;
      AnnotationRelation r;
      r.kind = to_string(spatial_relation(a.objects[i].box, a.objects[k].box));
      r.subject_id = a.objects[k].id;
      r.object_id = a.objects[i].id;
      r.spatial = true;
      a.relations.push_back(std::move(r));
    }
  }

  return a;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

class Validator {
 public:
  std::vector<std::string> violations;

  void add(const std::string& path, const std::string& what) {
    violations.push_back(path + ": " + what);
  }

  bool require_string(const nlohmann::json& j, const std::string& path, const char* key,
                      bool non_empty = true) {
    if (!j.contains(key)) {
      add(path + "." + key, "missing");
      return false;
    }
    if (!j[key].is_string()) {
      add(path + "." + key, "must be a string");
      return false;
    }
    if (non_empty && j[key].get<std::string>().empty()) {
      add(path + "." + key, "must not be empty");
      return false;
    }
    return true;
  }

  bool require_int(const nlohmann::json& j, const std::string& path, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
      add(path + "." + key, "must be an integer");
      return false;
    }
    return true;
  }

  bool require_number(const nlohmann::json& j, const std::string& path, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      add(path + "." + key, "must be a number");
      return false;
    }
    return true;
  }

  void check_unknown_keys(const nlohmann::json& j, const std::string& path,
                          const std::set<std::string>& allowed) {
    for (const auto& [k, v] : j.items()) {
      if (!allowed.count(k)) add(path + "." + k, "unknown field");
    }
  }
};

}  // namespace

std::vector<std::string> validate_annotation(const std::string& raw) {
  Validator v;
  nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
  if (j.is_discarded()) {
    v.add("$", "invalid JSON");
    return v.violations;
  }
  if (!j.is_object()) {
    v.add("$", "document must be an object");
    return v.violations;
  }

  v.check_unknown_keys(j, "$",
                       {"image_id", "subject", "canvas", "style", "chart_type", "objects",
                        "relations", "carried_qa"});

  v.require_string(j, "$", "image_id");
  if (v.require_string(j, "$", "subject")) {
    const auto s = j["subject"].get<std::string>();
    if (s != "plane" && s != "solid" && s != "graph") {
      v.add("$.subject", "must be one of plane/solid/graph");
    }
  }

  int canvas_w = 0, canvas_h = 0;
  if (!j.contains("canvas") || !j["canvas"].is_object()) {
    v.add("$.canvas", "missing or not an object");
  } else {
    if (v.require_int(j["canvas"], "$.canvas", "width")) canvas_w = j["canvas"]["width"].get<int>();
    if (v.require_int(j["canvas"], "$.canvas", "height")) canvas_h = j["canvas"]["height"].get<int>();
    if (canvas_w <= 0) v.add("$.canvas.width", "must be positive");
    if (canvas_h <= 0) v.add("$.canvas.height", "must be positive");
    v.check_unknown_keys(j["canvas"], "$.canvas", {"width", "height"});
  }

  if (!j.contains("style") || !j["style"].is_object()) {
    v.add("$.style", "missing or not an object");
  } else {
    v.require_string(j["style"], "$.style", "foreground");
    v.require_string(j["style"], "$.style", "background");
    v.require_number(j["style"], "$.style", "line_width");
    v.require_number(j["style"], "$.style", "font_size");
    v.check_unknown_keys(j["style"], "$.style", {"foreground", "background", "line_width", "font_size"});
  }

  if (j.contains("chart_type") && !j["chart_type"].is_string()) {
    v.add("$.chart_type", "must be a string");
  }

  std::set<std::string> ids;
  if (!j.contains("objects") || !j["objects"].is_array()) {
    v.add("$.objects", "missing or not an array");
  } else {
    int idx = 0;
    for (const auto& oj : j["objects"]) {
      const std::string path = "objects[" + std::to_string(idx++) + "]";
      if (!oj.is_object()) {
        v.add(path, "must be an object");
        continue;
      }
      v.check_unknown_keys(oj, path,
                           {"id", "shape", "attributes", "box", "prominent", "counted", "geometry"});
      if (v.require_string(oj, path, "id")) {
        if (!ids.insert(oj["id"].get<std::string>()).second) v.add(path + ".id", "duplicate id");
      }
      v.require_string(oj, path, "shape");
      if (!oj.contains("attributes") || !oj["attributes"].is_object()) {
        v.add(path + ".attributes", "missing or not an object");
      } else {
        for (const auto& [k, val] : oj["attributes"].items()) {
          if (!val.is_string()) v.add(path + ".attributes." + k, "must be a string");
        }
      }
      if (!oj.contains("box") || !oj["box"].is_object()) {
        v.add(path + ".box", "missing or not an object");
      } else {
        const auto& bj = oj["box"];
        bool nums = true;
        for (const char* key : {"x1", "y1", "x2", "y2"}) {
          if (!v.require_int(bj, path + ".box", key)) nums = false;
        }
        v.check_unknown_keys(bj, path + ".box", {"x1", "y1", "x2", "y2"});
        if (nums) {
          const Box box{bj["x1"].get<int>(), bj["y1"].get<int>(), bj["x2"].get<int>(), bj["y2"].get<int>()};
          if (!box.valid()) v.add(path + ".box", "requires x1 <= x2 and y1 <= y2");
          if (canvas_w > 0 && canvas_h > 0 &&
              (box.x1 < 0 || box.y1 < 0 || box.x2 > canvas_w || box.y2 > canvas_h)) {
            v.add(path + ".box", "outside canvas bounds");
          }
        }
      }
      if (oj.contains("prominent") && !oj["prominent"].is_boolean()) {
        v.add(path + ".prominent", "must be a boolean");
      }
      if (oj.contains("counted") && !oj["counted"].is_boolean()) {
        v.add(path + ".counted", "must be a boolean");
      }
      if (oj.contains("geometry")) {
        const auto& gj = oj["geometry"];
        if (!gj.is_object()) {
          v.add(path + ".geometry", "must be an object");
        } else {
          v.check_unknown_keys(gj, path + ".geometry",
                               {"kind", "vertices", "labels", "radius", "axis_a", "axis_b", "rotation"});
          if (v.require_string(gj, path + ".geometry", "kind")) {
            if (!shape_kind_from_id(gj["kind"].get<std::string>())) {
              v.add(path + ".geometry.kind", "unknown shape kind");
            }
          }
          if (!gj.contains("vertices") || !gj["vertices"].is_array() || gj["vertices"].empty()) {
            v.add(path + ".geometry.vertices", "must be a non-empty array");
          } else {
            for (const auto& pv : gj["vertices"]) {
              if (!pv.is_array() || pv.size() != 2 || !pv[0].is_number() || !pv[1].is_number()) {
                v.add(path + ".geometry.vertices", "entries must be [x, y] numbers");
                break;
              }
            }
          }
          if (!gj.contains("labels") || !gj["labels"].is_array()) {
            v.add(path + ".geometry.labels", "must be an array");
          } else if (gj.contains("vertices") && gj["vertices"].is_array() &&
                     gj["labels"].size() != gj["vertices"].size()) {
            v.add(path + ".geometry.labels", "must match vertices length");
          }
        }
      }
    }
  }

  if (!j.contains("relations") || !j["relations"].is_array()) {
    v.add("$.relations", "missing or not an array");
  } else {
    int idx = 0;
    for (const auto& rj : j["relations"]) {
      const std::string path = "relations[" + std::to_string(idx++) + "]";
      if (!rj.is_object()) {
        v.add(path, "must be an object");
        continue;
      }
      v.check_unknown_keys(rj, path, {"kind", "subject_id", "object_id", "spatial"});
      v.require_string(rj, path, "kind");
      if (v.require_string(rj, path, "subject_id")) {
        if (!ids.count(rj["subject_id"].get<std::string>())) {
          v.add(path + ".subject_id", "references unknown object id");
        }
      }
      if (v.require_string(rj, path, "object_id")) {
        if (!ids.count(rj["object_id"].get<std::string>())) {
          v.add(path + ".object_id", "references unknown object id");
        }
      }
      if (!rj.contains("spatial") || !rj["spatial"].is_boolean()) {
        v.add(path + ".spatial", "must be a boolean");
      }
    }
  }

  if (j.contains("carried_qa")) {
    if (!j["carried_qa"].is_array()) {
      v.add("$.carried_qa", "must be an array");
    } else {
      int idx = 0;
      for (const auto& qj : j["carried_qa"]) {
        const std::string path = "carried_qa[" + std::to_string(idx++) + "]";
        if (!qj.is_object()) {
          v.add(path, "must be an object");
          continue;
        }
        v.check_unknown_keys(qj, path, {"question", "answer_yes"});
        v.require_string(qj, path, "question");
        if (!qj.contains("answer_yes") || !qj["answer_yes"].is_boolean()) {
          v.add(path + ".answer_yes", "must be a boolean");
        }
      }
    }
  }

  return v.violations;
}

// ---------------------------------------------------------------------------
// JSONL
// ---------------------------------------------------------------------------

std::vector<Annotation> read_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Annotation> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(Annotation::from_json(nlohmann::json::parse(line)));
  }
  return out;
}

void write_annotations(const std::string& path, const std::vector<Annotation>& annotations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& a : annotations) out << a.serialize() << "\n";
}

}  // namespace geobench
