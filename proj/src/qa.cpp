#include "geobench/qa.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace geobench {

std::string to_string(Task task) {
  switch (task) {
    case Task::cls: return "cls";
    case Task::cnt: return "cnt";
    case Task::grd: return "grd";
    case Task::rlat: return "rlat";
  }
  return "cls";
}

std::string to_string(Format format) {
  switch (format) {
    case Format::multiple_choice: return "multiple_choice";
    case Format::true_false: return "true_false";
    case Format::free_form: return "free_form";
  }
  return "multiple_choice";
}

std::optional<Task> task_from_string(const std::string& s) {
  if (s == "cls") return Task::cls;
  if (s == "cnt") return Task::cnt;
  if (s == "grd") return Task::grd;
  if (s == "rlat") return Task::rlat;
  return std::nullopt;
}

std::optional<Format> format_from_string(const std::string& s) {
  if (s == "multiple_choice") return Format::multiple_choice;
  if (s == "true_false") return Format::true_false;
  if (s == "free_form") return Format::free_form;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// QAItem JSON
// ---------------------------------------------------------------------------

nlohmann::ordered_json QAItem::to_json() const {
  nlohmann::ordered_json j;
  j["qid"] = qid;
  j["image_id"] = image_id;
  j["subject"] = subject;
  j["task"] = to_string(task);
  j["format"] = to_string(format);
  j["question"] = question;
  j["choices"] = choices;
  j["answer"] = answer;
  j["template_id"] = template_id;
  j["seed"] = seed;
  j["flags"] = {{"marker_mode", flags.marker_mode},
                {"overlap_mode", flags.overlap_mode},
                {"conflict_mode", flags.conflict_mode},
                {"vertex_random", flags.vertex_random}};
  j["canvas"] = {{"width", canvas_width}, {"height", canvas_height}};
  if (answer_box) {
    j["answer_box"] = {{"x1", answer_box->x1}, {"y1", answer_box->y1},
                       {"x2", answer_box->x2}, {"y2", answer_box->y2}};
  }
  return j;
}

QAItem QAItem::from_json(const nlohmann::json& j) {
  QAItem item;
  item.qid = j.at("qid").get<std::string>();
  item.image_id = j.at("image_id").get<std::string>();
  item.subject = j.at("subject").get<std::string>();
  item.task = *task_from_string(j.at("task").get<std::string>());
  item.format = *format_from_string(j.at("format").get<std::string>());
  item.question = j.at("question").get<std::string>();
  item.choices = j.at("choices").get<std::vector<std::string>>();
  item.answer = j.at("answer").get<std::string>();
  item.template_id = j.at("template_id").get<std::string>();
  item.seed = j.at("seed").get<std::uint64_t>();
  const auto& f = j.at("flags");
  item.flags.marker_mode = f.at("marker_mode").get<bool>();
  item.flags.overlap_mode = f.at("overlap_mode").get<bool>();
  item.flags.conflict_mode = f.at("conflict_mode").get<bool>();
  item.flags.vertex_random = f.at("vertex_random").get<bool>();
  item.canvas_width = j.at("canvas").at("width").get<int>();
  item.canvas_height = j.at("canvas").at("height").get<int>();
  if (j.contains("answer_box")) {
    const auto& b = j["answer_box"];
    item.answer_box = Box{b.at("x1").get<int>(), b.at("y1").get<int>(), b.at("x2").get<int>(),
                          b.at("y2").get<int>()};
  }
  return item;
}

// ---------------------------------------------------------------------------
// Distractor pools
// ---------------------------------------------------------------------------

const std::vector<std::string>* DistractorPool::family_of(const std::string& shape) const {
  for (const auto& [name, members] : families) {
    for (const auto& m : members)
      if (m == shape) return &members;
  }
  return nullptr;
}

std::vector<std::string> DistractorPool::all_members() const {
  std::vector<std::string> all;
  for (const auto& [name, members] : families) all.insert(all.end(), members.begin(), members.end());
  return all;
}

const DistractorPool& plane_distractor_pool() {
  static const DistractorPool pool = [] {
    DistractorPool p;
    std::map<ShapeFamily, std::vector<std::string>> groups;
    for (const auto& info : shape_registry()) groups[info.family].push_back(info.display);
    p.families = {{"triangles", groups[ShapeFamily::triangles]},
                  {"quadrilaterals", groups[ShapeFamily::quadrilaterals]},
                  {"polygons", groups[ShapeFamily::polygons]},
                  {"conics", groups[ShapeFamily::conics]},
                  {"lines", groups[ShapeFamily::lines]}};
    return p;
  }();
  return pool;
}

const DistractorPool& solid_distractor_pool() {
  static const DistractorPool pool = [] {
    DistractorPool p;
    // the three scene shapes plus distractor-only solids
    p.families = {{"solids", {"cube", "cylinder", "sphere", "cone", "pyramid", "prism"}}};
    return p;
  }();
  return pool;
}

const DistractorPool& graph_distractor_pool() {
  static const DistractorPool pool = [] {
    DistractorPool p;
    p.families = {{"charts", {"line plot", "dot-line plot", "vertical bar", "horizontal bar", "pie"}}};
    return p;
  }();
  return pool;
}

namespace {

std::vector<std::string> sample_distractors_impl(const std::string& truth, const DistractorPool& pool,
                                                 Rng& rng) {
  const auto* family = pool.family_of(truth);
  std::vector<std::string> family_candidates;
  if (family) {
    for (const auto& m : *family)
      if (m != truth) family_candidates.push_back(m);
  }
  std::vector<std::string> others;
  for (const auto& m : pool.all_members()) {
    if (m == truth) continue;
    bool in_family = false;
    for (const auto& f : family_candidates)
      if (f == m) in_family = true;
    if (!in_family) others.push_back(m);
  }

  const bool hard = rng.bernoulli(pool.hard_rate) && !family_candidates.empty();
  std::vector<std::string> picked;
  const auto take = [&](std::vector<std::string>& from) {
    if (from.empty()) return false;
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(from.size()) - 1));
    picked.push_back(from[i]);
    from.erase(from.begin() + static_cast<std::ptrdiff_t>(i));
    return true;
  };

  if (hard) {
    take(family_candidates);  // at least one visually similar choice
    std::vector<std::string> rest = others;
    rest.insert(rest.end(), family_candidates.begin(), family_candidates.end());
    while (picked.size() < 3 && take(rest)) {
    }
  } else {
    // visually dissimilar picks; small pools fall back to the family
    while (picked.size() < 3 && take(others)) {
    }
    while (picked.size() < 3 && take(family_candidates)) {
    }
  }
  return picked;
}

}  // namespace

std::vector<std::string> sample_distractors(const std::string& truth, const DistractorPool& pool,
                                            std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x64697372ULL));
  return sample_distractors_impl(truth, pool, rng);
}

// ---------------------------------------------------------------------------
// Template machinery
// ---------------------------------------------------------------------------

namespace {

std::string fill_placeholders(std::string text, const std::map<std::string, std::string>& fills) {
  for (const auto& [key, value] : fills) {
    const std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
      text.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return text;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string pluralize(const std::string& shape, int num) {
  if (num == 1) return shape;
  if (!shape.empty() && shape.back() == 's') return shape + "es";  // rhombus -> rhombuses
  return shape + "s";
}

// Templates spell the plural as "{shape}s"; feed them a stem whose +"s"
// form is the correct plural.
std::string plural_stem(const std::string& shape) {
  const std::string plural = pluralize(shape, 2);
  return plural.substr(0, plural.size() - 1);
}

std::string choices_clause(const std::vector<std::string>& choices) {
  static const char* letters = "ABCD";
  std::string out = " Choices:";
  for (std::size_t i = 0; i < choices.size(); ++i) {
    out += " ";
    out += letters[i];
    out += ":" + choices[i];
  }
  out += ".";
  return out;
}

std::string tf_clause() { return " Choices: A:Yes B:No."; }

// Question stems per (subject, task, format); the choices clause is appended
// at render time so balancing can rebuild it.
struct TemplateDef {
  std::string id;
  std::string stem;
};

const std::vector<TemplateDef>& stems(const std::string& subject, Task task, Format format) {
  static const std::vector<TemplateDef> plane_cls_mc = {
      {"plane_cls_mc_0", "What is the shape of object {vertices} in the image?"},
      {"plane_cls_mc_1", "Can you identify the type of object {vertices} in the picture?"},
      {"plane_cls_mc_2", "Can you identify the type of object in the picture?"},
      {"plane_cls_mc_3", "What is the shape of the object in the image?"},
  };
  static const std::vector<TemplateDef> plane_cnt_tf = {
      {"plane_cnt_tf_0", "There {be} only {num} {shape} in the picture, right?"},
      {"plane_cnt_tf_1", "{be} there only {num} {shape} in the picture?"},
      {"plane_cnt_tf_2", "You can only see {num} objects in the picture, can't you?"},
      {"plane_cnt_tf_3", "There should be only {num} shapes in the picture, correct?"},
  };
  static const std::vector<TemplateDef> plane_cnt_mc = {
      {"plane_cnt_mc_0", "How many {shape}s can you find in the picture?"},
      {"plane_cnt_mc_1", "Please count all the {shape}s in the image."},
      {"plane_cnt_mc_2", "What is the total number of shapes in the picture?"},
      {"plane_cnt_mc_3", "How many objects can you identify in the image?"},
      {"plane_cnt_mc_4", "Please identify and select all the {shape}s in the picture."},
      {"plane_cnt_mc_5", "Find and select all the {shape}s in the picture."},
  };
  static const std::vector<TemplateDef> plane_grd = {
      {"plane_grd_0",
       "Please provide the bounding box coordinate of the region this sentence describes: "
       "{description}."},
  };
  static const std::vector<TemplateDef> plane_rlat_tf = {
      {"plane_rlat_tf_0",
       "Can the relationship {preposition} {shape} in the image be described as \"{relation}\"?"},
      {"plane_rlat_tf_1",
       "Does the image show the relationship {preposition} {shape} as \"{relation}\"?"},
      {"plane_rlat_tf_2",
       "Is {shape1} described as being in the '{relation}' relative to {shape2} in the image?"},
      {"plane_rlat_tf_3",
       "Is {shape1} said to be in the '{relation}' relative to {shape2} in the image?"},
  };
  static const std::vector<TemplateDef> plane_rlat_mc = {
      {"plane_rlat_mc_0", "What is the relationship {preposition} {shape} in the picture?"},
      {"plane_rlat_mc_1", "Can you identify the relationship {preposition} {shape} in the image?"},
      {"plane_rlat_mc_2", "What is the relative position of {shape1} to {shape2} in the image?"},
      {"plane_rlat_mc_3", "What is the spatial relationship of {shape1} to {shape2} in the image?"},
  };
  static const std::vector<TemplateDef> solid_cls_mc = {
      {"solid_cls_mc_0",
       "What is the shape of the {size} {color} object made of {material} in the image?"},
      {"solid_cls_mc_1",
       "Can you identify the type of {size} {color} object with {material} material in the picture?"},
  };
  static const std::vector<TemplateDef> solid_cnt_tf = {
      {"solid_cnt_tf_0", "There {be} only {num} {shape} in the picture, right?"},
      {"solid_cnt_tf_1", "{be} there only {num} {shape} in the picture?"},
      {"solid_cnt_tf_2", "There are only {num} objects in the picture, right?"},
      {"solid_cnt_tf_3", "Are there only {num} shapes in the picture?"},
  };
  static const std::vector<TemplateDef> solid_cnt_mc = {
      {"solid_cnt_mc_0", "How many {shape}s can you find in the picture?"},
      {"solid_cnt_mc_1", "Please count all the {shape}s in the image."},
      {"solid_cnt_mc_2", "Count the shapes in the image."},
      {"solid_cnt_mc_3", "How many shapes can you visually identify in the image?"},
      {"solid_cnt_mc_4", "How many {size} {color} {material} objects are there in the image?"},
      {"solid_cnt_mc_5", "How many {size} {color} {material} objects are present in the image?"},
  };
  static const std::vector<TemplateDef> solid_grd = {
      {"solid_grd_0",
       "Please provide the bounding box coordinate of the region this sentence describes: "
       "{description}."},
  };
  static const std::vector<TemplateDef> solid_rlat_tf = {
      {"solid_rlat_tf_0",
       "Is it correct that {shape1} is described as being in the '{relation}' relative to {shape2} "
       "in the image?"},
      {"solid_rlat_tf_1",
       "Is {shape1} described as being in the '{relation}' relative to {shape2} in the image?"},
      {"solid_rlat_tf_2",
       "Is {shape1} said to be in the '{relation}' relative to {shape2} in the image?"},
      {"solid_rlat_tf_3",
       "Can you confirm that {shape1} is in the '{relation}' relative to {shape2} in the image?"},
  };
  static const std::vector<TemplateDef> solid_rlat_mc = {
      {"solid_rlat_mc_0", "In the image, where is {shape1} in relation to {shape2}?"},
      {"solid_rlat_mc_1", "What is the relative position of {shape1} to {shape2} in the image?"},
      {"solid_rlat_mc_2", "What is the spatial relationship of {shape1} to {shape2} in the image?"},
      {"solid_rlat_mc_3", "Describe how {shape1} is situated relative to {shape2} in the image."},
  };
  static const std::vector<TemplateDef> graph_cls_mc = {
      {"graph_cls_mc_0", "What type of chart is shown in the image?"},
      {"graph_cls_mc_1", "Identify the type of chart in the image."},
      {"graph_cls_mc_2", "Which of the following best describes the chart graph in the image?"},
      {"graph_cls_mc_3", "Which kind of chart does the image represent?"},
      {"graph_cls_mc_4", "What kind of data visualization is shown in the image?"},
      {"graph_cls_mc_5", "Can you identify the type of chart in the image?"},
  };
  static const std::vector<TemplateDef> graph_cnt_tf = {
      {"graph_cnt_tf_0", "{be} there only {num} {shape} in the picture?"},
      {"graph_cnt_tf_1",
       "The picture contains only {num} {shape}, each represented by a different color, doesn't it?"},
      {"graph_cnt_tf_2",
       "You can only see {num} {shape} with different colors in the picture, can't you?"},
  };
  static const std::vector<TemplateDef> graph_cnt_mc = {
      {"graph_cnt_mc_0", "How many {shape}s are there in the image?"},
      {"graph_cnt_mc_1", "Can you count the total number of {shape}s in the image?"},
      {"graph_cnt_mc_2", "What is the total number of {shape}s in the picture?"},
  };
  static const std::vector<TemplateDef> graph_grd = {
      {"graph_grd_0",
       "Please provide the bounding box coordinate of the region this sentence describes: "
       "{description}."},
  };
  static const std::vector<TemplateDef> graph_rlat_tf = {
      {"graph_rlat_tf_0", "{question}"},
  };
  static const std::vector<TemplateDef> grd_vertex = {
      {"plane_grd_vertex_0",
       "Please provide the list of vertex labels described by the sentence: {description}."},
  };
  static const std::vector<TemplateDef> none = {};

  if (task == Task::grd && format == Format::free_form) {
    if (subject == "plane") return plane_grd;
    if (subject == "solid") return solid_grd;
    return graph_grd;
  }
  if (subject == "plane") {
    if (task == Task::cls && format == Format::multiple_choice) return plane_cls_mc;
    if (task == Task::cnt && format == Format::true_false) return plane_cnt_tf;
    if (task == Task::cnt && format == Format::multiple_choice) return plane_cnt_mc;
    if (task == Task::rlat && format == Format::true_false) return plane_rlat_tf;
    if (task == Task::rlat && format == Format::multiple_choice) return plane_rlat_mc;
  } else if (subject == "solid") {
    if (task == Task::cls && format == Format::multiple_choice) return solid_cls_mc;
    if (task == Task::cnt && format == Format::true_false) return solid_cnt_tf;
    if (task == Task::cnt && format == Format::multiple_choice) return solid_cnt_mc;
    if (task == Task::rlat && format == Format::true_false) return solid_rlat_tf;
    if (task == Task::rlat && format == Format::multiple_choice) return solid_rlat_mc;
  } else if (subject == "graph") {
    if (task == Task::cls && format == Format::multiple_choice) return graph_cls_mc;
    if (task == Task::cnt && format == Format::true_false) return graph_cnt_tf;
    if (task == Task::cnt && format == Format::multiple_choice) return graph_cnt_mc;
    if (task == Task::rlat && format == Format::true_false) return graph_rlat_tf;
  }
  return none;
}

const TemplateDef& vertex_grd_template() {
  static const TemplateDef t = {
      "plane_grd_vertex_0",
      "Please provide the list of vertex labels described by the sentence: {description}."};
  return t;
}

}  // namespace

std::string object_description(const Annotation& annotation, const AnnotationObject& obj) {
  if (annotation.subject == "solid") {
    return obj.attributes.at("size") + " " + obj.attributes.at("color") + " " +
           obj.attributes.at("material") + " " + obj.shape;
  }
  if (annotation.subject == "graph") {
    const auto color = obj.attributes.find("color");
    if (color == obj.attributes.end()) return obj.shape;  // legend / title
    return color->second + " " + obj.shape;
  }
  const auto marker = obj.attributes.find("marker");
  if (marker != obj.attributes.end()) return obj.shape + " " + marker->second;
  return obj.shape + " " + obj.attributes.at("vertices");
}

// ---------------------------------------------------------------------------
// generate_qa
// ---------------------------------------------------------------------------

namespace {

struct Generator {
  const Annotation& a;
  const QAOptions& opts;
  Rng rng;
  std::uint64_t seed;

  std::vector<const AnnotationObject*> countable;  // objects counting refers to
  std::vector<const AnnotationObject*> prominent;  // prominent & counted

  Generator(const Annotation& annotation, const QAOptions& options, std::uint64_t s)
      : a(annotation), opts(options), rng(derive_seed(s, 0x71616765ULL)), seed(s) {
    for (const auto& obj : a.objects) {
      if (!obj.counted) continue;
      if (opts.overlap_mode) {
        countable.push_back(&obj);
      } else if (obj.prominent) {
        countable.push_back(&obj);
      }
      if (obj.prominent) prominent.push_back(&obj);
    }
  }

  bool marker_mode() const {
    return !a.objects.empty() && a.objects.front().attributes.count("marker") > 0;
  }

  QAFlags base_flags() const {
    QAFlags f;
    f.marker_mode = marker_mode();
    f.overlap_mode = opts.overlap_mode;
    f.vertex_random = opts.vertex_random;
    return f;
  }

  std::string shuffled_vertices(const std::string& vertices) {
    if (!opts.vertex_random || vertices.size() < 2) return vertices;
    std::vector<char> letters(vertices.begin(), vertices.end());
    for (int tries = 0; tries < 8; ++tries) {
      rng.shuffle(letters);
      const std::string shuffled(letters.begin(), letters.end());
      if (shuffled != vertices) return shuffled;
    }
    return std::string(letters.begin(), letters.end());
  }

  std::string describe(const AnnotationObject& obj) {
    if (a.subject == "plane" && !obj.attributes.count("marker")) {
      return obj.shape + " " + shuffled_vertices(obj.attributes.at("vertices"));
    }
    return object_description(a, obj);
  }

  const TemplateDef& pick_template(const std::vector<TemplateDef>& defs) {
    return defs[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(defs.size()) - 1))];
  }

  QAItem base_item(Task task, Format format, const TemplateDef& def, int index) {
    QAItem item;
    item.qid = a.image_id + "_" + to_string(task) + "_" + std::to_string(index);
    item.image_id = a.image_id;
    item.subject = a.subject;
    item.task = task;
    item.format = format;
    item.template_id = def.id;
    item.seed = seed;
    item.flags = base_flags();
    item.canvas_width = a.width;
    item.canvas_height = a.height;
    return item;
  }

  void finalize_mc(QAItem& item, const std::string& stem_filled, const std::string& truth,
                   std::vector<std::string> distractors) {
    std::vector<std::string> choices = std::move(distractors);
    const auto pos = static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(choices.size())));
    choices.insert(choices.begin() + static_cast<std::ptrdiff_t>(pos), truth);
    item.choices = choices;
    item.answer = std::string(1, static_cast<char>('A' + pos));
    item.question = stem_filled + choices_clause(choices);
  }

  void finalize_tf(QAItem& item, const std::string& stem_filled, bool yes) {
    item.choices = {"Yes", "No"};
    item.answer = yes ? "A" : "B";
    item.question = stem_filled + tf_clause();
  }

  // --- numeric distractors for counting ---
  std::vector<std::string> count_choices(int truth) {
    std::vector<int> candidates;
    for (int delta : {-2, -1, 1, 2}) {
      const int v = truth + delta;
      if (v >= 0) candidates.push_back(v);
    }
    std::vector<int> picked;
    while (picked.size() < 3 && !candidates.empty()) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(candidates.size()) - 1));
      picked.push_back(candidates[i]);
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
    }
    int pad = truth + 3;
    while (picked.size() < 3) picked.push_back(pad++);
    std::vector<std::string> out;
    for (int v : picked) out.push_back(std::to_string(v));
    return out;
  }

  int wrong_count(int truth) {
    std::vector<int> candidates;
    for (int delta : {-2, -1, 1, 2}) {
      const int v = truth + delta;
      if (v >= 1 && v != truth) candidates.push_back(v);
    }
    if (candidates.empty()) return truth + 1;
    return candidates[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(candidates.size()) - 1))];
  }

  // --- task generators; return false when no valid item can be built ---

  bool gen_cls(Format format, int index, std::vector<QAItem>& out) {
    if (format != Format::multiple_choice) throw std::invalid_argument("cls supports multiple_choice only");
    const auto& defs = stems(a.subject, Task::cls, format);
    if (defs.empty() || prominent.empty()) return false;

    if (a.subject == "graph") {
      if (!a.chart_type) return false;
      const TemplateDef& def = pick_template(defs);
      QAItem item = base_item(Task::cls, format, def, index);
      finalize_mc(item, fill_placeholders(def.stem, {}), *a.chart_type,
                  sample_distractors_impl(*a.chart_type, graph_distractor_pool(), rng));
      out.push_back(std::move(item));
      return true;
    }

    if (a.subject == "solid") {
      // uniqueness filter: the attribute triple must name exactly one object
      std::vector<const AnnotationObject*> unambiguous;
      for (const auto* obj : prominent) {
        int matches = 0;
        for (const auto* other : prominent) {
          if (other->attributes.at("size") == obj->attributes.at("size") &&
              other->attributes.at("color") == obj->attributes.at("color") &&
              other->attributes.at("material") == obj->attributes.at("material")) {
            ++matches;
          }
        }
        if (matches == 1) unambiguous.push_back(obj);
      }
      if (unambiguous.empty()) return false;  // AmbiguousTarget: skipped
      const auto* obj =
          unambiguous[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(unambiguous.size()) - 1))];
      const TemplateDef& def = pick_template(defs);
      QAItem item = base_item(Task::cls, format, def, index);
      const std::map<std::string, std::string> fills = {{"size", obj->attributes.at("size")},
                                                        {"color", obj->attributes.at("color")},
                                                        {"material", obj->attributes.at("material")}};
      finalize_mc(item, fill_placeholders(def.stem, fills), obj->shape,
                  sample_distractors_impl(obj->shape, solid_distractor_pool(), rng));
      out.push_back(std::move(item));
      return true;
    }

    // plane
    const auto* obj =
        prominent[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(prominent.size()) - 1))];
    std::vector<TemplateDef> usable;
    for (const auto& def : defs) {
      const bool attribute_free = def.stem.find("{vertices}") == std::string::npos;
      if (attribute_free && prominent.size() != 1) continue;  // would be ambiguous
      if (!attribute_free && marker_mode()) continue;         // markers replace vertex strings
      usable.push_back(def);
    }
    if (marker_mode()) {
      // reference objects via their numeric marker
      usable.push_back({"plane_cls_mc_marker_0", "What is the shape of object {marker} in the image?"});
    }
    if (usable.empty()) return false;
    const TemplateDef def = usable[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(usable.size()) - 1))];
    QAItem item = base_item(Task::cls, format, def, index);
    std::map<std::string, std::string> fills;
    if (obj->attributes.count("vertices")) {
      fills["vertices"] = shuffled_vertices(obj->attributes.at("vertices"));
    }
    if (obj->attributes.count("marker")) fills["marker"] = obj->attributes.at("marker");
    finalize_mc(item, fill_placeholders(def.stem, fills), obj->shape,
                sample_distractors_impl(obj->shape, plane_distractor_pool(), rng));
    out.push_back(std::move(item));
    return true;
  }

  bool gen_cnt(Format format, int index, std::vector<QAItem>& out) {
    const auto& defs = stems(a.subject, Task::cnt, format);
    if (defs.empty() || countable.empty()) return false;
    const TemplateDef& def = pick_template(defs);
    QAItem item = base_item(Task::cnt, format, def, index);

    const bool by_kind = def.stem.find("{shape}") != std::string::npos;
    const bool by_attributes = def.stem.find("{size}") != std::string::npos;

    std::map<std::string, std::string> fills;
    int truth = 0;
    if (by_attributes) {  // solid: count objects matching an attribute triple
      const auto* sample =
          countable[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(countable.size()) - 1))];
      fills["size"] = sample->attributes.at("size");
      fills["color"] = sample->attributes.at("color");
      fills["material"] = sample->attributes.at("material");
      for (const auto* obj : countable) {
        if (obj->attributes.at("size") == fills["size"] &&
            obj->attributes.at("color") == fills["color"] &&
            obj->attributes.at("material") == fills["material"]) {
          ++truth;
        }
      }
    } else if (by_kind) {
      std::vector<std::string> kinds;
      for (const auto* obj : countable) {
        if (std::find(kinds.begin(), kinds.end(), obj->shape) == kinds.end()) kinds.push_back(obj->shape);
      }
      const std::string kind = kinds[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(kinds.size()) - 1))];
      for (const auto* obj : countable)
        if (obj->shape == kind) ++truth;
      fills["kind"] = kind;  // resolved into {shape} below, with pluralization
    } else {
      truth = static_cast<int>(countable.size());
    }

    if (format == Format::true_false) {
      const bool yes = opts.tf_polarity ? *opts.tf_polarity : rng.bernoulli(0.5);
      const int num = yes ? truth : wrong_count(truth);
      fills["num"] = std::to_string(num);
      fills["be"] = num == 1 ? "is" : "are";
      if (by_kind) fills["shape"] = pluralize(fills["kind"], num);
      std::string stem = fill_placeholders(def.stem, fills);
      stem = capitalize(stem);
      finalize_tf(item, stem, yes);
    } else if (format == Format::multiple_choice) {
      if (by_kind) fills["shape"] = plural_stem(fills["kind"]);  // template supplies the final "s"
      const std::string stem = fill_placeholders(def.stem, fills);
      finalize_mc(item, stem, std::to_string(truth), count_choices(truth));
    } else {
      throw std::invalid_argument("cnt supports multiple_choice or true_false");
    }
    out.push_back(std::move(item));
    return true;
  }

  bool gen_grd(Format format, int index, std::vector<QAItem>& out) {
    if (format != Format::free_form) throw std::invalid_argument("grd is free_form only");

    // groundable: prominent objects plus legend/title extras
    std::vector<const AnnotationObject*> groundable = prominent;
    for (const auto& obj : a.objects) {
      if (!obj.counted && !obj.prominent) groundable.push_back(&obj);
    }
    if (groundable.empty()) return false;

    // uniqueness: the description must name exactly one object
    std::vector<const AnnotationObject*> unambiguous;
    for (const auto* obj : groundable) {
      const std::string desc = object_description(a, *obj);
      int matches = 0;
      for (const auto* other : groundable) {
        if (object_description(a, *other) == desc) ++matches;
      }
      if (matches == 1) unambiguous.push_back(obj);
    }
    if (unambiguous.empty()) return false;
    const auto* obj =
        unambiguous[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(unambiguous.size()) - 1))];

    if (opts.vertex_list_grounding) {
      if (a.subject != "plane" || !obj->attributes.count("vertices")) return false;
      // the shape name alone must identify the object
      int same_shape = 0;
      for (const auto* other : prominent)
        if (other->shape == obj->shape) ++same_shape;
      if (same_shape != 1) return false;
      const TemplateDef& def = vertex_grd_template();
      QAItem item = base_item(Task::grd, format, def, index);
      item.question = fill_placeholders(def.stem, {{"description", capitalize(obj->shape)}});
      item.answer = obj->attributes.at("vertices");
      out.push_back(std::move(item));
      return true;
    }

    const auto& defs = stems(a.subject, Task::grd, format);
    const TemplateDef& def = pick_template(defs);
    QAItem item = base_item(Task::grd, format, def, index);
    item.question = fill_placeholders(def.stem, {{"description", describe(*obj)}});
    item.answer = obj->box.to_text();
    item.answer_box = obj->box;
    out.push_back(std::move(item));
    return true;
  }

  bool gen_rlat(Format format, int index, std::vector<QAItem>& out) {
    // carried-over true/false questions (graphs)
    if (a.subject == "graph") {
      if (format != Format::true_false || a.carried_qa.empty()) return false;
      const auto& q = a.carried_qa[static_cast<std::size_t>(
          rng.uniform_int(0, std::int64_t(a.carried_qa.size()) - 1))];
      const TemplateDef& def = stems("graph", Task::rlat, Format::true_false)[0];
      QAItem item = base_item(Task::rlat, format, def, index);
      finalize_tf(item, fill_placeholders(def.stem, {{"question", q.question}}), q.answer_yes);
      out.push_back(std::move(item));
      return true;
    }

    // pick a relation edge: mathematical or spatial
    std::vector<const AnnotationRelation*> edges;
    for (const auto& r : a.relations) edges.push_back(&r);
    if (edges.empty()) return false;
    const auto* edge = edges[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(edges.size()) - 1))];
    const auto* subj = a.find_object(edge->subject_id);
    const auto* obj = a.find_object(edge->object_id);
    if (!subj || !obj) return false;

    const auto& defs = stems(a.subject, Task::rlat, format);
    if (defs.empty()) return false;
    std::vector<TemplateDef> usable;
    for (const auto& def : defs) {
      const bool pairwise = def.stem.find("{shape1}") != std::string::npos;
      // spatial edges read naturally in the pairwise "relative to" phrasings,
      // mathematical edges in the "relationship between" phrasings
      if (edge->spatial == pairwise) usable.push_back(def);
    }
    if (usable.empty()) return false;
    const TemplateDef def =
        usable[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(usable.size()) - 1))];
    QAItem item = base_item(Task::rlat, format, def, index);

    const std::string truth = edge->spatial
                                  ? edge->kind
                                  : relation_info(*relation_kind_from_id(edge->kind)).display;

    std::map<std::string, std::string> fills;
    fills["shape1"] = describe(*subj);
    fills["shape2"] = describe(*obj);
    fills["preposition"] = "between";
    fills["shape"] = "the " + describe(*subj) + " and the " + describe(*obj);

    // choice pool: union of mathematical and spatial relation names
    std::vector<std::string> pool;
    if (edge->spatial) {
      pool = {"top-left", "top-right", "bottom-left", "bottom-right"};
    } else {
      for (const auto& info : relation_registry()) pool.push_back(info.display);
      for (const char* s : {"top-left", "top-right", "bottom-left", "bottom-right"}) pool.emplace_back(s);
    }
    std::erase(pool, truth);

    if (format == Format::true_false) {
      const bool yes = opts.tf_polarity ? *opts.tf_polarity : rng.bernoulli(0.5);
      std::string stated = truth;
      if (!yes) stated = pool[static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(pool.size()) - 1))];
      fills["relation"] = stated;
      finalize_tf(item, fill_placeholders(def.stem, fills), yes);
    } else if (format == Format::multiple_choice) {
      std::vector<std::string> distractors;
      rng.shuffle(pool);
      for (std::size_t i = 0; i < 3 && i < pool.size(); ++i) distractors.push_back(pool[i]);
      finalize_mc(item, fill_placeholders(def.stem, fills), truth, std::move(distractors));
    } else {
      throw std::invalid_argument("rlat supports multiple_choice or true_false");
    }
    out.push_back(std::move(item));
    return true;
  }
};

}  // namespace

std::vector<QAItem> generate_qa(const Annotation& annotation, Task task, Format format,
                                std::uint64_t seed, const QAOptions& options) {
  if (task == Task::grd && format != Format::free_form) {
    throw std::invalid_argument("grd is free_form only");
  }
  if (task != Task::grd && format == Format::free_form) {
    throw std::invalid_argument("free_form is reserved for grd");
  }
  if (task == Task::cls && format == Format::true_false) {
    throw std::invalid_argument("cls supports multiple_choice only");
  }

  Generator gen(annotation, options, seed);
  std::vector<QAItem> out;
  std::set<std::string> seen_questions;
  int attempts = 0;
  while (static_cast<int>(out.size()) < options.count && attempts < options.count * 8 + 8) {
    ++attempts;
    std::vector<QAItem> batch;
    bool ok = false;
    const int index = static_cast<int>(out.size());
    switch (task) {
      case Task::cls: ok = gen.gen_cls(format, index, batch); break;
      case Task::cnt: ok = gen.gen_cnt(format, index, batch); break;
      case Task::grd: ok = gen.gen_grd(format, index, batch); break;
      case Task::rlat: ok = gen.gen_rlat(format, index, batch); break;
    }
    if (!ok) {
      if (out.empty() && attempts >= 4) break;  // nothing generatable for this annotation
      continue;
    }
    for (auto& item : batch) {
      if (seen_questions.insert(item.question).second) {
        out.push_back(std::move(item));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// balance_answers
// ---------------------------------------------------------------------------

std::vector<QAItem> balance_answers(std::vector<QAItem> items, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x62616c61ULL));

  std::vector<std::size_t> mc_indices;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].format == Format::multiple_choice && items[i].choices.size() == 4) {
      mc_indices.push_back(i);
    }
  }

  // Quota-shuffled letters: each of A..D appears floor/ceil(n/4) times.
  std::vector<int> letters;
  letters.reserve(mc_indices.size());
  for (std::size_t i = 0; i < mc_indices.size(); ++i) letters.push_back(static_cast<int>(i % 4));
  rng.shuffle(letters);

  for (std::size_t k = 0; k < mc_indices.size(); ++k) {
    QAItem& item = items[mc_indices[k]];
    const int target = letters[k];
    const int current = item.answer.empty() ? 0 : item.answer[0] - 'A';
    if (current != target) {
      std::swap(item.choices[static_cast<std::size_t>(current)],
                item.choices[static_cast<std::size_t>(target)]);
      item.answer = std::string(1, static_cast<char>('A' + target));
    }
    // rebuild the choices clause from the stem
    const auto pos = item.question.rfind(" Choices:");
    if (pos != std::string::npos) {
      item.question = item.question.substr(0, pos) + choices_clause(item.choices);
    }
  }
  // true/false polarity is balanced at generation time; items pass through
  return items;
}

// ---------------------------------------------------------------------------
// inject_text_distractor
// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& conflict_claims() {
  static const std::map<std::string, std::string> claims = {
      {"parallel", "the two lines are perpendicular"},
      {"perpendicular", "the two lines are parallel"},
      {"intersection", "the two lines are parallel"},
      {"tangent", "the line and the circle cross at two distinct points"},
      {"on", "the endpoint does not touch the other object"},
      {"midpoint", "the endpoint is far from the middle of the other segment"},
      {"angle bisection", "the line divides the angle into clearly unequal parts"},
      {"angle trisection", "the rays divide the angle into clearly unequal parts"},
      {"reflection", "the two shapes are not mirror images of each other"},
      {"symmetry axis", "the line is not an axis of symmetry of the shape"},
      {"top-left", "the first object is to the bottom-right of the second object"},
      {"top-right", "the first object is to the bottom-left of the second object"},
      {"bottom-left", "the first object is to the top-right of the second object"},
      {"bottom-right", "the first object is to the top-left of the second object"},
  };
  return claims;
}

}  // namespace

QAItem inject_text_distractor(const QAItem& item, TextDistractorMode mode,
                              const Annotation& annotation) {
  QAItem out = item;
  if (mode == TextDistractorMode::unrelated) {
    Rng rng(derive_seed(item.seed, 0x756e7265ULL));
    std::vector<std::string> facts = {
        "Note that the foreground color is a shade of blue.",
        "Note that the picture has a plain white background.",
    };
    for (const auto& obj : annotation.objects) {
      if (obj.geometry && obj.attributes.count("vertices")) {
        facts.push_back("Note that object " + obj.attributes.at("vertices") + " has " +
                        std::to_string(obj.geometry->labels.size()) + " labeled vertices.");
        break;
      }
    }
    const std::string& fact = facts[static_cast<std::size_t>(
        rng.uniform_int(0, std::int64_t(facts.size()) - 1))];
    const auto pos = out.question.rfind(" Choices:");
    if (pos != std::string::npos) {
      out.question = out.question.substr(0, pos) + " " + fact + out.question.substr(pos);
    } else {
      out.question += " " + fact;
    }
    return out;
  }

  // conflict mode
  if (item.task != Task::rlat) {
    throw std::invalid_argument("conflict distractors require a relationship item");
  }
  std::string truth;
  if (item.format == Format::multiple_choice && item.answer.size() == 1) {
    const std::size_t idx = static_cast<std::size_t>(item.answer[0] - 'A');
    if (idx < item.choices.size()) truth = item.choices[idx];
  } else if (item.format == Format::true_false && item.answer == "A") {
    // the stated relation is the true one; pull it out of the quotes
    for (const char quote : {'"', '\''}) {
      const auto first = item.question.find(quote);
      const auto last = item.question.rfind(quote);
      if (first != std::string::npos && last > first) {
        truth = item.question.substr(first + 1, last - first - 1);
        break;
      }
    }
  }
  const auto it = conflict_claims().find(truth);
  if (truth.empty() || it == conflict_claims().end()) {
    throw std::invalid_argument("no contradicting relation available for this item");
  }
  const std::string claim = " Note that " + it->second + ".";
  const auto pos = out.question.rfind(" Choices:");
  if (pos != std::string::npos) {
    out.question = out.question.substr(0, pos) + claim + out.question.substr(pos);
  } else {
    out.question += claim;
  }
  out.flags.conflict_mode = true;
  return out;
}

// ---------------------------------------------------------------------------
// Stats
// ---------------------------------------------------------------------------

Stats benchmark_stats(const std::vector<QAItem>& items) {
  Stats s;
  s.total = static_cast<int>(items.size());
  std::set<std::string> images, questions, answers;
  std::int64_t token_total = 0;
  for (const auto& item : items) {
    s.by_task[to_string(item.task)]++;
    s.by_subject[item.subject]++;
    s.by_format[to_string(item.format)]++;
    images.insert(item.image_id);
    questions.insert(item.question);
    answers.insert(item.answer);
    if (item.format == Format::multiple_choice) s.answer_letters[item.answer]++;
    if (item.format == Format::true_false) s.tf_answers[item.answer]++;
    std::istringstream words(item.question);
    std::string w;
    while (words >> w) ++token_total;
  }
  s.unique_images = static_cast<int>(images.size());
  s.unique_questions = static_cast<int>(questions.size());
  s.unique_answers = static_cast<int>(answers.size());
  s.avg_question_length = items.empty() ? 0.0 : static_cast<double>(token_total) / s.total;
  return s;
}

nlohmann::ordered_json Stats::to_json() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["by_task"] = by_task;
  j["by_subject"] = by_subject;
  j["by_format"] = by_format;
  j["unique_images"] = unique_images;
  j["unique_questions"] = unique_questions;
  j["unique_answers"] = unique_answers;
  j["answer_letters"] = answer_letters;
  j["tf_answers"] = tf_answers;
  j["avg_question_length"] = avg_question_length;
  return j;
}

// ---------------------------------------------------------------------------
// JSONL
// ---------------------------------------------------------------------------

std::vector<QAItem> read_qa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<QAItem> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(QAItem::from_json(nlohmann::json::parse(line)));
  }
  return out;
}

void write_qa(const std::string& path, const std::vector<QAItem>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& item : items) out << item.to_json().dump() << "\n";
}

}  // namespace geobench
