#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "geobench/annotation.hpp"
#include "geobench/rng.hpp"

using namespace geobench;

TEST_CASE("bounding_box basics") {
  SUBCASE("square") {
    SceneObject sq = testfix::square_scene().objects[0];
    CHECK(bounding_box(sq) == Box{100, 100, 200, 200});
  }
  SUBCASE("circle uses analytic extremes") {
    SceneObject c;
    c.kind = ShapeKind::circle;
    c.vertices = {{50, 50}};
    c.labels = {"O"};
    c.radius = 10;
    CHECK(bounding_box(c) == Box{40, 40, 60, 60});
  }
  SUBCASE("segment") {
    SceneObject s;
    s.kind = ShapeKind::segment;
    s.vertices = {{10, 90}, {30, 20}};
    s.labels = {"A", "B"};
    CHECK(bounding_box(s) == Box{10, 20, 30, 90});
  }
  SUBCASE("empty geometry throws") {
    SceneObject s;
    s.kind = ShapeKind::segment;
    CHECK_THROWS_AS(bounding_box(s), std::invalid_argument);
  }
}

TEST_CASE("spatial_relation center comparison and ties") {
  const Box a{0, 0, 10, 10};
  const Box b{20, 20, 30, 30};
  CHECK(spatial_relation(a, b) == SpatialRelation::bottom_right);
  CHECK(spatial_relation(b, a) == SpatialRelation::top_left);
  // equal y-centers resolve up
  CHECK(spatial_relation(a, Box{20, 0, 30, 10}) == SpatialRelation::top_right);
  // equal x-centers resolve right
  CHECK(spatial_relation(a, Box{0, 20, 10, 30}) == SpatialRelation::bottom_right);
}

TEST_CASE("spatial antisymmetry on non-tied pairs") {
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const Box a{int(rng.uniform_int(0, 200)), int(rng.uniform_int(0, 200)),
                int(rng.uniform_int(201, 400)), int(rng.uniform_int(201, 400))};
    const Box b{int(rng.uniform_int(0, 200)), int(rng.uniform_int(0, 200)),
                int(rng.uniform_int(201, 400)), int(rng.uniform_int(201, 400))};
    if (a.cx() == b.cx() || a.cy() == b.cy()) continue;  // ties covered above
    CHECK(spatial_relation(b, a) == diagonal_opposite(spatial_relation(a, b)));
  }
}

TEST_CASE("to_annotation on the one-square fixture") {
  const Annotation a = testfix::square_annotation();
  REQUIRE(a.objects.size() == 1);
  CHECK(a.subject == "plane");
  CHECK(a.objects[0].shape == "square");
  CHECK(a.objects[0].attributes.at("vertices") == "ABCD");
  CHECK(a.objects[0].box == Box{100, 100, 200, 200});
  CHECK(a.relations.empty());
  CHECK(a.prominent_count() == 1);
}

TEST_CASE("to_annotation emits one spatial relation per prominent pair") {
  const Annotation a = testfix::parallel_annotation();
  REQUIRE(a.objects.size() == 2);
  int spatial = 0, mathematical = 0;
  for (const auto& r : a.relations) (r.spatial ? spatial : mathematical)++;
  CHECK(spatial == 1);
  CHECK(mathematical == 1);
  // mathematical relation copied with the right ids
  bool found = false;
  for (const auto& r : a.relations) {
    if (!r.spatial) {
      CHECK(r.kind == "parallel");
      CHECK(r.subject_id == "obj1");
      CHECK(r.object_id == "obj0");
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("marker mode swaps vertex attributes for numeric markers") {
  const Annotation a = to_annotation(testfix::square_scene(), StyleSpec{}, "m1", true);
  CHECK(a.objects[0].attributes.count("vertices") == 0);
  CHECK(a.objects[0].attributes.at("marker") == "1");
}

TEST_CASE("annotation JSON round-trip is the identity") {
  GenerationConfig config;
  Rng style_rng(5);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const ClauseProgram p = sample_program(seed, config);
    auto verified = verify_program(p, config);
    REQUIRE(std::holds_alternative<VerifiedProgram>(verified));
    auto result = realize_program(std::get<VerifiedProgram>(verified), seed);
    if (!std::holds_alternative<Scene>(result)) continue;
    const Annotation a =
        to_annotation(std::get<Scene>(result), sample_style(style_rng), "img_" + std::to_string(seed));
    const Annotation back = Annotation::from_json(nlohmann::json::parse(a.serialize()));
    CHECK(back == a);
    CHECK(validate_annotation(a.serialize()).empty());
    ++checked;
  }
  CHECK(checked >= 990);
}

TEST_CASE("box containment: sampled outline points lie inside the object box") {
  GenerationConfig config;
  Rng rng(77);
  for (std::uint64_t seed = 500; seed < 560; ++seed) {
    const ClauseProgram p = sample_program(seed, config);
    auto verified = verify_program(p, config);
    auto result = realize_program(std::get<VerifiedProgram>(verified), seed);
    if (!std::holds_alternative<Scene>(result)) continue;
    const Scene& scene = std::get<Scene>(result);
    for (const auto& obj : scene.objects) {
      const Box box = bounding_box(obj);
      for (int s = 0; s < 100; ++s) {
        Point pt;
        const double t = rng.uniform(0.0, 1.0);
        switch (obj.kind) {
          case ShapeKind::circle:
            pt = obj.vertices[0] + obj.radius * Point(std::cos(t * 6.2831853), std::sin(t * 6.2831853));
            break;
          case ShapeKind::ellipse: {
            const Eigen::Rotation2Dd rot(obj.rotation);
            pt = obj.vertices[0] +
                 rot * Point(obj.axis_a * std::cos(t * 6.2831853), obj.axis_b * std::sin(t * 6.2831853));
            break;
          }
          case ShapeKind::semicircle: {
            const double phi = obj.rotation + t * 3.14159265358979;
            pt = obj.vertices[0] + obj.radius * Point(std::cos(phi), std::sin(phi));
            break;
          }
          default: {
            const std::size_t n = obj.vertices.size();
            const std::size_t e = static_cast<std::size_t>(rng.uniform_int(0, std::int64_t(n) - 1));
            const std::size_t e2 = obj.kind == ShapeKind::segment ? 1 : (e + 1) % n;
            const std::size_t e1 = obj.kind == ShapeKind::segment ? 0 : e;
            pt = obj.vertices[e1] + t * (obj.vertices[e2] - obj.vertices[e1]);
            break;
          }
        }
        CHECK(pt.x() >= box.x1 - 1e-9);
        CHECK(pt.y() >= box.y1 - 1e-9);
        CHECK(pt.x() <= box.x2 + 1e-9);
        CHECK(pt.y() <= box.y2 + 1e-9);
      }
    }
  }
}

TEST_CASE("validate_annotation flags schema violations with paths") {
  const Annotation good = testfix::square_annotation();
  CHECK(validate_annotation(good.serialize()).empty());

  SUBCASE("relation to unknown object id") {
    auto j = good.to_json();
    j["relations"].push_back(
        {{"kind", "parallel"}, {"subject_id", "obj0"}, {"object_id", "ghost"}, {"spatial", false}});
    const auto violations = validate_annotation(j.dump());
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("relations[0].object_id") != std::string::npos);
  }
  SUBCASE("inverted box") {
    auto j = good.to_json();
    j["objects"][0]["box"]["x1"] = 300;
    const auto violations = validate_annotation(j.dump());
    REQUIRE(!violations.empty());
    CHECK(violations[0].find("objects[0].box") != std::string::npos);
  }
  SUBCASE("bad subject") {
    auto j = good.to_json();
    j["subject"] = "sculpture";
    REQUIRE(!validate_annotation(j.dump()).empty());
  }
  SUBCASE("unknown field") {
    auto j = good.to_json();
    j["flavor"] = "vanilla";
    const auto violations = validate_annotation(j.dump());
    REQUIRE(!violations.empty());
    CHECK(violations[0].find("flavor") != std::string::npos);
  }
  SUBCASE("not JSON at all") {
    CHECK(!validate_annotation("{oops").empty());
  }
}

TEST_CASE("style sampling stays in the monochromatic palette") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const StyleSpec s = sample_style(rng);
    bool in_palette = false;
    for (const auto& c : monochromatic_palette())
      if (c == s.foreground) in_palette = true;
    CHECK(in_palette);
    CHECK(s.line_width >= 1.5);
    CHECK(s.line_width <= 3.0);
  }
  CHECK(monochromatic_palette().size() == 8);
}
