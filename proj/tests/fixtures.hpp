#pragma once

#include "geobench/annotation.hpp"
#include "geobench/geometry.hpp"

namespace geobench::testfix {

// One axis-aligned square A(100,100) B(200,100) C(200,200) D(100,200) on a
// 512x512 canvas; the smallest useful scene for end-to-end checks.
inline Scene square_scene() {
  Scene scene;
  scene.width = 512;
  scene.height = 512;
  scene.margin = 16;
  scene.seed = 1;
  SceneObject sq;
  sq.id = 0;
  sq.kind = ShapeKind::square;
  sq.vertices = {{100, 100}, {200, 100}, {200, 200}, {100, 200}};
  sq.labels = {"A", "B", "C", "D"};
  scene.objects.push_back(sq);
  scene.prominence_set = {0};
  return scene;
}

inline Annotation square_annotation() {
  return to_annotation(square_scene(), StyleSpec{}, "fixture_s1");
}

// Two horizontal parallel segments AB and CD plus the recorded relation.
inline Scene parallel_scene() {
  Scene scene;
  scene.width = 512;
  scene.height = 512;
  scene.margin = 16;
  scene.seed = 2;
  SceneObject ab;
  ab.id = 0;
  ab.kind = ShapeKind::segment;
  ab.vertices = {{60, 120}, {240, 120}};
  ab.labels = {"A", "B"};
  SceneObject cd;
  cd.id = 1;
  cd.kind = ShapeKind::segment;
  cd.vertices = {{80, 300}, {260, 300}};
  cd.labels = {"C", "D"};
  scene.objects = {ab, cd};
  SceneRelation rel;
  rel.kind = RelationKind::parallel;
  rel.subject = 1;
  rel.anchor = 0;
  scene.relations.push_back(rel);
  scene.prominence_set = {0, 1};
  return scene;
}

inline Annotation parallel_annotation() {
  return to_annotation(parallel_scene(), StyleSpec{}, "fixture_par");
}

}  // namespace geobench::testfix
