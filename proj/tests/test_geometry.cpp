#include <doctest.h>

#include <cmath>

#include "gsynth/geometry.hpp"
#include "gsynth/rng.hpp"

using namespace gsynth;

namespace {

Pose random_pose(Rng& rng) {
  const Vec3 axis = rng.unit_vec3();
  const double angle = rng.uniform(0.0, 3.0);
  return make_pose(Eigen::AngleAxisd(angle, axis).toRotationMatrix(),
                   rng.normal_vec3() * 0.3);
}

Vec3 random_point(Rng& rng, double scale) { return rng.normal_vec3() * scale; }

}  // namespace

TEST_CASE("sphere signed distance is exact") {
  const ObjectModel s = make_sphere(0.5);
  CHECK(signed_distance(s, Vec3(1, 0, 0)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(signed_distance(s, Vec3(0, 0, 0)) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(signed_distance(s, Vec3(0, 0.5, 0)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(signed_distance(s, Vec3(0.3, 0, 0)) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("box signed distance is exact") {
  const ObjectModel b = make_box(Vec3(0.1, 0.2, 0.3));
  // Outside past a corner: the componentwise excess vector's norm.
  CHECK(signed_distance(b, Vec3(0.2, 0.3, 0.4)) ==
        doctest::Approx(0.1 * std::sqrt(3.0)).epsilon(1e-12));
  // Outside a face.
  CHECK(signed_distance(b, Vec3(0.15, 0, 0)) == doctest::Approx(0.05).epsilon(1e-12));
  // Inside: minus the margin of the tightest face.
  CHECK(signed_distance(b, Vec3(0, 0, 0)) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(signed_distance(b, Vec3(0.05, 0, 0)) == doctest::Approx(-0.05).epsilon(1e-12));
}

TEST_CASE("cylinder signed distance is exact") {
  const ObjectModel c = make_cylinder(0.1, 0.2);
  CHECK(signed_distance(c, Vec3(0.3, 0, 0)) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(signed_distance(c, Vec3(0, 0, 0.3)) == doctest::Approx(0.1).epsilon(1e-12));
  // Outside both the lateral wall and the cap: corner distance.
  CHECK(signed_distance(c, Vec3(0.2, 0, 0.3)) ==
        doctest::Approx(std::sqrt(0.01 + 0.01)).epsilon(1e-12));
  CHECK(signed_distance(c, Vec3(0, 0, 0)) == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("posed object answers in world frame") {
  Rng rng{7001};
  for (int i = 0; i < 20; ++i) {
    const Pose T = random_pose(rng);
    const ObjectModel at_origin = make_sphere(0.2);
    const ObjectModel posed = make_sphere(0.2, T);
    const Vec3 p = random_point(rng, 0.4);
    CHECK(signed_distance(posed, T * p) ==
          doctest::Approx(signed_distance(at_origin, p)).epsilon(1e-9));
  }
  const Pose T = random_pose(rng);
  const ObjectModel box = make_box(Vec3(0.1, 0.15, 0.2), T);
  const Vec3 g = sdf_gradient(box, T * Vec3(0.3, 0, 0));
  // Gradient rotates with the pose.
  CHECK((g - T.linear() * Vec3(1, 0, 0)).norm() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("sdf gradient has unit norm away from the medial axis") {
  Rng rng{7002};
  const ObjectModel shapes[] = {make_sphere(0.3), make_box(Vec3(0.1, 0.2, 0.15)),
                                make_cylinder(0.12, 0.2)};
  for (const ObjectModel& o : shapes) {
    int tested = 0;
    while (tested < 300) {
      const Vec3 p = random_point(rng, 0.3);
      if (p.norm() < 1e-2) continue;  // stay clear of the center branch point
      const Vec3 g = sdf_gradient(o, p);
      CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-9));
      ++tested;
    }
  }
}

TEST_CASE("sdf gradient matches finite differences of the distance") {
  Rng rng{7003};
  const ObjectModel shapes[] = {make_sphere(0.3), make_box(Vec3(0.1, 0.2, 0.15)),
                                make_cylinder(0.12, 0.2)};
  const double h = 1e-6;
  for (const ObjectModel& o : shapes) {
    int tested = 0;
    while (tested < 50) {
      const Vec3 p = random_point(rng, 0.35);
      // Skip the kink neighborhoods: near the surface crossing is fine (the
      // field is smooth across it), but stay off creases by requiring the
      // projection to be stable under a nudge.
      const Vec3 q1 = project_to_surface(o, p);
      const Vec3 q2 = project_to_surface(o, p + Vec3(2 * h, -2 * h, 2 * h));
      if ((q1 - q2).norm() > 1e-4) continue;
      if (p.norm() < 5e-2) continue;
      const Vec3 g = sdf_gradient(o, p);
      for (int k = 0; k < 3; ++k) {
        Vec3 dp = Vec3::Zero();
        dp(k) = h;
        const double fd =
            (signed_distance(o, p + dp) - signed_distance(o, p - dp)) / (2 * h);
        CHECK(g(k) == doctest::Approx(fd).epsilon(1e-4));
      }
      ++tested;
    }
  }
}

TEST_CASE("projection lands on the surface and is idempotent") {
  Rng rng{7004};
  const ObjectModel shapes[] = {make_sphere(0.3), make_box(Vec3(0.1, 0.2, 0.15)),
                                make_cylinder(0.12, 0.2)};
  for (const ObjectModel& o : shapes) {
    for (int i = 0; i < 200; ++i) {
      Vec3 p = random_point(rng, 0.3);
      if (p.norm() < 1e-3) continue;
      const Vec3 q = project_to_surface(o, p);
      CHECK(std::abs(signed_distance(o, q)) < 1e-9);
      CHECK((project_to_surface(o, q) - q).norm() < 1e-9);
    }
  }
}

TEST_CASE("surface normals point outward") {
  Rng rng{7005};
  const ObjectModel shapes[] = {make_sphere(0.3), make_box(Vec3(0.1, 0.2, 0.15)),
                                make_cylinder(0.12, 0.2)};
  for (const ObjectModel& o : shapes) {
    for (int i = 0; i < 100; ++i) {
      Vec3 p = random_point(rng, 0.5);
      if (p.norm() < 0.05) continue;
      const Vec3 q = project_to_surface(o, p);
      const Vec3 n = surface_normal(o, q);
      CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-9));
      // Marching along the normal increases the distance.
      CHECK(signed_distance(o, q + 1e-4 * n) > signed_distance(o, q));
    }
  }
}

TEST_CASE("surface sampling is deterministic, on-surface and area weighted") {
  const ObjectModel s = make_sphere(0.25);
  const auto a = sample_surface(s, 500, 99);
  const auto b = sample_surface(s, 500, 99);
  const auto c = sample_surface(s, 500, 100);
  REQUIRE(a.size() == 500);
  bool same = true, diff = false;
  for (int i = 0; i < 500; ++i) {
    same = same && (a[i].position == b[i].position);
    diff = diff || (a[i].position != c[i].position);
  }
  CHECK(same);
  CHECK(diff);
  const double area = 4.0 * M_PI * 0.25 * 0.25;
  double wsum = 0.0;
  for (const auto& smp : a) {
    CHECK(std::abs(signed_distance(s, smp.position)) < 1e-9);
    CHECK(smp.normal.dot(sdf_gradient(s, smp.position)) == doctest::Approx(1.0).epsilon(1e-9));
    wsum += smp.weight;
  }
  CHECK(wsum == doctest::Approx(area).epsilon(1e-6));
}

TEST_CASE("mesh sdf tracks the analytic sphere") {
  auto mesh = std::make_shared<TriMesh>(make_icosphere(1.0, 3));
  const ObjectModel m = make_mesh_object(mesh);
  const ObjectModel s = make_sphere(1.0);
  Rng rng{7006};
  // Icosphere vertices sit on the sphere, faces sag inward by under 1e-2.
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = rng.unit_vec3() * rng.uniform(0.2, 1.6);
    CHECK(std::abs(signed_distance(m, p) - signed_distance(s, p)) < 1e-2);
  }
}

TEST_CASE("mesh sign agrees with the analytic sign") {
  auto mesh = std::make_shared<TriMesh>(make_icosphere(0.5, 2));
  const ObjectModel m = make_mesh_object(mesh);
  Rng rng{7007};
  int checked = 0;
  while (checked < 300) {
    const Vec3 p = random_point(rng, 0.5);
    const double exact = p.norm() - 0.5;
    if (std::abs(exact) < 0.02) continue;  // skip the chordal band
    CHECK((signed_distance(m, p) < 0) == (exact < 0));
    ++checked;
  }
}

TEST_CASE("intersection is exact for spheres") {
  const ObjectModel a = make_sphere(0.1);
  ObjectModel b = make_sphere(0.1);
  b.pose.translation() = Vec3(0.21, 0, 0);
  CHECK(!meshes_intersect(a, b));
  b.pose.translation() = Vec3(0.19, 0, 0);
  CHECK(meshes_intersect(a, b));
  b.pose.translation() = Vec3(0.0, 0.05, 0.0);
  CHECK(meshes_intersect(a, b));
}

TEST_CASE("intersection is exact for sphere against box") {
  const ObjectModel box = make_box(Vec3(0.1, 0.1, 0.1));
  ObjectModel s = make_sphere(0.05);
  s.pose.translation() = Vec3(0.16, 0, 0);
  CHECK(!meshes_intersect(box, s));
  CHECK(!meshes_intersect(s, box));
  s.pose.translation() = Vec3(0.14, 0, 0);
  CHECK(meshes_intersect(box, s));
  CHECK(meshes_intersect(s, box));
}

TEST_CASE("intersection handles rotated boxes") {
  const ObjectModel a = make_box(Vec3(0.1, 0.1, 0.1));
  // A 45-degree box whose corner reaches sqrt(2)*0.1 along x.
  const Pose rot = make_pose(
      Eigen::AngleAxisd(M_PI / 4, Vec3::UnitZ()).toRotationMatrix(), Vec3(0.23, 0, 0));
  ObjectModel b = make_box(Vec3(0.1, 0.1, 0.1), rot);
  CHECK(meshes_intersect(a, b));  // contact at 0.1 + 0.1*sqrt(2) = 0.2414
  b.pose.translation() = Vec3(0.25, 0, 0);
  CHECK(!meshes_intersect(a, b));
}

TEST_CASE("intersection of two meshes") {
  auto m = std::make_shared<TriMesh>(make_icosphere(0.1, 2));
  const ObjectModel a = make_mesh_object(m);
  ObjectModel b = make_mesh_object(m);
  b.pose.translation() = Vec3(0.25, 0, 0);
  CHECK(!meshes_intersect(a, b));
  b.pose.translation() = Vec3(0.15, 0, 0);
  CHECK(meshes_intersect(a, b));
  // Containment without surface crossing still counts as overlap.
  auto small = std::make_shared<TriMesh>(make_icosphere(0.02, 1));
  ObjectModel c = make_mesh_object(small);
  CHECK(meshes_intersect(a, c));
}

TEST_CASE("bounding radius and centroid") {
  CHECK(bounding_radius(make_sphere(0.3)) == doctest::Approx(0.3));
  CHECK(bounding_radius(make_box(Vec3(0.1, 0.2, 0.2))) ==
        doctest::Approx(Vec3(0.1, 0.2, 0.2).norm()));
  CHECK(bounding_radius(make_cylinder(0.1, 0.2)) ==
        doctest::Approx(std::sqrt(0.01 + 0.04)));
  ObjectModel s = make_sphere(0.1);
  s.pose.translation() = Vec3(1, 2, 3);
  CHECK((object_centroid(s) - Vec3(1, 2, 3)).norm() < 1e-12);
}
