#include <doctest.h>

#include <vector>

#include "gsynth/force_closure.hpp"
#include "gsynth/rng.hpp"

using namespace gsynth;

namespace {

// Antipodal pair on the unit sphere along x.
Mat3X antipodal_positions() {
  Mat3X x(3, 2);
  x.col(0) = Vec3(1, 0, 0);
  x.col(1) = Vec3(-1, 0, 0);
  return x;
}

// Equatorial tripod on the unit sphere, 120 degrees apart.
Mat3X tripod_positions() {
  Mat3X x(3, 3);
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * M_PI * k / 3.0;
    x.col(k) = Vec3(std::cos(a), std::sin(a), 0.0);
  }
  return x;
}

Mat3X inward_from_sphere(const Mat3X& x) {
  Mat3X c = x;
  for (int k = 0; k < c.cols(); ++k) c.col(k) = -x.col(k).normalized();
  return c;
}

}  // namespace

TEST_CASE("wrench basis layout") {
  Mat3X x(3, 2);
  x.col(0) = Vec3(1, 2, 3);
  x.col(1) = Vec3(-1, 0, 2);
  const auto G = wrench_basis(x);
  REQUIRE(G.rows() == 6);
  REQUIRE(G.cols() == 6);
  CHECK((G.topLeftCorner(3, 3) - Mat3::Identity()).norm() == 0.0);
  CHECK((G.topRightCorner(3, 3) - Mat3::Identity()).norm() == 0.0);
  CHECK((G.bottomLeftCorner(3, 3) - skew(x.col(0))).norm() == 0.0);
  CHECK((G.bottomRightCorner(3, 3) - skew(x.col(1))).norm() == 0.0);
}

TEST_CASE("translating all contacts leaves a zero-sum force map unchanged") {
  // When the c_i sum to zero the torque residual is translation invariant.
  Rng rng{7301};
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + int(rng.uniform_index(3));
    Mat3X x(3, n);
    MatX c(3 * n, 1);
    Vec3 sum = Vec3::Zero();
    for (int k = 0; k < n; ++k) {
      x.col(k) = rng.normal_vec3();
      Vec3 f = rng.normal_vec3();
      if (k == n - 1) f = -sum;  // force the zero sum
      sum += f;
      c.block<3, 1>(3 * k, 0) = f;
    }
    const Vec3 t = rng.normal_vec3();
    Mat3X xt = x;
    xt.colwise() += t;
    const VecX r0 = wrench_basis(x) * c;
    const VecX r1 = wrench_basis(xt) * c;
    CHECK((r0 - r1).norm() < 1e-12);
  }
}

TEST_CASE("jacobi eigensolver agrees with Eigen") {
  Rng rng{7302};
  for (int trial = 0; trial < 50; ++trial) {
    MatX a = MatX(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) a(i, j) = rng.normal();
    const Mat6 s = 0.5 * (a + a.transpose());
    Vec6 evals;
    Mat6 evecs;
    jacobi_eigen6(s, evals, evecs);
    Eigen::SelfAdjointEigenSolver<Mat6> ref(s);
    CHECK((evals - ref.eigenvalues()).norm() < 1e-10);
    // Ascending order and an orthonormal reconstruction.
    for (int i = 0; i + 1 < 6; ++i) CHECK(evals(i) <= evals(i + 1) + 1e-14);
    CHECK((evecs * evecs.transpose() - Mat6::Identity()).norm() < 1e-10);
    CHECK((evecs * evals.asDiagonal() * evecs.transpose() - s).norm() < 1e-9);
  }
}

TEST_CASE("friction cone membership is strict at the boundary") {
  const Vec3 c(0, 0, 1);
  const double mu = 0.5;
  CHECK(in_friction_cone(Vec3(0, 0, 1), c, mu));
  CHECK(in_friction_cone(Vec3(0.99 * mu, 0, 1), c, mu));
  CHECK(!in_friction_cone(Vec3(mu, 0, 1), c, mu));  // exactly on the boundary
  CHECK(!in_friction_cone(Vec3(2 * mu, 0, 1), c, mu));
  CHECK(!in_friction_cone(Vec3(0, 0, -1), c, mu));
  // Scale invariance.
  CHECK(in_friction_cone(Vec3(0.3 * mu, 0, 1) * 1e6, c, mu));
}

TEST_CASE("antipodal pair: zero wrench residual, zero smallest eigenvalue") {
  const ObjectModel sphere = make_sphere(1.0);
  const Mat3X x = antipodal_positions();
  FCParams p;
  const FCValue v = relaxed_fc(x, sphere, p);
  CHECK(v.gc_norm <= 1e-9);
  CHECK(v.lambda_min == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.sdf_term <= 1e-9);
  // Rectified eigenvalue shortfall is exactly epsilon.
  CHECK(v.eig_term == doctest::Approx(p.epsilon).epsilon(1e-9));
  CHECK(v.value == doctest::Approx(p.epsilon).epsilon(1e-9));

  const ConstraintsReport rep = relaxed_constraints_check(x, sphere, p);
  CHECK(!rep.eig_ok);
  CHECK(rep.gc_ok);
  CHECK(rep.surface_ok);
  CHECK(!rep.pass);
}

TEST_CASE("equatorial tripod: relaxed score vanishes") {
  const ObjectModel sphere = make_sphere(1.0);
  const Mat3X x = tripod_positions();
  FCParams p;
  const FCValue v = relaxed_fc(x, sphere, p);
  // GG^T is diag(3, 3, 3, 1.5, 1.5, 3) for this layout.
  CHECK(v.lambda_min == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(v.gc_norm <= 1e-9);
  CHECK(v.value <= 1e-9);

  const ConstraintsReport rep = relaxed_constraints_check(x, sphere, p);
  CHECK(rep.pass);

  SUBCASE("literal eigenvalue mode shifts by epsilon") {
    FCParams lit = p;
    lit.literal_eig = true;
    const FCValue vl = relaxed_fc(x, sphere, lit);
    CHECK(vl.eig_term == doctest::Approx(1.5 - p.epsilon).epsilon(1e-12));
  }
}

TEST_CASE("lifted contacts pay the surface term and fail the check") {
  const ObjectModel sphere = make_sphere(1.0);
  Mat3X x = tripod_positions() * 1.01;
  FCParams p;
  const FCValue v = relaxed_fc(x, sphere, p);
  CHECK(v.sdf_term == doctest::Approx(0.03).epsilon(1e-9));
  const ConstraintsReport rep = relaxed_constraints_check(x, sphere, p);
  CHECK(!rep.surface_ok);
  CHECK(!rep.pass);
  CHECK(rep.max_abs_sdf == doctest::Approx(0.01).epsilon(1e-9));
  // Contacts below the surface pay nothing in the score's surface term.
  Mat3X inner = tripod_positions() * 0.99;
  CHECK(relaxed_fc(inner, sphere, p).sdf_term == doctest::Approx(0.0));
}

TEST_CASE("score rides with the object pose") {
  Rng rng{7303};
  FCParams p;
  for (int trial = 0; trial < 10; ++trial) {
    const Pose T = make_pose(
        Eigen::AngleAxisd(rng.uniform(0, 3), rng.unit_vec3()).toRotationMatrix(),
        rng.normal_vec3() * 0.5);
    Mat3X x(3, 4);
    for (int k = 0; k < 4; ++k) x.col(k) = rng.unit_vec3() * rng.uniform(0.9, 1.1);
    const ObjectModel home = make_sphere(1.0);
    const ObjectModel away = make_sphere(1.0, T);
    Mat3X xt(3, 4);
    for (int k = 0; k < 4; ++k) xt.col(k) = T * x.col(k);
    const FCValue a = relaxed_fc(x, home, p);
    const FCValue b = relaxed_fc(xt, away, p);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    CHECK(a.lambda_min == doctest::Approx(b.lambda_min).epsilon(1e-9));
  }
}

TEST_CASE("collinear contact sets are rank deficient") {
  // Any collinear layout leaves the wrench span short of R^6, wherever the
  // line sits relative to the origin.
  const ObjectModel box = make_box(Vec3(0.5, 0.5, 0.5));
  Mat3X x(3, 3);
  x.col(0) = Vec3(-0.3, 0.2, 0.5);
  x.col(1) = Vec3(0.0, 0.2, 0.5);
  x.col(2) = Vec3(0.4, 0.2, 0.5);
  FCParams p;
  const FCValue v = relaxed_fc(x, box, p);
  CHECK(v.lambda_min <= 1e-9);
  CHECK(!relaxed_constraints_check(x, box, p).eig_ok);
}

TEST_CASE("oracle rejects the antipodal pair and accepts the tripod") {
  const ObjectModel sphere = make_sphere(1.0);
  OracleParams op;
  const Mat3X xa = antipodal_positions();
  CHECK(!oracle_force_closure(xa, inward_from_sphere(xa), op));
  const Mat3X xt = tripod_positions();
  CHECK(oracle_force_closure(xt, inward_from_sphere(xt), op));
}

TEST_CASE("oracle edge cases") {
  OracleParams op;
  Mat3X one(3, 1);
  one.col(0) = Vec3(1, 0, 0);
  Mat3X n1 = -one;
  CHECK(!oracle_force_closure(one, n1, op));  // a single contact never closes

  // A tripod lifted off the surface keeps its cone geometry, so the oracle
  // still accepts; surface validity is the constraint check's job.
  const Mat3X xt = tripod_positions() * 1.05;
  Mat3X nt = tripod_positions();
  for (int k = 0; k < 3; ++k) nt.col(k) = -nt.col(k).normalized();
  CHECK(oracle_force_closure(xt, nt, op));

  OracleParams bad = op;
  bad.cone_facets = 3;
  CHECK_THROWS_AS(oracle_force_closure(xt, nt, bad), std::invalid_argument);
  bad = op;
  bad.directions = 10;
  CHECK_THROWS_AS(oracle_force_closure(xt, nt, bad), std::invalid_argument);
}

TEST_CASE("oracle pass implies the eigenvalue floor on unit-scale sets") {
  // Random contact sets on a unit sphere and a unit-ish box; whenever the
  // sampled-cone certificate passes at the default margin, the smallest
  // GG^T eigenvalue clears the default floor.
  Rng rng{7304};
  const ObjectModel shapes[] = {make_sphere(1.0), make_box(Vec3(0.8, 0.9, 1.0))};
  OracleParams op;
  FCParams fp;
  int oracle_passes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const ObjectModel& o = shapes[trial % 2];
    const int n = 3 + int(rng.uniform_index(3));
    Mat3X x(3, n);
    Mat3X c(3, n);
    for (int k = 0; k < n; ++k) {
      x.col(k) = project_to_surface(o, rng.unit_vec3() * 1.5);
      c.col(k) = -sdf_gradient(o, x.col(k));
    }
    if (oracle_force_closure(x, c, op)) {
      ++oracle_passes;
      const FCValue v = relaxed_fc(x, o, fp);
      CHECK(v.lambda_min >= fp.epsilon);
    }
  }
  CHECK(oracle_passes > 10);  // the comparison must actually get exercised
}

TEST_CASE("score gradient matches finite differences") {
  Rng rng{7305};
  const ObjectModel sphere = make_sphere(1.0);
  FCParams p;
  const double h = 1e-5;
  int tested = 0;
  while (tested < 40) {
    const int n = 3 + int(rng.uniform_index(2));
    Mat3X x(3, n);
    for (int k = 0; k < n; ++k) x.col(k) = rng.unit_vec3() * rng.uniform(0.9, 1.2);

    Mat3X grad(3, n);
    const FCValue v = relaxed_fc_grad(x, sphere, p, grad);

    // Keep away from the one-sided branches: eigenvalue crossing at epsilon,
    // eigenvalue repeats, the surface kink, and a vanishing residual.
    Vec6 evals;
    Mat6 evecs;
    jacobi_eigen6(wrench_basis(x) * wrench_basis(x).transpose(), evals, evecs);
    if (std::abs(evals(0) - p.epsilon) < 1e-3) continue;
    if (evals(1) - evals(0) < 1e-3) continue;
    if (v.gc_norm < 1e-3) continue;
    bool near_surface = false;
    for (int k = 0; k < n; ++k)
      if (std::abs(signed_distance(sphere, x.col(k))) < 10 * h) near_surface = true;
    if (near_surface) continue;

    double max_rel = 0.0;
    for (int k = 0; k < n; ++k) {
      for (int d = 0; d < 3; ++d) {
        Mat3X xp = x, xm = x;
        xp(d, k) += h;
        xm(d, k) -= h;
        const double fd =
            (relaxed_fc(xp, sphere, p).value - relaxed_fc(xm, sphere, p).value) / (2 * h);
        const double denom = std::max(std::abs(fd), 1e-6);
        max_rel = std::max(max_rel, std::abs(grad(d, k) - fd) / denom);
      }
    }
    CHECK(max_rel < 1e-3);
    ++tested;
  }
}

TEST_CASE("contact set bookkeeping") {
  CHECK_THROWS_AS(make_contact_set({5}), std::invalid_argument);
  CHECK_THROWS_AS(make_contact_set({1, 2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(make_contact_set({1, 2, 3, 4, 5, 6, 7, 8, 9}), std::invalid_argument);
  ContactSet cs = make_contact_set({3, 1, 4});
  CHECK(cs.size() == 3);

  const HandModel hand = builtin_hand("ftac15");
  HandPose pose;
  pose.q = VecX::Zero(15);
  pose.base.translation() = Vec3(0, 0, 0.2);
  const SurfaceCloud cloud = hand_surface(hand, pose);
  const ObjectModel sphere = make_sphere(0.05);
  refresh_contacts(cs, cloud, sphere);
  for (int k = 0; k < 3; ++k) {
    CHECK((cs.positions.col(k) - cloud.positions.col(cs.cloud_index[k])).norm() == 0.0);
    const Vec3 want = -sdf_gradient(sphere, cs.positions.col(k));
    CHECK((cs.inward_normals.col(k) - want).norm() < 1e-12);
  }
}
