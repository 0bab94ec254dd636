#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gsynth/planner.hpp"

using namespace gsynth;

namespace {

// A hand-built scenario: target sphere at the origin, held sphere riding the
// hand, three repository grasps approaching from +x (planned), -x and +y.
Scenario tiny_scenario() {
  Scenario s;
  s.id = "tiny";
  s.held = make_sphere(0.02);
  s.held.id = "held";
  s.in_hand = make_pose(Mat3::Identity(), Vec3(0, 0, 0.05));
  s.held_links = {0, 1};
  s.target = make_sphere(0.03);
  s.target.id = "target";

  auto approach = [](const Vec3& dir, const std::string& id, double energy,
                     double gap, std::vector<int> links) {
    RepoGrasp g;
    g.id = id;
    g.energy = energy;
    // Place the hand so the held object (0.05 along the hand z) ends up
    // `gap` clear of the target along `dir`.
    const Vec3 carried = dir * (0.03 + 0.02 + gap);
    const Quat R = Quat::FromTwoVectors(Vec3::UnitZ(), -dir);
    g.hand_pose = make_pose(R.toRotationMatrix(),
                            carried - R.toRotationMatrix() * Vec3(0, 0, 0.05));
    g.contact_links = std::move(links);
    return g;
  };
  // Graded clearances: a 6 mm bulge kills g0 but leaves g1 and g2 viable.
  s.repository.push_back(approach(Vec3::UnitX(), "g0", 1.0, 0.004, {4, 5}));
  s.repository.push_back(approach(-Vec3::UnitX(), "g1", 2.0, 0.010, {6, 7}));
  s.repository.push_back(approach(Vec3::UnitY(), "g2", 3.0, 0.020, {8, 9}));
  s.planned_id = "g0";
  return s;
}

}  // namespace

TEST_CASE("collision check with world poses") {
  const ObjectModel a = make_sphere(0.03);
  const ObjectModel b = make_sphere(0.03);
  Pose pa = Pose::Identity();
  Pose pb = Pose::Identity();
  pb.translation() = Vec3(1.0, 0, 0);
  CHECK(!collision_check(a, pa, b, pb));
  pb.translation() = Vec3(0.05, 0, 0);
  CHECK(collision_check(a, pa, b, pb));
  // The objects' own pose fields compose with the world poses.
  ObjectModel shifted = make_sphere(0.03);
  shifted.pose.translation() = Vec3(0.95, 0, 0);
  pb.translation() = Vec3(1.0, 0, 0);
  CHECK(collision_check(shifted, Pose::Identity(), b, pb));
}

TEST_CASE("held object rides the hand pose") {
  const RepoGrasp g = tiny_scenario().repository[0];
  const Pose in_hand = make_pose(Mat3::Identity(), Vec3(0, 0, 0.05));
  const Pose world = held_world_pose(g, in_hand);
  const Vec3 want = Vec3::UnitX() * (0.03 + 0.02 + 0.004);
  CHECK((world.translation() - want).norm() < 1e-12);
}

TEST_CASE("strategy selection prefers energy and respects exclusions") {
  const Scenario s = tiny_scenario();

  SUBCASE("nominal in-hand pose: the planned grasp is feasible and chosen") {
    const RepoGrasp* pick = select_strategy(s, s.in_hand);
    REQUIRE(pick != nullptr);
    CHECK(pick->id == "g0");
  }
  SUBCASE("a bulged in-hand offset knocks out the planned grasp") {
    // Push the held object 6 mm toward the target along the hand z.
    const Pose bulged = make_pose(Mat3::Identity(), Vec3(0, 0, 0.056));
    const RepoGrasp* pick = select_strategy(s, bulged);
    REQUIRE(pick != nullptr);
    CHECK(pick->id != "g0");
  }
  SUBCASE("link overlap disqualifies a grasp") {
    Scenario t = s;
    t.held_links = {4};  // clashes with g0's contact links
    const RepoGrasp* pick = select_strategy(t, t.in_hand);
    REQUIRE(pick != nullptr);
    CHECK(pick->id == "g1");
  }
  SUBCASE("nothing feasible yields null") {
    Scenario t = s;
    t.held_links = {4, 6, 8};  // hits every repository grasp
    CHECK(select_strategy(t, t.in_hand) == nullptr);
  }
}

TEST_CASE("zero noise trials are exact") {
  const std::vector<Scenario> suite = make_demo_suite(12, 0);
  PlannerParams p;
  p.sigma_pos = 0.0;
  p.sigma_rot = 0.0;
  p.trials = 10;
  for (bool adaptive : {false, true}) {
    const auto stats = run_trials(suite, adaptive, p, 0);
    REQUIRE(stats.size() == suite.size());
    for (const TrialStats& st : stats) {
      CHECK(st.collision_rate == 0.0);
      CHECK(st.success_rate == 1.0);
      CHECK(st.adaptive == adaptive);
    }
  }
}

TEST_CASE("non-adaptive success mirrors the collision rate") {
  const std::vector<Scenario> suite = make_demo_suite(15, 3);
  PlannerParams p;  // default noise
  const auto stats = run_trials(suite, false, p, 7);
  for (const TrialStats& st : stats)
    CHECK(st.success_rate == doctest::Approx(1.0 - st.collision_rate).epsilon(1e-12));
}

TEST_CASE("adaptive replanning dominates scenario by scenario") {
  const std::vector<Scenario> suite = make_demo_suite(20, 1);
  PlannerParams p;
  const auto fixed = run_trials(suite, false, p, 5);
  const auto adaptive = run_trials(suite, true, p, 5);
  REQUIRE(fixed.size() == adaptive.size());
  bool noise_did_something = false;
  for (size_t i = 0; i < fixed.size(); ++i) {
    CHECK(adaptive[i].success_rate >= fixed[i].success_rate - 1e-12);
    CHECK(adaptive[i].collision_rate <= fixed[i].collision_rate + 1e-12);
    if (fixed[i].collision_rate > 0.0) noise_did_something = true;
  }
  CHECK(noise_did_something);  // the default noise must actually bite
}

TEST_CASE("trial loop is deterministic in the seed") {
  const std::vector<Scenario> suite = make_demo_suite(6, 2);
  PlannerParams p;
  const auto a = run_trials(suite, true, p, 11);
  const auto b = run_trials(suite, true, p, 11);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].collision_rate == b[i].collision_rate);
    CHECK(a[i].success_rate == b[i].success_rate);
  }
}

TEST_CASE("scenario suites round-trip through json") {
  const std::vector<Scenario> suite = make_demo_suite(5, 9);
  const std::string path = "/tmp/gsynth_test_suite.json";
  save_scenarios(path, suite);
  const std::vector<Scenario> back = load_scenarios(path);
  // Rotations pass through a quaternion-matrix conversion, so compare
  // numerically; everything discrete must survive exactly.
  REQUIRE(back.size() == suite.size());
  for (size_t i = 0; i < suite.size(); ++i) {
    const Scenario& a = suite[i];
    const Scenario& b = back[i];
    CHECK(b.id == a.id);
    CHECK(b.held.id == a.held.id);
    CHECK(b.held_links == a.held_links);
    CHECK(b.target.id == a.target.id);
    CHECK(b.planned_id == a.planned_id);
    CHECK((b.in_hand.matrix() - a.in_hand.matrix()).norm() < 1e-12);
    CHECK((b.target.pose.matrix() - a.target.pose.matrix()).norm() < 1e-12);
    REQUIRE(b.repository.size() == a.repository.size());
    for (size_t g = 0; g < a.repository.size(); ++g) {
      CHECK(b.repository[g].id == a.repository[g].id);
      CHECK(b.repository[g].energy == a.repository[g].energy);
      CHECK(b.repository[g].contact_links == a.repository[g].contact_links);
      CHECK((b.repository[g].hand_pose.matrix() -
             a.repository[g].hand_pose.matrix()).norm() < 1e-12);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("scenario validation names the offender") {
  auto j = scenarios_to_json(make_demo_suite(2, 0));

  SUBCASE("unsorted repository") {
    auto bad = j;
    auto& repo = bad["scenarios"][0]["repository"];
    REQUIRE(repo.size() >= 2);
    repo[0]["energy"] = 100.0;
    CHECK_THROWS_WITH_AS(scenarios_from_json(bad),
                         doctest::Contains("not sorted by energy"),
                         std::invalid_argument);
  }
  SUBCASE("unknown planned id") {
    auto bad = j;
    bad["scenarios"][1]["planned"] = "nope";
    try {
      scenarios_from_json(bad);
      FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("nope") != std::string::npos);
    }
  }
  SUBCASE("empty repository") {
    auto bad = j;
    bad["scenarios"][0]["repository"] = nlohmann::json::array();
    CHECK_THROWS_WITH_AS(scenarios_from_json(bad), doctest::Contains("repository"),
                         std::invalid_argument);
  }
  SUBCASE("wrong document type") {
    CHECK_THROWS_WITH_AS(scenarios_from_json(nlohmann::json{{"type", "grasps"}}),
                         doctest::Contains("scenario_suite"), std::invalid_argument);
  }
}

TEST_CASE("stats csv layout") {
  const std::string path = "/tmp/gsynth_test_stats.csv";
  std::vector<TrialStats> rows(2);
  rows[0] = {"s00", false, 0.25, 0.75};
  rows[1] = {"s00", true, 0.0, 1.0};
  write_stats_csv(path, rows);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "scenario_id,mode,collision_rate,success_rate");
  std::getline(in, line);
  CHECK(line == "s00,non_adaptive,0.250000,0.750000");
  std::getline(in, line);
  CHECK(line == "s00,adaptive,0.000000,1.000000");
  std::remove(path.c_str());
}

TEST_CASE("demo suite construction invariants") {
  const std::vector<Scenario> suite = make_demo_suite(30, 0);
  REQUIRE(int(suite.size()) == 30);
  for (const Scenario& s : suite) {
    CHECK(!s.repository.empty());
    // Planned approach is collision free at the nominal in-hand pose. The
    // target's own pose places it, so its world pose is identity.
    const Pose world = held_world_pose(s.planned(), s.in_hand);
    CHECK(!collision_check(s.held, world, s.target, Pose::Identity()));
    // Sorted ascending by energy.
    for (size_t i = 1; i < s.repository.size(); ++i)
      CHECK(s.repository[i].energy >= s.repository[i - 1].energy);
    // Held links never appear among any repository grasp's contact links.
    for (const RepoGrasp& g : s.repository)
      for (int l : g.contact_links)
        CHECK(std::find(s.held_links.begin(), s.held_links.end(), l) ==
              s.held_links.end());
  }
}
