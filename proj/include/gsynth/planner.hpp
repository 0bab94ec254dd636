#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsynth/geometry.hpp"

namespace gsynth {

struct PlannerParams {
  double sigma_pos = 0.005;  // m, per axis
  double sigma_rot = 0.1;    // rad
  int trials = 10;
};

// Compact repository entry: the hand base pose realizing the grasp on the
// scenario's target object, plus the hand links its contacts occupy.
struct RepoGrasp {
  std::string id;
  double energy = 0.0;
  Pose hand_pose = Pose::Identity();
  std::vector<int> contact_links;
};

// One pick-while-holding situation: an object already in the hand (at
// `in_hand`, hand frame), links the current grip occupies, a target object
// at its nominal world pose, and the grasp repository for the target sorted
// ascending by energy.
struct Scenario {
  std::string id;
  ObjectModel held;               // pose field ignored, world pose is derived
  Pose in_hand = Pose::Identity();
  std::vector<int> held_links;
  ObjectModel target;             // pose = nominal world pose
  std::vector<RepoGrasp> repository;
  std::string planned_id;

  const RepoGrasp& planned() const;
};

nlohmann::ordered_json scenarios_to_json(const std::vector<Scenario>& scenarios);
std::vector<Scenario> scenarios_from_json(const nlohmann::json& j);
std::vector<Scenario> load_scenarios(const std::string& path);
void save_scenarios(const std::string& path, const std::vector<Scenario>& scenarios);

// Solid intersection test; each object's own pose field composes with its
// world pose (effective pose = world * own). Delegates to meshes_intersect.
bool collision_check(const ObjectModel& held, const Pose& held_world,
                     const ObjectModel& target, const Pose& target_world);

// Held-object world pose while approaching with grasp g: the held object
// rides the hand at `in_hand_actual`.
Pose held_world_pose(const RepoGrasp& g, const Pose& in_hand_actual);

// Lowest-energy repository grasp that predicts no collision and whose
// contact links avoid the held grasp's links; nullptr when none qualifies.
const RepoGrasp* select_strategy(const Scenario& s, const Pose& in_hand_actual);

struct TrialStats {
  std::string scenario_id;
  bool adaptive = false;
  double collision_rate = 0.0;
  double success_rate = 0.0;
};

// Fixed-seed trial loop. The in-hand perturbation for (scenario, trial) is
// keyed independently of the mode, so adaptive and non-adaptive runs face
// identical noise. Non-adaptive executes the planned grasp and fails exactly
// on predicted collisions; adaptive re-selects and never executes into one.
std::vector<TrialStats> run_trials(const std::vector<Scenario>& scenarios,
                                   bool adaptive, const PlannerParams& p,
                                   std::uint64_t seed);

void write_stats_csv(const std::string& path, const std::vector<TrialStats>& rows);

// Deterministic synthetic suite: held sphere a few millimeters clear of the
// target along the planned approach at the nominal in-hand pose, plus a
// far-side fallback grasp that stays feasible under the default noise.
std::vector<Scenario> make_demo_suite(int count, std::uint64_t seed);

}  // namespace gsynth
