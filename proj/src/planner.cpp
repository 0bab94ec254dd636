#include "gsynth/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "gsynth/rng.hpp"

namespace gsynth {

namespace {

constexpr std::uint64_t kTagPerturb = 0x7e27;
constexpr std::uint64_t kTagSuite = 0x5ce9a;

nlohmann::ordered_json pose_to_json(const Pose& p) {
  const Quat q(p.linear());
  nlohmann::ordered_json j;
  j["translation"] = {p.translation().x(), p.translation().y(), p.translation().z()};
  j["rotation_wxyz"] = {q.w(), q.x(), q.y(), q.z()};
  return j;
}

Pose pose_from_json(const nlohmann::json& j) {
  const auto& t = j.at("translation");
  const auto& q = j.at("rotation_wxyz");
  if (!t.is_array() || t.size() != 3 || !q.is_array() || q.size() != 4)
    throw std::invalid_argument("scenario file: malformed pose");
  Quat quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
            q[3].get<double>());
  quat.normalize();
  return make_pose(quat.toRotationMatrix(),
                   Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
}

nlohmann::ordered_json object_to_json(const ObjectModel& o) {
  nlohmann::ordered_json j;
  j["id"] = o.id;
  switch (o.kind) {
    case ShapeKind::Sphere:
      j["shape"] = "sphere";
      j["radius"] = o.radius;
      break;
    case ShapeKind::Box:
      j["shape"] = "box";
      j["half_extents"] = {o.half_extents.x(), o.half_extents.y(),
                           o.half_extents.z()};
      break;
    case ShapeKind::Cylinder:
      j["shape"] = "cylinder";
      j["radius"] = o.radius;
      j["half_height"] = o.half_height;
      break;
    case ShapeKind::Mesh:
      throw std::invalid_argument("scenario file: mesh objects not supported");
  }
  j["pose"] = pose_to_json(o.pose);
  return j;
}

ObjectModel object_from_json(const nlohmann::json& j) {
  const std::string shape = j.at("shape").get<std::string>();
  ObjectModel o;
  if (shape == "sphere") {
    o = make_sphere(j.at("radius").get<double>());
  } else if (shape == "box") {
    const auto& h = j.at("half_extents");
    o = make_box(Vec3(h[0].get<double>(), h[1].get<double>(), h[2].get<double>()));
  } else if (shape == "cylinder") {
    o = make_cylinder(j.at("radius").get<double>(), j.at("half_height").get<double>());
  } else {
    throw std::invalid_argument("scenario file: unknown shape '" + shape + "'");
  }
  if (j.contains("pose")) o.pose = pose_from_json(j.at("pose"));
  o.id = j.value("id", std::string("object"));
  return o;
}

}  // namespace

const RepoGrasp& Scenario::planned() const {
  for (const RepoGrasp& g : repository)
    if (g.id == planned_id) return g;
  throw std::invalid_argument("scenario " + id + ": planned grasp '" + planned_id +
                              "' not in repository");
}

nlohmann::ordered_json scenarios_to_json(const std::vector<Scenario>& scenarios) {
  nlohmann::ordered_json j;
  j["type"] = "scenario_suite";
  j["scenarios"] = nlohmann::ordered_json::array();
  for (const Scenario& s : scenarios) {
    nlohmann::ordered_json sj;
    sj["id"] = s.id;
    sj["held_object"] = object_to_json(s.held);
    sj["in_hand"] = pose_to_json(s.in_hand);
    sj["held_links"] = s.held_links;
    sj["target_object"] = object_to_json(s.target);
    sj["repository"] = nlohmann::ordered_json::array();
    for (const RepoGrasp& g : s.repository) {
      nlohmann::ordered_json gj;
      gj["id"] = g.id;
      gj["energy"] = g.energy;
      gj["hand_pose"] = pose_to_json(g.hand_pose);
      gj["contact_links"] = g.contact_links;
      sj["repository"].push_back(gj);
    }
    sj["planned"] = s.planned_id;
    j["scenarios"].push_back(sj);
  }
  return j;
}

std::vector<Scenario> scenarios_from_json(const nlohmann::json& j) {
  if (j.value("type", std::string()) != "scenario_suite")
    throw std::invalid_argument("scenario file: missing type 'scenario_suite'");
  std::vector<Scenario> out;
  for (const auto& sj : j.at("scenarios")) {
    Scenario s;
    s.id = sj.at("id").get<std::string>();
    s.held = object_from_json(sj.at("held_object"));
    s.in_hand = pose_from_json(sj.at("in_hand"));
    s.held_links = sj.value("held_links", std::vector<int>());
    s.target = object_from_json(sj.at("target_object"));
    for (const auto& gj : sj.at("repository")) {
      RepoGrasp g;
      g.id = gj.at("id").get<std::string>();
      g.energy = gj.at("energy").get<double>();
      g.hand_pose = pose_from_json(gj.at("hand_pose"));
      g.contact_links = gj.value("contact_links", std::vector<int>());
      s.repository.push_back(g);
    }
    if (s.repository.empty())
      throw std::invalid_argument("scenario " + s.id + ": empty repository");
    for (std::size_t i = 1; i < s.repository.size(); ++i)
      if (s.repository[i].energy < s.repository[i - 1].energy)
        throw std::invalid_argument("scenario " + s.id +
                                    ": repository not sorted by energy");
    s.planned_id = sj.at("planned").get<std::string>();
    s.planned();  // validates the id
    out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("scenario file: no scenarios");
  return out;
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error&) {
    throw std::invalid_argument("scenario file is not valid JSON: " + path);
  }
  return scenarios_from_json(j);
}

void save_scenarios(const std::string& path, const std::vector<Scenario>& scenarios) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << scenarios_to_json(scenarios).dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool collision_check(const ObjectModel& held, const Pose& held_world,
                     const ObjectModel& target, const Pose& target_world) {
  ObjectModel a = held;
  a.pose = held_world * held.pose;
  ObjectModel b = target;
  b.pose = target_world * target.pose;
  return meshes_intersect(a, b);
}

Pose held_world_pose(const RepoGrasp& g, const Pose& in_hand_actual) {
  return g.hand_pose * in_hand_actual;
}

namespace {

bool links_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  for (int x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  return true;
}

bool predicts_collision(const Scenario& s, const RepoGrasp& g,
                        const Pose& in_hand_actual) {
  // The target's own pose already places it in the world.
  return collision_check(s.held, held_world_pose(g, in_hand_actual), s.target,
                         Pose::Identity());
}

Pose perturb_pose(const Pose& nominal, const PlannerParams& p, Rng& rng) {
  const Vec3 dt = p.sigma_pos * rng.normal_vec3();
  const Vec3 dw = p.sigma_rot * rng.normal_vec3();
  return make_pose(Mat3(so3_exp(dw) * nominal.linear()), nominal.translation() + dt);
}

}  // namespace

const RepoGrasp* select_strategy(const Scenario& s, const Pose& in_hand_actual) {
  for (const RepoGrasp& g : s.repository) {
    if (!links_disjoint(g.contact_links, s.held_links)) continue;
    if (predicts_collision(s, g, in_hand_actual)) continue;
    return &g;
  }
  return nullptr;
}

std::vector<TrialStats> run_trials(const std::vector<Scenario>& scenarios,
                                   bool adaptive, const PlannerParams& p,
                                   std::uint64_t seed) {
  if (scenarios.empty()) throw std::invalid_argument("planner: no scenarios");
  if (p.trials < 1) throw std::invalid_argument("planner: trials must be >= 1");
  if (p.sigma_pos < 0.0 || p.sigma_rot < 0.0)
    throw std::invalid_argument("planner: noise sigmas must be >= 0");

  std::vector<TrialStats> out;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    const Scenario& s = scenarios[si];
    const RepoGrasp& planned = s.planned();
    int collisions = 0, successes = 0;
    for (int t = 0; t < p.trials; ++t) {
      Rng rng{seed, std::uint64_t(si), std::uint64_t(t), kTagPerturb};
      const Pose actual = perturb_pose(s.in_hand, p, rng);
      if (adaptive) {
        if (select_strategy(s, actual) != nullptr) ++successes;
      } else {
        if (predicts_collision(s, planned, actual)) ++collisions;
        else ++successes;
      }
    }
    TrialStats st;
    st.scenario_id = s.id;
    st.adaptive = adaptive;
    st.collision_rate = double(collisions) / double(p.trials);
    st.success_rate = double(successes) / double(p.trials);
    out.push_back(st);
  }
  return out;
}

void write_stats_csv(const std::string& path, const std::vector<TrialStats>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "scenario_id,mode,collision_rate,success_rate\n";
  char buf[64];
  for (const TrialStats& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.collision_rate, r.success_rate);
    out << r.scenario_id << "," << (r.adaptive ? "adaptive" : "non_adaptive") << ","
        << buf << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Scenario> make_demo_suite(int count, std::uint64_t seed) {
  std::vector<Scenario> out;
  Rng rng{seed, kTagSuite};
  for (int si = 0; si < count; ++si) {
    Scenario s;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "s%03d", si);
    s.id = idbuf;

    const double held_r = rng.uniform(0.018, 0.028);
    s.held = make_sphere(held_r);
    s.held.id = "held_sphere";
    s.held_links = {0, 1, 2, 3};

    const Vec3 center(rng.uniform(0.2, 0.4), rng.uniform(-0.1, 0.1),
                      rng.uniform(0.05, 0.15));
    Vec3 approach;    // unit vector from the target center toward the hand
    double surf_dist; // target surface offset along the approach
    if (si % 3 == 0) {
      const Vec3 he(rng.uniform(0.02, 0.035), rng.uniform(0.02, 0.035),
                    rng.uniform(0.02, 0.035));
      s.target = make_box(he, make_pose(Mat3::Identity(), center));
      const int axis = int(rng.uniform_index(3));
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      approach = sign * Vec3::Unit(axis);
      surf_dist = he(axis);
      s.target.id = "target_box";
    } else {
      const double r = rng.uniform(0.025, 0.035);
      s.target = make_sphere(r, make_pose(Mat3::Identity(), center));
      approach = rng.unit_vec3();
      surf_dist = r;
      s.target.id = "target_sphere";
    }

    // Held-object center offset in the hand frame; +z approaches the target.
    const double in_hand_off = 0.05;
    s.in_hand = make_pose(Mat3::Identity(), Vec3(0, 0, in_hand_off));

    auto grasp_at = [&](const Vec3& dir, double center_dist, const char* id,
                        double energy, std::vector<int> links) {
      RepoGrasp g;
      g.id = id;
      g.energy = energy;
      g.contact_links = std::move(links);
      const Vec3 held_center = center + center_dist * dir;
      const Quat align = Quat::FromTwoVectors(Vec3::UnitZ(), Vec3(-dir));
      g.hand_pose = make_pose(align.toRotationMatrix(),
                              held_center + in_hand_off * dir);
      return g;
    };

    // Planned grasp: 3 to 6 mm of nominal clearance, tight under 5 mm noise.
    const double gap = rng.uniform(0.003, 0.006);
    const double near_dist = surf_dist + held_r + gap;
    s.repository.push_back(
        grasp_at(approach, near_dist, "g0", 0.10 + 0.001 * si, {6, 7, 8}));

    // Occasional mid-range alternative, still collision-prone under noise.
    // Clearance measured from the bounding radius: the side direction is not
    // face-aligned on boxes.
    if (si % 4 == 0) {
      const Vec3 side = approach.unitOrthogonal();
      s.repository.push_back(grasp_at(side, bounding_radius(s.target) + held_r + 0.008,
                                      "g1", 0.20 + 0.001 * si, {9, 10, 11}));
    }

    // Far-side fallback: ~5 cm of clearance, an order of magnitude above the
    // default noise.
    s.repository.push_back(grasp_at(-approach, surf_dist + held_r + 0.05, "gz",
                                    0.50 + 0.001 * si, {12, 13, 14}));
    s.planned_id = "g0";
    out.push_back(s);
  }
  return out;
}

}  // namespace gsynth
