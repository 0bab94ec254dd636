#include "gsynth/hand.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gsynth {

using nlohmann::json;

int HandModel::dof() const {
  int n = 0;
  for (const HandChain& c : chains) n += int(c.rows.size());
  return n;
}

int HandModel::num_links() const { return 1 + dof(); }

int HandModel::joint_index(int chain, int row) const {
  int n = 0;
  for (int c = 0; c < chain; ++c) n += int(chains[c].rows.size());
  return n + row;
}

namespace {

constexpr double kGolden = 2.39996322972865332;  // golden angle, rad

// Deterministic orthonormal frame around a unit axis.
void axis_frame(const Vec3& u, Vec3& e1, Vec3& e2) {
  int k;
  u.cwiseAbs().minCoeff(&k);
  e1 = u.cross(Vec3::Unit(k)).normalized();
  e2 = u.cross(e1);
}

struct CapsuleRef {
  int link;
  const Capsule* cap;
  double area;
};

double capsule_area(const Capsule& c) {
  const double len = (c.p1 - c.p0).norm();
  return 2.0 * M_PI * c.radius * len + 4.0 * M_PI * c.radius * c.radius;
}

// Lattice points on one capsule: helical band on the side, spherical
// Fibonacci on each hemispherical cap.
void emit_capsule_points(const Capsule& c, int link, int count,
                         std::vector<HandCloudPoint>& out) {
  if (count <= 0) return;
  const Vec3 d = c.p1 - c.p0;
  const double len = d.norm();
  const Vec3 u = (len > 1e-12) ? Vec3(d / len) : Vec3::UnitX();
  Vec3 e1, e2;
  axis_frame(u, e1, e2);
  const double a_side = 2.0 * M_PI * c.radius * len;
  const double a_caps = 4.0 * M_PI * c.radius * c.radius;
  int n_side = int(std::lround(count * a_side / (a_side + a_caps)));
  n_side = std::min(n_side, count);
  const int n_caps = count - n_side;
  const int n_cap1 = n_caps / 2;
  const int n_cap0 = n_caps - n_cap1;

  for (int k = 0; k < n_side; ++k) {
    const double z = (k + 0.5) / n_side * len;
    const double phi = kGolden * k;
    const Vec3 n = std::cos(phi) * e1 + std::sin(phi) * e2;
    out.push_back({link, c.p0 + z * u + c.radius * n, n});
  }
  auto emit_cap = [&](const Vec3& center, const Vec3& pole, int n_cap, int salt) {
    for (int k = 0; k < n_cap; ++k) {
      const double h = (k + 0.5) / n_cap;  // height fraction toward the pole
      const double s = std::sqrt(std::max(0.0, 1.0 - h * h));
      const double phi = kGolden * (k + salt);
      const Vec3 dir =
          h * pole + s * (std::cos(phi) * e1 + std::sin(phi) * e2);
      out.push_back({link, center + c.radius * dir, dir});
    }
  };
  emit_cap(c.p0, -u, n_cap0, 0);
  emit_cap(c.p1, u, n_cap1, 1);
}

void finalize_hand(HandModel& h) {
  // Flatten joint limits.
  const int J = h.dof();
  h.joint_lower.resize(J);
  h.joint_upper.resize(J);
  int j = 0;
  for (const HandChain& c : h.chains)
    for (const Vec2& lim : c.joint_limits) {
      h.joint_lower(j) = lim(0);
      h.joint_upper(j) = lim(1);
      ++j;
    }

  // Gather capsules with owning links.
  std::vector<CapsuleRef> caps;
  for (const Capsule& c : h.palm_capsules) caps.push_back({0, &c, capsule_area(c)});
  int link = 1;
  for (const HandChain& chain : h.chains)
    for (const auto& per_link : chain.link_capsules) {
      for (const Capsule& c : per_link) caps.push_back({link, &c, capsule_area(c)});
      ++link;
    }
  if (caps.empty())
    throw std::invalid_argument("hand spec: no capsules to sample");

  // Largest-remainder apportionment to hit surface_samples exactly.
  const double total_area =
      std::accumulate(caps.begin(), caps.end(), 0.0,
                      [](double s, const CapsuleRef& c) { return s + c.area; });
  std::vector<int> n(caps.size());
  std::vector<std::pair<double, int>> rem(caps.size());
  int assigned = 0;
  for (size_t i = 0; i < caps.size(); ++i) {
    const double quota = h.surface_samples * caps[i].area / total_area;
    n[i] = int(quota);
    assigned += n[i];
    rem[i] = {quota - n[i], int(i)};
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (int k = 0; k < h.surface_samples - assigned; ++k)
    ++n[rem[k % rem.size()].second];

  h.canonical_cloud.clear();
  h.canonical_cloud.reserve(h.surface_samples);
  for (size_t i = 0; i < caps.size(); ++i)
    emit_capsule_points(*caps[i].cap, caps[i].link, n[i], h.canonical_cloud);

  HandPose zero;
  zero.q = VecX::Zero(J);
  const HandKinematics kin = forward_kinematics(h, zero);
  h.reach = 0.0;
  for (const HandCloudPoint& p : h.canonical_cloud)
    h.reach = std::max(h.reach, (kin.link_pose[p.link] * p.position).norm());
}

// --- JSON schema helpers ---------------------------------------------------

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument("hand spec: " + where + ": " + what);
}

const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    fail(where + "." + key, "missing required key");
  return obj.at(key);
}

Vec3 parse_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) fail(where, "expected an array of 3 numbers");
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

Pose parse_transform(const json& v, const std::string& where) {
  Pose T = Pose::Identity();
  if (v.contains("translation"))
    T.translation() = parse_vec3(v.at("translation"), where + ".translation");
  if (v.contains("rpy")) {
    const Vec3 rpy = parse_vec3(v.at("rpy"), where + ".rpy");
    T.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                  Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                     .toRotationMatrix();
  }
  return T;
}

Capsule parse_capsule(const json& v, const std::string& where) {
  Capsule c;
  c.p0 = parse_vec3(need(v, "p0", where), where + ".p0");
  c.p1 = parse_vec3(need(v, "p1", where), where + ".p1");
  c.radius = need(v, "radius", where).get<double>();
  if (!(c.radius > 0.0)) fail(where + ".radius", "must be positive");
  return c;
}

}  // namespace

HandModel load_hand_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("hand spec: invalid JSON: ") + e.what());
  }

  HandModel h;
  h.name = need(doc, "name", "spec").get<std::string>();
  h.base_offset = parse_transform(need(doc, "base_offset", "spec"), "base_offset");
  if (doc.contains("surface_samples")) {
    h.surface_samples = doc.at("surface_samples").get<int>();
    if (h.surface_samples <= 0) fail("surface_samples", "must be positive");
  }
  if (doc.contains("palm_capsules")) {
    const json& pc = doc.at("palm_capsules");
    for (size_t i = 0; i < pc.size(); ++i)
      h.palm_capsules.push_back(
          parse_capsule(pc[i], "palm_capsules[" + std::to_string(i) + "]"));
  }

  const json& chains = need(doc, "chains", "spec");
  if (!chains.is_array() || chains.empty()) fail("chains", "must be a non-empty array");
  for (size_t ci = 0; ci < chains.size(); ++ci) {
    const std::string where = "chains[" + std::to_string(ci) + "]";
    const json& jc = chains[ci];
    HandChain chain;
    if (jc.contains("name")) chain.name = jc.at("name").get<std::string>();
    if (jc.contains("root")) chain.root = parse_transform(jc.at("root"), where + ".root");

    const json& rows = need(jc, "dh_rows", where);
    if (!rows.is_array() || rows.empty())
      fail(where + ".dh_rows", "must be a non-empty array");
    for (size_t r = 0; r < rows.size(); ++r) {
      const json& jr = rows[r];
      if (!jr.is_array() || jr.size() != 4)
        fail(where + ".dh_rows[" + std::to_string(r) + "]",
             "expected [a, alpha, d, theta_offset]");
      DhRow row;
      row.a = jr[0].get<double>();
      row.alpha = jr[1].get<double>();
      row.d = jr[2].get<double>();
      row.theta_offset = jr[3].get<double>();
      chain.rows.push_back(row);
    }
    if (jc.contains("joint_types")) {
      const json& jt = jc.at("joint_types");
      if (jt.size() != chain.rows.size())
        fail(where + ".joint_types", "length must match dh_rows");
      for (size_t r = 0; r < jt.size(); ++r) {
        const std::string t = jt[r].get<std::string>();
        if (t == "prismatic")
          chain.rows[r].prismatic = true;
        else if (t != "revolute")
          fail(where + ".joint_types[" + std::to_string(r) + "]",
               "expected \"revolute\" or \"prismatic\"");
      }
    }

    const json& lims = need(jc, "joint_limits_rad", where);
    if (lims.size() != chain.rows.size())
      fail(where + ".joint_limits_rad", "length must match dh_rows");
    for (size_t r = 0; r < lims.size(); ++r) {
      const json& jl = lims[r];
      if (!jl.is_array() || jl.size() != 2)
        fail(where + ".joint_limits_rad[" + std::to_string(r) + "]",
             "expected [lo, hi]");
      const double lo = jl[0].get<double>(), hi = jl[1].get<double>();
      if (!(lo < hi))
        fail(where + ".joint_limits_rad[" + std::to_string(r) + "]",
             "inverted joint limits");
      chain.joint_limits.emplace_back(lo, hi);
    }

    const json& lc = need(jc, "link_capsules", where);
    if (lc.size() != chain.rows.size())
      fail(where + ".link_capsules", "length must match dh_rows");
    for (size_t r = 0; r < lc.size(); ++r) {
      std::vector<Capsule> caps;
      for (size_t k = 0; k < lc[r].size(); ++k)
        caps.push_back(parse_capsule(
            lc[r][k], where + ".link_capsules[" + std::to_string(r) + "][" +
                          std::to_string(k) + "]"));
      chain.link_capsules.push_back(std::move(caps));
    }
    h.chains.push_back(std::move(chain));
  }

  finalize_hand(h);
  return h;
}

HandModel load_hand_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hand spec: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_hand_spec(ss.str());
}

namespace {

// 15-DoF five-finger hand. Zero pose: fingers flat along +x, palm facing +z;
// positive joint angles curl toward +z. Middle fingertip sits at x = 0.194
// exactly (0.095 palm + 0.045 + 0.028 + 0.026 finger segments).
const char* kFtac15 = R"JSON({
  "name": "ftac15",
  "base_offset": {},
  "surface_samples": 2170,
  "palm_capsules": [
    {"p0": [0.005, -0.025, -0.004], "p1": [0.092, -0.025, -0.004], "radius": 0.012},
    {"p0": [0.005,  0.000, -0.004], "p1": [0.092,  0.000, -0.004], "radius": 0.012},
    {"p0": [0.005,  0.025, -0.004], "p1": [0.092,  0.025, -0.004], "radius": 0.012}
  ],
  "chains": [
    {
      "name": "thumb",
      "root": {"translation": [0.025, 0.045, 0.0], "rpy": [1.5707963267948966, 0.0, 1.2217304763960306]},
      "dh_rows": [[0,0,0,-0.3490658503988659],[0.046,0,0,0],[0.032,0,0,0]],
      "joint_limits_rad": [[0,1.5707963267948966],[0,1.5707963267948966],[0,1.5707963267948966]],
      "link_capsules": [
        [{"p0": [0,0,0], "p1": [0.046,0,0], "radius": 0.010}],
        [{"p0": [0,0,0], "p1": [0.032,0,0], "radius": 0.009}],
        [{"p0": [0,0,0], "p1": [0.028,0,0], "radius": 0.0085}]
      ]
    },
    {
      "name": "index",
      "root": {"translation": [0.095, 0.027, 0.0], "rpy": [1.5707963267948966, 0.0, 0.0]},
      "dh_rows": [[0,0,0,0],[0.042,0,0,0],[0.025,0,0,0]],
      "joint_limits_rad": [[0,1.5707963267948966],[0,1.5707963267948966],[0,1.5707963267948966]],
      "link_capsules": [
        [{"p0": [0,0,0], "p1": [0.042,0,0], "radius": 0.009}],
        [{"p0": [0,0,0], "p1": [0.025,0,0], "radius": 0.0085}],
        [{"p0": [0,0,0], "p1": [0.022,0,0], "radius": 0.008}]
      ]
    },
    {
      "name": "middle",
      "root": {"translation": [0.095, 0.009, 0.0], "rpy": [1.5707963267948966, 0.0, 0.0]},
      "dh_rows": [[0,0,0,0],[0.045,0,0,0],[0.028,0,0,0]],
      "joint_limits_rad": [[0,1.5707963267948966],[0,1.5707963267948966],[0,1.5707963267948966]],
      "link_capsules": [
        [{"p0": [0,0,0], "p1": [0.045,0,0], "radius": 0.009}],
        [{"p0": [0,0,0], "p1": [0.028,0,0], "radius": 0.0085}],
        [{"p0": [0,0,0], "p1": [0.026,0,0], "radius": 0.008}]
      ]
    },
    {
      "name": "ring",
      "root": {"translation": [0.095, -0.009, 0.0], "rpy": [1.5707963267948966, 0.0, 0.0]},
      "dh_rows": [[0,0,0,0],[0.043,0,0,0],[0.026,0,0,0]],
      "joint_limits_rad": [[0,1.5707963267948966],[0,1.5707963267948966],[0,1.5707963267948966]],
      "link_capsules": [
        [{"p0": [0,0,0], "p1": [0.043,0,0], "radius": 0.009}],
        [{"p0": [0,0,0], "p1": [0.026,0,0], "radius": 0.0085}],
        [{"p0": [0,0,0], "p1": [0.023,0,0], "radius": 0.008}]
      ]
    },
    {
      "name": "little",
      "root": {"translation": [0.095, -0.027, 0.0], "rpy": [1.5707963267948966, 0.0, 0.0]},
      "dh_rows": [[0,0,0,0],[0.035,0,0,0],[0.021,0,0,0]],
      "joint_limits_rad": [[0,1.5707963267948966],[0,1.5707963267948966],[0,1.5707963267948966]],
      "link_capsules": [
        [{"p0": [0,0,0], "p1": [0.035,0,0], "radius": 0.0085}],
        [{"p0": [0,0,0], "p1": [0.021,0,0], "radius": 0.008}],
        [{"p0": [0,0,0], "p1": [0.019,0,0], "radius": 0.0075}]
      ]
    }
  ]
})JSON";

// Single prismatic jaw opposite a fixed jaw. Zero pose: jaws 10 mm apart,
// opening along +x, reaching forward along +z; q widens the gap 1:1.
const char* kGripper1 = R"JSON({
  "name": "gripper1",
  "base_offset": {},
  "surface_samples": 600,
  "palm_capsules": [
    {"p0": [-0.04, 0, 0], "p1": [0.04, 0, 0], "radius": 0.012},
    {"p0": [-0.013, 0, 0.02], "p1": [-0.013, 0, 0.10], "radius": 0.008}
  ],
  "chains": [
    {
      "name": "jaw",
      "root": {"translation": [0.013, 0, 0], "rpy": [0.0, 1.5707963267948966, 0.0]},
      "dh_rows": [[0,0,0,0]],
      "joint_types": ["prismatic"],
      "joint_limits_rad": [[0, 0.09]],
      "link_capsules": [
        [{"p0": [-0.02,0,0], "p1": [-0.10,0,0], "radius": 0.008}]
      ]
    }
  ]
})JSON";

}  // namespace

std::string builtin_hand_spec_json(const std::string& name) {
  if (name == "ftac15") return kFtac15;
  if (name == "gripper1") return kGripper1;
  throw std::invalid_argument("unknown built-in hand: " + name);
}

HandModel builtin_hand(const std::string& name) {
  return load_hand_spec(builtin_hand_spec_json(name));
}

HandKinematics forward_kinematics(const HandModel& hand, const HandPose& pose) {
  if (pose.q.size() != hand.dof())
    throw std::invalid_argument("forward_kinematics: joint vector length mismatch");
  HandKinematics kin;
  const int L = hand.num_links();
  kin.link_pose.reserve(L);
  kin.link_chain.reserve(L);
  const Pose palm = pose.base * hand.base_offset;
  kin.link_pose.push_back(palm);
  kin.link_chain.push_back(-1);

  int j = 0;
  for (size_t ci = 0; ci < hand.chains.size(); ++ci) {
    const HandChain& chain = hand.chains[ci];
    Pose T = palm * chain.root;
    for (const DhRow& row : chain.rows) {
      // Modified DH: RotX(alpha) TransX(a) RotZ(theta) TransZ(d), with the
      // joint variable entering theta or d.
      T = T * Eigen::AngleAxisd(row.alpha, Vec3::UnitX());
      T.translation() += T.linear() * Vec3(row.a, 0, 0);
      kin.joint_axis.push_back(T.linear().col(2));
      kin.joint_origin.push_back(T.translation());
      kin.joint_prismatic.push_back(row.prismatic);
      const double theta = row.theta_offset + (row.prismatic ? 0.0 : pose.q(j));
      const double d = row.d + (row.prismatic ? pose.q(j) : 0.0);
      T = T * Eigen::AngleAxisd(theta, Vec3::UnitZ());
      T.translation() += T.linear() * Vec3(0, 0, d);
      kin.link_of_joint.push_back(int(kin.link_pose.size()));
      kin.link_pose.push_back(T);
      kin.link_chain.push_back(int(ci));
      ++j;
    }
  }
  return kin;
}

SurfaceCloud hand_surface(const HandModel& hand, const HandKinematics& kin) {
  SurfaceCloud cloud;
  const int n = int(hand.canonical_cloud.size());
  cloud.positions.resize(3, n);
  cloud.normals.resize(3, n);
  cloud.link.resize(n);
  for (int i = 0; i < n; ++i) {
    const HandCloudPoint& p = hand.canonical_cloud[i];
    const Pose& T = kin.link_pose[p.link];
    cloud.positions.col(i) = T * p.position;
    cloud.normals.col(i) = T.linear() * p.normal;
    cloud.link[i] = p.link;
  }
  return cloud;
}

SurfaceCloud hand_surface(const HandModel& hand, const HandPose& pose) {
  return hand_surface(hand, forward_kinematics(hand, pose));
}

double joint_limit_penalty(const HandModel& hand, const VecX& q) {
  double p = 0.0;
  for (int j = 0; j < q.size(); ++j) {
    p += std::max(q(j) - hand.joint_upper(j), 0.0);
    p += std::max(hand.joint_lower(j) - q(j), 0.0);
  }
  return p;
}

VecX joint_limit_penalty_gradient(const HandModel& hand, const VecX& q) {
  VecX g = VecX::Zero(q.size());
  for (int j = 0; j < q.size(); ++j) {
    if (q(j) >= hand.joint_upper(j)) g(j) += 1.0;
    if (q(j) <= hand.joint_lower(j)) g(j) -= 1.0;
  }
  return g;
}

void accumulate_point_jacobian(const HandModel& hand, const HandKinematics& kin,
                               int link, const Vec3& point_world,
                               const Vec3& base_origin, const Vec3& g,
                               Eigen::Ref<VecX> grad) {
  grad.segment<3>(0) += (point_world - base_origin).cross(g);
  grad.segment<3>(3) += g;
  if (link == 0) return;
  const int chain = kin.link_chain[link];
  // Joints of this chain at or before the link move it.
  int j0 = hand.joint_index(chain, 0);
  const int rows = int(hand.chains[chain].rows.size());
  for (int r = 0; r < rows; ++r) {
    const int j = j0 + r;
    if (kin.link_of_joint[j] > link) break;
    if (kin.joint_prismatic[j]) {
      grad(6 + j) += kin.joint_axis[j].dot(g);
    } else {
      grad(6 + j) +=
          kin.joint_axis[j].dot((point_world - kin.joint_origin[j]).cross(g));
    }
  }
}

}  // namespace gsynth
