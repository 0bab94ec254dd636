#pragma once

#include <string>
#include <vector>

#include "gsynth/types.hpp"

namespace gsynth {

// Capsule in the owning link's frame.
struct Capsule {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;
};

// One modified-DH row: a and alpha attach to the previous link, d and the
// theta offset to this one. The joint variable adds to theta (revolute) or
// to d (prismatic).
struct DhRow {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
  bool prismatic = false;
};

struct HandChain {
  std::string name;
  Pose root = Pose::Identity();  // knuckle placement in the palm frame
  std::vector<DhRow> rows;
  std::vector<Vec2> joint_limits;               // (lo, hi) per row
  std::vector<std::vector<Capsule>> link_capsules;  // per row
};

// Canonical surface point, link frame. The cloud is generated procedurally
// from the capsules (area-proportional counts, deterministic lattice), so a
// given spec always yields the same points.
struct HandCloudPoint {
  int link = 0;  // 0 = palm, then chain links in declaration order
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
};

struct HandModel {
  std::string name;
  Pose base_offset = Pose::Identity();
  std::vector<Capsule> palm_capsules;
  std::vector<HandChain> chains;
  int surface_samples = 2170;

  // Derived by finalize_hand().
  std::vector<HandCloudPoint> canonical_cloud;
  VecX joint_lower, joint_upper;
  double reach = 0.0;  // max canonical cloud distance from base at q = 0

  int dof() const;
  int num_links() const;
  /// Flattened joint index of (chain, row).
  int joint_index(int chain, int row) const;
};

/// Parses and validates a hand spec JSON document (see README for the
/// schema). Throws std::invalid_argument naming the offending key.
HandModel load_hand_spec(const std::string& json_text);
HandModel load_hand_spec_file(const std::string& path);

/// Built-in specs: "ftac15" (five 3-joint fingers, 15 DoF) and "gripper1"
/// (single prismatic jaw). Throws std::invalid_argument for other names.
HandModel builtin_hand(const std::string& name);

/// The raw JSON text of a built-in spec (what load_hand_spec consumes).
std::string builtin_hand_spec_json(const std::string& name);

struct HandPose {
  Pose base = Pose::Identity();
  VecX q;
};

struct HandKinematics {
  std::vector<Pose> link_pose;          // [0] = palm
  std::vector<int> link_chain;          // -1 for the palm
  std::vector<Vec3> joint_axis;         // world frame, per flattened joint
  std::vector<Vec3> joint_origin;       // a point on the axis, world frame
  std::vector<bool> joint_prismatic;
  std::vector<int> link_of_joint;       // link moved directly by the joint
};

HandKinematics forward_kinematics(const HandModel& hand, const HandPose& pose);

struct SurfaceCloud {
  Mat3X positions;  // world frame
  Mat3X normals;
  std::vector<int> link;
  int size() const { return int(positions.cols()); }
};

SurfaceCloud hand_surface(const HandModel& hand, const HandKinematics& kin);
SurfaceCloud hand_surface(const HandModel& hand, const HandPose& pose);

/// Sum of out-of-range excesses over all joints; zero inside the box.
double joint_limit_penalty(const HandModel& hand, const VecX& q);

/// Subgradient of joint_limit_penalty (the at-limit kink takes the outside
/// branch).
VecX joint_limit_penalty_gradient(const HandModel& hand, const VecX& q);

/// Accumulates J^T * g into grad for a world point riding on `link`, where J
/// is the point's velocity Jacobian in the (rotation, translation, joints)
/// tangent. Rotation block is the world-frame perturbation about the base
/// origin.
void accumulate_point_jacobian(const HandModel& hand, const HandKinematics& kin,
                               int link, const Vec3& point_world,
                               const Vec3& base_origin, const Vec3& g,
                               Eigen::Ref<VecX> grad);

}  // namespace gsynth
