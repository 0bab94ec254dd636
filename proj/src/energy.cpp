#include "gsynth/energy.hpp"

#include <cmath>

namespace gsynth {

HandPose retract_pose(const HandPose& pose, const VecX& tangent) {
  if (tangent.size() != 6 + pose.q.size())
    throw std::invalid_argument("retract_pose: tangent length mismatch");
  HandPose out;
  const Quat q0(pose.base.linear());
  const Quat q1 = quat_retract(q0, tangent.head<3>());
  out.base = make_pose(q1.toRotationMatrix(),
                       pose.base.translation() + tangent.segment<3>(3));
  out.q = pose.q + tangent.tail(pose.q.size());
  return out;
}

namespace {

struct EvalScratch {
  HandKinematics kin;
  SurfaceCloud cloud;
  ContactSet contacts;
  VecX cloud_sdf;
};

EnergyBreakdown eval(const HandModel& hand, const HandPose& pose,
                     const ContactSet& contacts, const ObjectModel& obj,
                     const EnergyParams& p, EvalScratch* scratch,
                     Mat3X* dfc_positions) {
  EnergyBreakdown b;
  HandKinematics kin = forward_kinematics(hand, pose);
  SurfaceCloud cloud = hand_surface(hand, kin);

  ContactSet cs = contacts;
  refresh_contacts(cs, cloud, obj);
  if (dfc_positions) {
    b.fc = relaxed_fc_grad(cs.positions, obj, p.fc, *dfc_positions);
  } else {
    b.fc = relaxed_fc(cs.positions, obj, p.fc);
  }
  b.e_grasp = b.fc.value;

  VecX sdf(cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    const double s = signed_distance(obj, Vec3(cloud.positions.col(i)));
    sdf(i) = s;
    if (s < 0.0) {
      b.penetration += -s;
      b.max_penetration = std::max(b.max_penetration, -s);
    }
  }
  b.joint_penalty = joint_limit_penalty(hand, pose.q);
  b.e_phy = b.penetration + b.joint_penalty;
  b.total = p.lambda_grasp * b.e_grasp + p.lambda_phy * b.e_phy;

  if (scratch) {
    scratch->kin = std::move(kin);
    scratch->cloud = std::move(cloud);
    scratch->contacts = std::move(cs);
    scratch->cloud_sdf = std::move(sdf);
  }
  return b;
}

}  // namespace

EnergyBreakdown total_energy(const HandModel& hand, const HandPose& pose,
                             const ContactSet& contacts, const ObjectModel& obj,
                             const EnergyParams& p) {
  return eval(hand, pose, contacts, obj, p, nullptr, nullptr);
}

EnergyBreakdown energy_gradient(const HandModel& hand, const HandPose& pose,
                                const ContactSet& contacts,
                                const ObjectModel& obj, const EnergyParams& p,
                                VecX& grad) {
  EvalScratch scratch;
  Mat3X dfc;
  const EnergyBreakdown b =
      eval(hand, pose, contacts, obj, p, &scratch, &dfc);

  const int J = int(pose.q.size());
  grad.setZero(6 + J);
  const Vec3 base_t = pose.base.translation();

  // Grasp term through the contact points' link Jacobians.
  for (int i = 0; i < scratch.contacts.size(); ++i) {
    const int idx = scratch.contacts.cloud_index[i];
    accumulate_point_jacobian(hand, scratch.kin, scratch.cloud.link[idx],
                              Vec3(scratch.contacts.positions.col(i)), base_t,
                              Vec3(p.lambda_grasp * dfc.col(i)), grad);
  }

  // Penetration term; the at-surface kink takes the flat (outside) branch.
  for (int i = 0; i < scratch.cloud.size(); ++i) {
    const Vec3 pt = scratch.cloud.positions.col(i);
    if (scratch.cloud_sdf(i) < 0.0) {
      accumulate_point_jacobian(hand, scratch.kin, scratch.cloud.link[i], pt,
                                base_t,
                                Vec3(-p.lambda_phy * sdf_gradient(obj, pt)),
                                grad);
    }
  }

  grad.tail(J) += p.lambda_phy * joint_limit_penalty_gradient(hand, pose.q);
  return b;
}

}  // namespace gsynth
