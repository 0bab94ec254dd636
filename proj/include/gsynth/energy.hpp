#pragma once

#include "gsynth/force_closure.hpp"
#include "gsynth/geometry.hpp"
#include "gsynth/hand.hpp"
#include "gsynth/types.hpp"

namespace gsynth {

struct EnergyParams {
  FCParams fc;
  double lambda_grasp = 1.0;
  double lambda_phy = 100.0;
};

struct EnergyBreakdown {
  double total = 0.0;
  double e_grasp = 0.0;        // force-closure score of the contact set
  double e_phy = 0.0;          // penetration + joint-limit excess
  double penetration = 0.0;    // sum over hand surface of max(-SDF, 0)
  double joint_penalty = 0.0;
  double max_penetration = 0.0;
  FCValue fc;                  // diagnostics of the grasp term
};

/// Applies a (6 + J) tangent step: world-frame rotation about the base
/// origin through the quaternion exponential, then translation, then joint
/// offsets.
HandPose retract_pose(const HandPose& pose, const VecX& tangent);

EnergyBreakdown total_energy(const HandModel& hand, const HandPose& pose,
                             const ContactSet& contacts, const ObjectModel& obj,
                             const EnergyParams& p);

/// total_energy plus its analytic gradient in the (6 + J) tangent. The
/// gradient matches central finite differences of total_energy away from the
/// kink sets (surface crossings, joint limits, eigenvalue crossings), where
/// the deterministic one-sided branch is returned.
EnergyBreakdown energy_gradient(const HandModel& hand, const HandPose& pose,
                                const ContactSet& contacts,
                                const ObjectModel& obj, const EnergyParams& p,
                                VecX& grad);

}  // namespace gsynth
