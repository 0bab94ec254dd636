#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gsynth/energy.hpp"
#include "gsynth/records.hpp"

namespace gsynth {

struct SamplerConfig {
  int steps = 3000;
  int n_contacts = 4;
  double sigma_rot = 0.02;
  double sigma_trans = 0.005;
  double sigma_joint = 0.02;
  double p_contact = 0.15;
  double t_init = 1.0;
  double t_final = 0.01;
  double success_max_penetration = 0.005;
  OracleParams oracle;
};

// Geometric interpolation from t_init to t_final over `steps` steps; the
// first step runs at t_init, the last at t_final.
double temperature_at(const SamplerConfig& cfg, int step);

struct SamplerState {
  HandPose pose;
  ContactSet contacts;
  EnergyBreakdown breakdown;
  VecX grad;          // tangent gradient at pose, valid iff grad_valid
  bool grad_valid = false;
  std::uint64_t seed = 0;
  int step = 0;

  HandPose best_pose;
  ContactSet best_contacts;
  EnergyBreakdown best_breakdown;

  long pose_proposals = 0;
  long pose_accepts = 0;
  long contact_proposals = 0;
  long contact_accepts = 0;
};

// Hand base placed at 1.2 * (object bounding radius + hand reach) from the
// object centroid along a random direction, +z of the base facing the
// centroid, roll about the approach axis uniform, joints uniform within
// limits, contacts distinct uniform cloud indices.
SamplerState init_state(const HandModel& hand, const ObjectModel& object,
                        const EnergyParams& ep, const SamplerConfig& cfg,
                        std::uint64_t seed);

// One preconditioned Langevin move on the continuous block (rotation,
// translation, joints). Returns true iff the proposal was accepted.
bool langevin_step(const HandModel& hand, const ObjectModel& object,
                   const EnergyParams& ep, const SamplerConfig& cfg,
                   SamplerState& st, double temperature);

// Swap one contact for a uniformly drawn distinct cloud index, accepted by
// the Metropolis rule at the given temperature (the proposal is symmetric).
bool contact_resample_step(const HandModel& hand, const ObjectModel& object,
                           const EnergyParams& ep, const SamplerConfig& cfg,
                           SamplerState& st, double temperature);

// Advance one annealing step: choose the move kind, execute it, update the
// incumbent best, increment st.step.
void anneal_step(const HandModel& hand, const ObjectModel& object,
                 const EnergyParams& ep, const SamplerConfig& cfg, SamplerState& st);

using ChainObserver = std::function<void(const SamplerState&)>;

// Full annealed chain for one seed; the returned record captures the best
// (lowest total energy) state visited, rescored with oracle and success
// flags. Deterministic in (inputs, seed).
GraspRecord synthesize_one(const HandModel& hand, const ObjectModel& object,
                           const EnergyParams& ep, const SamplerConfig& cfg,
                           std::uint64_t seed, const ChainObserver& observer = nullptr);

// Runs one chain per seed. `threads` > 1 shards the seed list; results are
// ordered by seed list position and independent of the shard count.
std::vector<GraspRecord> synthesize(const HandModel& hand, const ObjectModel& object,
                                    const EnergyParams& ep, const SamplerConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds,
                                    int threads = 1);

// Success predicate on a rescored state: wrench residual and smallest
// grip-matrix eigenvalue within the relaxed thresholds, penetration bounded,
// no joint-limit violation, sampled-cone certificate true.
bool grasp_success(const EnergyBreakdown& b, const FCParams& fc,
                   double max_penetration, bool oracle_pass);

GraspRecord make_record(const HandModel& hand, const ObjectModel& object,
                        const EnergyParams& ep, const SamplerConfig& cfg,
                        const HandPose& pose, const ContactSet& contacts,
                        std::uint64_t seed);

}  // namespace gsynth
