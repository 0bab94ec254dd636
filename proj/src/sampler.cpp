#include "gsynth/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "gsynth/mcmc.hpp"

namespace gsynth {

namespace {

// Stream tags so every draw is a pure function of (seed, step, purpose).
constexpr std::uint64_t kTagInit = 0x11;
constexpr std::uint64_t kTagMoveKind = 0x21;
constexpr std::uint64_t kTagPose = 0x22;
constexpr std::uint64_t kTagContact = 0x23;

struct PoseModel {
  using State = HandPose;
  const HandModel* hand;
  const ObjectModel* object;
  const ContactSet* contacts;
  const EnergyParams* ep;
  mutable EnergyBreakdown last;  // breakdown of the most recent eval

  double energy(const State& x) const {
    return total_energy(*hand, x, *contacts, *object, *ep).total;
  }
  double energy_grad(const State& x, VecX& g) const {
    last = energy_gradient(*hand, x, *contacts, *object, *ep, g);
    return last.total;
  }
  State retract(const State& x, const VecX& step) const {
    return retract_pose(x, step);
  }
  VecX tangent_difference(const State& a, const State& b) const {
    VecX d(6 + a.q.size());
    d.head<3>() = so3_log(Mat3(b.base.linear() * a.base.linear().transpose()));
    d.segment<3>(3) = b.base.translation() - a.base.translation();
    d.tail(a.q.size()) = b.q - a.q;
    return d;
  }
  VecX flatten(const State& x) const {
    VecX v(7 + x.q.size());
    const Quat q(x.base.linear());
    v.head<3>() = x.base.translation();
    v.segment<4>(3) << q.w(), q.x(), q.y(), q.z();
    v.tail(x.q.size()) = x.q;
    return v;
  }
};

VecX sampler_sigma(const SamplerConfig& cfg, int dof) {
  VecX s(6 + dof);
  s.head<3>().setConstant(cfg.sigma_rot);
  s.segment<3>(3).setConstant(cfg.sigma_trans);
  s.tail(dof).setConstant(cfg.sigma_joint);
  return s;
}

std::vector<int> draw_distinct_indices(Rng& rng, int n, int cloud_size) {
  std::vector<int> out;
  out.reserve(n);
  while (int(out.size()) < n) {
    const int idx = int(rng.uniform_index(std::uint64_t(cloud_size)));
    if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  return out;
}

void update_best(SamplerState& st) {
  if (st.breakdown.total < st.best_breakdown.total) {
    st.best_pose = st.pose;
    st.best_contacts = st.contacts;
    st.best_breakdown = st.breakdown;
  }
}

}  // namespace

double temperature_at(const SamplerConfig& cfg, int step) {
  if (cfg.steps <= 1) return cfg.t_init;
  const int k = std::clamp(step, 0, cfg.steps - 1);
  const double frac = double(k) / double(cfg.steps - 1);
  return cfg.t_init * std::pow(cfg.t_final / cfg.t_init, frac);
}

SamplerState init_state(const HandModel& hand, const ObjectModel& object,
                        const EnergyParams& ep, const SamplerConfig& cfg,
                        std::uint64_t seed) {
  if (cfg.n_contacts < 2 || cfg.n_contacts > 8)
    throw std::invalid_argument("sampler: n_contacts must be in [2, 8]");
  Rng rng{seed, kTagInit};

  SamplerState st;
  st.seed = seed;
  st.step = 0;

  const Vec3 centroid = object_centroid(object);
  const double dist = 1.2 * (bounding_radius(object) + hand.reach);
  const Vec3 dir = rng.unit_vec3();
  const Vec3 pos = centroid + dist * dir;
  const double roll = rng.uniform(0.0, 2.0 * M_PI);
  const Quat align = Quat::FromTwoVectors(Vec3::UnitZ(), Vec3(-dir));
  const Quat orient = align * Quat(Eigen::AngleAxisd(roll, Vec3::UnitZ()));
  st.pose.base = make_pose(orient.toRotationMatrix(), pos);

  st.pose.q.resize(hand.dof());
  for (int j = 0; j < hand.dof(); ++j)
    st.pose.q(j) = rng.uniform(hand.joint_lower(j), hand.joint_upper(j));

  const int cloud_size = int(hand.canonical_cloud.size());
  st.contacts = make_contact_set(draw_distinct_indices(rng, cfg.n_contacts, cloud_size));

  st.breakdown = energy_gradient(hand, st.pose, st.contacts, object, ep, st.grad);
  st.grad_valid = true;
  st.best_pose = st.pose;
  st.best_contacts = st.contacts;
  st.best_breakdown = st.breakdown;
  return st;
}

bool langevin_step(const HandModel& hand, const ObjectModel& object,
                   const EnergyParams& ep, const SamplerConfig& cfg,
                   SamplerState& st, double temperature) {
  if (!st.grad_valid) {
    st.breakdown = energy_gradient(hand, st.pose, st.contacts, object, ep, st.grad);
    st.grad_valid = true;
  }
  PoseModel model{&hand, &object, &st.contacts, &ep, {}};
  MalaChainState<PoseModel> chain;
  chain.x = st.pose;
  chain.energy = st.breakdown.total;
  chain.grad = st.grad;

  Rng rng{st.seed, std::uint64_t(st.step), kTagPose};
  const VecX sigma = sampler_sigma(cfg, hand.dof());
  const bool accepted = mala_step(model, chain, sigma, temperature, rng);
  ++st.pose_proposals;
  if (accepted) {
    ++st.pose_accepts;
    st.pose = chain.x;
    st.grad = chain.grad;
    st.breakdown = model.last;
  }
  return accepted;
}

bool contact_resample_step(const HandModel& hand, const ObjectModel& object,
                           const EnergyParams& ep, const SamplerConfig&,
                           SamplerState& st, double temperature) {
  Rng rng{st.seed, std::uint64_t(st.step), kTagContact};
  const int n = st.contacts.size();
  const int slot = int(rng.uniform_index(std::uint64_t(n)));
  const int cloud_size = int(hand.canonical_cloud.size());

  std::vector<int> cand = st.contacts.cloud_index;
  int replacement;
  do {
    replacement = int(rng.uniform_index(std::uint64_t(cloud_size)));
  } while (std::find(cand.begin(), cand.end(), replacement) != cand.end());
  cand[slot] = replacement;

  ContactSet proposal = make_contact_set(cand);
  const EnergyBreakdown b_new = total_energy(hand, st.pose, proposal, object, ep);
  ++st.contact_proposals;

  const double delta = b_new.total - st.breakdown.total;
  const bool accepted =
      std::isfinite(b_new.total) &&
      std::log(rng.uniform_pos()) < -delta / temperature;
  if (accepted) {
    ++st.contact_accepts;
    st.contacts = std::move(proposal);
    st.breakdown = b_new;
    st.grad_valid = false;  // gradient belongs to the old contact set
  }
  return accepted;
}

void anneal_step(const HandModel& hand, const ObjectModel& object,
                 const EnergyParams& ep, const SamplerConfig& cfg, SamplerState& st) {
  const double T = temperature_at(cfg, st.step);
  Rng kind{st.seed, std::uint64_t(st.step), kTagMoveKind};
  if (kind.uniform() < cfg.p_contact) {
    contact_resample_step(hand, object, ep, cfg, st, T);
  } else {
    langevin_step(hand, object, ep, cfg, st, T);
  }
  update_best(st);
  ++st.step;
}

bool grasp_success(const EnergyBreakdown& b, const FCParams& fc,
                   double max_penetration, bool oracle_pass) {
  return b.fc.gc_norm <= fc.delta && b.fc.lambda_min >= fc.epsilon &&
         b.max_penetration <= max_penetration && b.joint_penalty == 0.0 &&
         oracle_pass;
}

GraspRecord make_record(const HandModel& hand, const ObjectModel& object,
                        const EnergyParams& ep, const SamplerConfig& cfg,
                        const HandPose& pose, const ContactSet& contacts,
                        std::uint64_t seed) {
  GraspRecord r;
  r.object_id = object.id;
  r.hand_id = hand.name;
  r.seed = seed;
  r.translation = pose.base.translation();
  r.rotation = Quat(pose.base.linear());
  if (r.rotation.w() < 0.0) r.rotation.coeffs() = -r.rotation.coeffs();
  r.joints = pose.q;

  r.energy = total_energy(hand, pose, contacts, object, ep);

  SurfaceCloud cloud = hand_surface(hand, pose);
  ContactSet cs = contacts;
  refresh_contacts(cs, cloud, object);

  // Contacts are stored in the object frame, matching the wrench algebra.
  const Mat3 R_obj = object.pose.linear();
  const Pose inv = object.pose.inverse();
  Mat3X pos_local(3, cs.size()), nrm_local(3, cs.size());
  for (int i = 0; i < cs.size(); ++i) {
    pos_local.col(i) = inv * Vec3(cs.positions.col(i));
    nrm_local.col(i) = R_obj.transpose() * Vec3(cs.inward_normals.col(i));
    ContactRecord c;
    c.cloud_index = cs.cloud_index[i];
    c.position = pos_local.col(i);
    c.inward_normal = nrm_local.col(i);
    r.contacts.push_back(c);
  }

  OracleParams op = cfg.oracle;
  op.mu = ep.fc.mu;
  r.oracle_pass = oracle_force_closure(pos_local, nrm_local, op);
  r.success = grasp_success(r.energy, ep.fc, cfg.success_max_penetration,
                            r.oracle_pass);
  return r;
}

GraspRecord synthesize_one(const HandModel& hand, const ObjectModel& object,
                           const EnergyParams& ep, const SamplerConfig& cfg,
                           std::uint64_t seed, const ChainObserver& observer) {
  SamplerState st = init_state(hand, object, ep, cfg, seed);
  if (observer) observer(st);
  for (int k = 0; k < cfg.steps; ++k) {
    anneal_step(hand, object, ep, cfg, st);
    if (observer) observer(st);
  }
  return make_record(hand, object, ep, cfg, st.best_pose, st.best_contacts, seed);
}

std::vector<GraspRecord> synthesize(const HandModel& hand, const ObjectModel& object,
                                    const EnergyParams& ep, const SamplerConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds,
                                    int threads) {
  std::vector<GraspRecord> out(seeds.size());
  const int n_threads = std::max(1, std::min<int>(threads, int(seeds.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      out[i] = synthesize_one(hand, object, ep, cfg, seeds[i]);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = t; i < seeds.size(); i += n_threads)
        out[i] = synthesize_one(hand, object, ep, cfg, seeds[i]);
    });
  }
  for (std::thread& th : pool) th.join();
  return out;
}

}  // namespace gsynth
