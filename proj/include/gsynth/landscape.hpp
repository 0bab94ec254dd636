#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsynth/mcmc.hpp"
#include "gsynth/records.hpp"
#include "gsynth/sampler.hpp"

namespace gsynth {

struct DescendOptions {
  double step0 = 0.01;       // initial line-search step
  double grad_tol = 1e-4;
  int max_steps = 1000;
  double armijo_c = 1e-4;
};

template <class Model>
struct DescendResult {
  typename Model::State x;
  double energy = 0.0;
  int steps = 0;
  bool converged = false;
};

// Gradient descent with backtracking line search (Armijo condition through
// the retraction). Deterministic.
template <class Model>
DescendResult<Model> descend(const Model& m, const typename Model::State& x0,
                             const DescendOptions& o) {
  DescendResult<Model> r;
  r.x = x0;
  VecX g;
  r.energy = m.energy_grad(r.x, g);
  double step = o.step0;
  for (r.steps = 0; r.steps < o.max_steps; ++r.steps) {
    const double gn2 = g.squaredNorm();
    if (std::sqrt(gn2) <= o.grad_tol) {
      r.converged = true;
      return r;
    }
    bool moved = false;
    while (step > 1e-14) {
      const typename Model::State xp = m.retract(r.x, VecX(-step * g));
      VecX gp;
      const double ep = m.energy_grad(xp, gp);
      if (std::isfinite(ep) && ep <= r.energy - o.armijo_c * step * gn2) {
        r.x = xp;
        r.energy = ep;
        g = gp;
        step *= 1.5;  // first trial succeeded, allow longer steps
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) return r;  // step underflow, treat as stuck
  }
  r.converged = std::sqrt(g.squaredNorm()) <= o.grad_tol;
  return r;
}

struct AdOptions {
  double magnet = 5.0;       // weight of the distance-to-target pull
  double temperature = 0.05;
  double sigma = 0.05;       // proposal scale, every coordinate
  int max_steps = 2000;
  double reach_tol = 0.05;   // tangent distance declaring the target reached
};

struct AdResult {
  bool reached = false;
  double barrier = std::numeric_limits<double>::infinity();
  int steps = 0;
};

// Magnetized wrapper: energy plus magnet * distance-to-target. Both the
// drift and the acceptance act on the magnetized energy; the barrier is read
// off the true energy along the accepted path.
template <class Model>
struct MagnetizedModel {
  using State = typename Model::State;
  const Model* base;
  State target;
  double magnet;

  double pull(const State& x, VecX* grad_out) const {
    const VecX d = base->tangent_difference(x, target);
    const double dist = d.norm();
    if (grad_out) {
      if (dist > 1e-12) *grad_out = -magnet / dist * d;
      else grad_out->setZero(d.size());
    }
    return magnet * dist;
  }
  double energy(const State& x) const { return base->energy(x) + pull(x, nullptr); }
  double energy_grad(const State& x, VecX& g) const {
    VecX gp;
    const double e = base->energy_grad(x, g) + pull(x, &gp);
    g += gp;
    return e;
  }
  State retract(const State& x, const VecX& s) const { return base->retract(x, s); }
  VecX tangent_difference(const State& a, const State& b) const {
    return base->tangent_difference(a, b);
  }
  VecX flatten(const State& x) const { return base->flatten(x); }
};

// Attraction-diffusion: a MALA chain started at `from`, magnetized toward
// `to`. Returns whether the chain entered the reach tolerance and the
// highest true energy seen along the accepted path (including both ends on
// success), a one-sided barrier estimate.
template <class Model>
AdResult attraction_diffusion(const Model& m, const typename Model::State& from,
                              const typename Model::State& to, const AdOptions& o,
                              Rng& rng) {
  MagnetizedModel<Model> mag{&m, to, o.magnet};
  MalaChainState<MagnetizedModel<Model>> chain =
      make_chain_state(mag, from);
  const VecX sigma = VecX::Constant(m.tangent_difference(from, to).size(), o.sigma);

  AdResult r;
  double path_max = m.energy(from);
  for (r.steps = 0; r.steps < o.max_steps; ++r.steps) {
    if (m.tangent_difference(chain.x, to).norm() <= o.reach_tol) {
      r.reached = true;
      r.barrier = std::max(path_max, m.energy(to));
      return r;
    }
    if (mala_step(mag, chain, sigma, o.temperature, rng))
      path_max = std::max(path_max, m.energy(chain.x));
  }
  if (m.tangent_difference(chain.x, to).norm() <= o.reach_tol) {
    r.reached = true;
    r.barrier = std::max(path_max, m.energy(to));
  }
  return r;
}

struct GraphOptions {
  DescendOptions descend;
  AdOptions ad;
  double merge_tol = 0.05;          // tangent distance identifying minima
  double barrier_merge_eps = 1e-3;  // excess barrier treated as the same basin
  int ad_attempts = 3;
};

struct LandscapeGraph {
  struct Basin {
    int id = 0;
    double energy = 0.0;  // energy of the representative minimum
    VecX representative;  // flattened state
    int size = 0;         // samples assigned
  };
  std::vector<Basin> basins;
  MatX barriers;            // pairwise; diagonal holds basin energies
  std::vector<int> assignment;  // basin id per input sample
};

// Maps samples to basins: descend each sample, merge minima that coincide
// (distance within merge_tol, or attraction-diffusion connects them with
// excess barrier within barrier_merge_eps), estimate pairwise barriers as
// the lowest attraction-diffusion crossing over all attempts, clamped from
// below by the basin energies.
template <class Model>
LandscapeGraph build_graph(const Model& m,
                           const std::vector<typename Model::State>& samples,
                           const GraphOptions& o, std::uint64_t seed) {
  using State = typename Model::State;
  LandscapeGraph g;
  std::vector<State> reps;

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const DescendResult<Model> d = descend(m, samples[s], o.descend);

    int joined = -1;
    for (std::size_t b = 0; b < reps.size(); ++b) {
      if (m.tangent_difference(d.x, reps[b]).norm() <= o.merge_tol) {
        joined = int(b);
        break;
      }
    }

    // Not a known minimum: probe connectivity to every basin.
    std::vector<double> est(reps.size(), std::numeric_limits<double>::infinity());
    if (joined < 0) {
      for (std::size_t b = 0; b < reps.size(); ++b) {
        for (int a = 0; a < o.ad_attempts; ++a) {
          Rng rng{seed, std::uint64_t(s), std::uint64_t(b), std::uint64_t(a), 0xadull};
          const AdResult fwd = attraction_diffusion(m, d.x, reps[b], o.ad, rng);
          if (fwd.reached) est[b] = std::min(est[b], fwd.barrier);
          Rng rng2{seed, std::uint64_t(s), std::uint64_t(b), std::uint64_t(a), 0xdbull};
          const AdResult rev = attraction_diffusion(m, reps[b], d.x, o.ad, rng2);
          if (rev.reached) est[b] = std::min(est[b], rev.barrier);
        }
      }
      // Merge into the lowest-excess basin when the crossing is flat.
      double best_excess = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < reps.size(); ++b) {
        const double floor = std::max(d.energy, g.basins[b].energy);
        const double excess = est[b] - floor;
        if (excess <= o.barrier_merge_eps && excess < best_excess) {
          best_excess = excess;
          joined = int(b);
        }
      }
    }

    if (joined < 0) {
      LandscapeGraph::Basin basin;
      basin.id = int(reps.size());
      basin.energy = d.energy;
      basin.representative = m.flatten(d.x);
      basin.size = 1;
      reps.push_back(d.x);
      g.basins.push_back(basin);
      // Grow the barrier matrix, seeding the new row from this sample's
      // attraction-diffusion estimates.
      const int nb = int(reps.size());
      MatX grown = MatX::Constant(nb, nb, std::numeric_limits<double>::infinity());
      if (nb > 1) grown.topLeftCorner(nb - 1, nb - 1) = g.barriers;
      for (int b = 0; b + 1 < nb; ++b) {
        grown(nb - 1, b) = std::min(grown(nb - 1, b), est[b]);
        grown(b, nb - 1) = grown(nb - 1, b);
      }
      g.barriers = grown;
      joined = basin.id;
    } else {
      LandscapeGraph::Basin& basin = g.basins[joined];
      basin.size += 1;
      if (d.energy < basin.energy) {
        basin.energy = d.energy;
        basin.representative = m.flatten(d.x);
        reps[joined] = d.x;
      }
      for (std::size_t b = 0; b < est.size(); ++b) {
        if (int(b) == joined) continue;
        if (est[b] < g.barriers(joined, int(b))) {
          g.barriers(joined, int(b)) = est[b];
          g.barriers(int(b), joined) = est[b];
        }
      }
    }
    g.assignment.push_back(joined);
  }

  // A crossing can never sit below either endpoint.
  const int nb = int(g.basins.size());
  for (int i = 0; i < nb; ++i) {
    g.barriers(i, i) = g.basins[i].energy;
    for (int j = 0; j < nb; ++j) {
      if (i == j) continue;
      if (std::isfinite(g.barriers(i, j)))
        g.barriers(i, j) =
            std::max(g.barriers(i, j),
                     std::max(g.basins[i].energy, g.basins[j].energy));
    }
  }
  return g;
}

nlohmann::ordered_json graph_to_json(const LandscapeGraph& g);
LandscapeGraph graph_from_json(const nlohmann::json& j);

// Deterministic disconnectivity dendrogram (single-linkage over the barrier
// matrix; unreachable pairs join at the top margin).
std::string graph_to_svg(const LandscapeGraph& g);

// Grasp-space model over a fixed contact set; the tangent is the sampler's
// (rotation, translation, joints) block layout.
struct GraspStateModel {
  using State = HandPose;
  const HandModel* hand;
  const ObjectModel* object;
  const EnergyParams* ep;
  ContactSet contacts;

  double energy(const State& x) const;
  double energy_grad(const State& x, VecX& g) const;
  State retract(const State& x, const VecX& s) const;
  VecX tangent_difference(const State& a, const State& b) const;
  VecX flatten(const State& x) const;
};

// Landscape over synthesized grasps. Each record descends under its own
// contact set; chains between minima run under the starting minimum's
// contact set. Records must share one hand and object.
LandscapeGraph grasp_landscape(const HandModel& hand, const ObjectModel& object,
                               const EnergyParams& ep,
                               const std::vector<GraspRecord>& records,
                               const GraphOptions& o, std::uint64_t seed);

// The 1-d double well (x^2 - 1)^2 used to calibrate the machinery.
VecModel double_well_model();
LandscapeGraph double_well_landscape(int samples_per_well, const GraphOptions& o,
                                     std::uint64_t seed);

}  // namespace gsynth
