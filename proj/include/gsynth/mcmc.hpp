#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "gsynth/rng.hpp"
#include "gsynth/types.hpp"

namespace gsynth {

// Model contract for the MALA kernel and the landscape machinery:
//   using State = ...;
//   double energy(const State&) const;
//   double energy_grad(const State&, VecX& grad) const;    // returns energy
//   State retract(const State&, const VecX& step) const;
//   VecX tangent_difference(const State& from, const State& to) const;
//     // step with retract(from, step) ~= to; norm is the state distance
//   VecX flatten(const State&) const;                      // for export

template <class Model>
struct MalaChainState {
  typename Model::State x;
  double energy = 0.0;
  VecX grad;
};

template <class Model>
MalaChainState<Model> make_chain_state(const Model& m,
                                       const typename Model::State& x) {
  MalaChainState<Model> st;
  st.x = x;
  st.energy = m.energy_grad(x, st.grad);
  return st;
}

// One Metropolis-adjusted Langevin step with a diagonal preconditioner:
//   proposal = retract(x, -(sigma^2 / 2T) grad + sigma * xi)
// accepted with min(1, exp(-(E'-E)/T) q(x|x') / q(x'|x)). The reverse move
// is measured with the negated step (exact on flat blocks, the usual
// first-order approximation on the rotation block). Non-finite proposal
// energies are rejected outright.
template <class Model>
bool mala_step(const Model& m, MalaChainState<Model>& st, const VecX& sigma,
               double temperature, Rng& rng, bool* out_accepted_finite = nullptr) {
  const int d = int(sigma.size());
  const VecX xi = rng.normal_vec(d);
  const VecX drift =
      (-(sigma.array().square() / (2.0 * temperature)) * st.grad.array()).matrix();
  const VecX step = drift + (sigma.array() * xi.array()).matrix();
  const typename Model::State xp = m.retract(st.x, step);
  VecX grad_p;
  const double ep = m.energy_grad(xp, grad_p);
  if (out_accepted_finite) *out_accepted_finite = std::isfinite(ep);
  if (!std::isfinite(ep)) return false;

  const double ll_fwd = -0.5 * xi.squaredNorm();
  const VecX drift_back =
      (-(sigma.array().square() / (2.0 * temperature)) * grad_p.array()).matrix();
  const VecX rev = ((-step - drift_back).array() / sigma.array()).matrix();
  const double ll_rev = -0.5 * rev.squaredNorm();
  const double log_alpha = -(ep - st.energy) / temperature + ll_rev - ll_fwd;

  if (std::log(rng.uniform_pos()) < log_alpha) {
    st.x = xp;
    st.energy = ep;
    st.grad = grad_p;
    return true;
  }
  return false;
}

// Flat-vector model over callables; the toy problems and test surrogates.
struct VecModel {
  using State = VecX;
  std::function<double(const VecX&)> f;
  std::function<VecX(const VecX&)> df;

  double energy(const State& x) const { return f(x); }
  double energy_grad(const State& x, VecX& g) const {
    g = df(x);
    return f(x);
  }
  State retract(const State& x, const VecX& step) const { return x + step; }
  VecX tangent_difference(const State& a, const State& b) const { return b - a; }
  VecX flatten(const State& x) const { return x; }
};

}  // namespace gsynth
