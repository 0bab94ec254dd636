#pragma once

#include <vector>

#include "gsynth/geometry.hpp"
#include "gsynth/hand.hpp"
#include "gsynth/types.hpp"

namespace gsynth {

struct FCParams {
  double mu = 0.5;       // friction coefficient
  double epsilon = 0.01; // eigenvalue floor for GG^T
  double delta = 0.5;    // bound on ||Gc||
  double w = 1.0;        // weight of the contact surface-distance term
  bool literal_eig = false;  // replace max(0, eps - l0) by l0(GG^T - eps I)
  double surface_tol = 1e-3; // |SDF| tolerance of the on-surface condition
};

/// Wrench basis of n contact points (columns of x): top three rows identity
/// blocks, bottom three rows the cross-product matrices of the x_i. Shifting
/// every x_i by t adds t-cross blocks to the torque rows only.
Eigen::Matrix<double, 6, Eigen::Dynamic> wrench_basis(const Mat3X& x);

/// Eigen-decomposition of a symmetric 6x6 by cyclic Jacobi sweeps.
/// Eigenvalues ascending; deterministic for a given input.
void jacobi_eigen6(const Mat6& M, Vec6& evals, Mat6& evecs);

/// Friction-cone membership, f measured against the inward normal c:
/// f . c > ||f|| / sqrt(mu^2 + 1). Scale-invariant in f.
bool in_friction_cone(const Vec3& f, const Vec3& c_inward, double mu);

struct FCValue {
  double value = 0.0;     // eig_term + gc_norm + w * sdf_term
  double eig_term = 0.0;
  double gc_norm = 0.0;
  double sdf_term = 0.0;  // sum of positive contact SDFs (unweighted)
  double lambda_min = 0.0;  // l0(GG^T)
};

/// Differentiable force-closure score of contact positions (world frame)
/// against an object. Positions and normals are taken to the object's local
/// frame before the wrench algebra so the score rides with the object.
/// Inward normals are fetched from the object's distance field.
FCValue relaxed_fc(const Mat3X& positions_world, const ObjectModel& obj,
                   const FCParams& p);

/// Same score plus its gradient with respect to the world positions,
/// including the curvature of the object's normal field. At an eigenvalue
/// crossing or a max() kink the deterministic one-sided branch is returned.
FCValue relaxed_fc_grad(const Mat3X& positions_world, const ObjectModel& obj,
                        const FCParams& p, Mat3X& dpositions);

struct ConstraintsReport {
  bool eig_ok = false;      // l0(GG^T) >= epsilon
  bool gc_ok = false;       // ||Gc|| < delta
  bool surface_ok = false;  // every |SDF(x_i)| <= surface_tol
  bool pass = false;
  double lambda_min = 0.0;
  double gc_norm = 0.0;
  double max_abs_sdf = 0.0;
};

ConstraintsReport relaxed_constraints_check(const Mat3X& positions_world,
                                            const ObjectModel& obj,
                                            const FCParams& p);

struct OracleParams {
  double mu = 0.5;
  int cone_facets = 8;      // K >= 4
  int directions = 10000;   // M >= 1000
  double margin = 0.05;
};

/// Validation oracle: friction cones discretized into K edge forces, the
/// resulting primitive wrenches must positively span R^6. Checked against M
/// deterministic low-discrepancy directions plus the signed coordinate axes
/// and the least-covered spectral direction of the generator set, so exact
/// null directions (antipodal pairs, collinear sets) are caught regardless
/// of M. Sound up to direction-set resolution otherwise.
bool oracle_force_closure(const Mat3X& positions, const Mat3X& inward_normals,
                          const OracleParams& op);

// Sampler-facing contact selection: distinct hand-cloud indices with cached
// world frames. Size clamped to [2, 8].
struct ContactSet {
  std::vector<int> cloud_index;
  Mat3X positions;
  Mat3X inward_normals;
  int size() const { return int(cloud_index.size()); }
};

ContactSet make_contact_set(const std::vector<int>& cloud_indices);

/// Re-caches world positions from the posed hand cloud and inward normals
/// from the object at those positions.
void refresh_contacts(ContactSet& contacts, const SurfaceCloud& cloud,
                      const ObjectModel& obj);

}  // namespace gsynth
