#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gsynth/records.hpp"
#include "gsynth/sampler.hpp"

namespace gsynth {

struct ContactMapParams {
  double eps1 = 1e-4;  // log floor
  double eps2 = 0.05;  // distance saturation (m)
  int dims = 6;
};

// Log-saturated unsigned distance of every canonical hand surface point to
// the object: ln(eps1 + min(|SDF|, eps2)). Touching points read ln(eps1),
// points beyond eps2 saturate at ln(eps1 + eps2).
VecX contact_map_embedding(const HandModel& hand, const ObjectModel& obj,
                           const HandPose& pose, const ContactMapParams& p);

// One row per record, in record order.
MatX embeddings_for_records(const HandModel& hand, const ObjectModel& obj,
                            const std::vector<GraspRecord>& records,
                            const ContactMapParams& p);

// Column z-scoring followed by PCA. Zero-variance columns map to zero.
// Component signs are fixed by making the largest-magnitude loading
// positive (lowest index on ties).
struct PcaModel {
  VecX mean;
  VecX stddev;       // 0 flags a constant column
  MatX components;   // D x k, orthonormal columns
  VecX explained;    // variance along each component
};

// Throws std::invalid_argument when rows < dims + 1 or dims < 1.
PcaModel fit_pca(const MatX& data, int dims);
MatX pca_transform(const PcaModel& m, const MatX& data);   // n x k scores
MatX pca_reconstruct(const PcaModel& m, const MatX& scores);  // back to data space

// Greedy farthest-point subset of the rows: starts at row 0, repeatedly
// takes the row maximizing the distance to the chosen set (lowest index on
// ties). Returns k row indices in selection order.
std::vector<int> farthest_point_indices(const MatX& data, int k);

void write_scores_csv(const std::string& path, const std::vector<std::string>& ids,
                      const MatX& scores);

// Raw embedding matrix as row-major little-endian float64 plus a JSON
// sidecar describing the layout.
void write_omega_binary(const std::string& bin_path, const std::string& json_path,
                        const MatX& omega, const nlohmann::ordered_json& extra_meta);
MatX read_omega_binary(const std::string& bin_path, const std::string& json_path);

}  // namespace gsynth
