#include "gsynth/contact_map.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gsynth {

VecX contact_map_embedding(const HandModel& hand, const ObjectModel& obj,
                           const HandPose& pose, const ContactMapParams& p) {
  const SurfaceCloud cloud = hand_surface(hand, pose);
  VecX omega(cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    const double d = std::abs(signed_distance(obj, Vec3(cloud.positions.col(i))));
    omega(i) = std::log(p.eps1 + std::min(d, p.eps2));
  }
  return omega;
}

MatX embeddings_for_records(const HandModel& hand, const ObjectModel& obj,
                            const std::vector<GraspRecord>& records,
                            const ContactMapParams& p) {
  MatX out(records.size(), hand.canonical_cloud.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    HandPose pose;
    pose.base = make_pose(records[r].rotation.toRotationMatrix(),
                          records[r].translation);
    pose.q = records[r].joints;
    out.row(r) = contact_map_embedding(hand, obj, pose, p).transpose();
  }
  return out;
}

namespace {

MatX zscore(const PcaModel& m, const MatX& data) {
  MatX z(data.rows(), data.cols());
  for (int c = 0; c < data.cols(); ++c) {
    if (m.stddev(c) > 0.0)
      z.col(c) = (data.col(c).array() - m.mean(c)) / m.stddev(c);
    else
      z.col(c).setZero();
  }
  return z;
}

void fix_sign(Eigen::Ref<VecX> component) {
  int arg = 0;
  double best = std::abs(component(0));
  for (int i = 1; i < component.size(); ++i) {
    const double a = std::abs(component(i));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (component(arg) < 0.0) component = -component;
}

}  // namespace

PcaModel fit_pca(const MatX& data, int dims) {
  const int n = int(data.rows());
  const int D = int(data.cols());
  if (dims < 1) throw std::invalid_argument("contact map: dims must be >= 1");
  if (n < dims + 1)
    throw std::invalid_argument(
        "contact map: need at least dims + 1 samples, got " + std::to_string(n));

  PcaModel m;
  m.mean = data.colwise().mean();
  m.stddev.resize(D);
  for (int c = 0; c < D; ++c) {
    const double var =
        (data.col(c).array() - m.mean(c)).square().sum() / double(n - 1);
    m.stddev(c) = var > 1e-24 ? std::sqrt(var) : 0.0;
  }
  const MatX z = zscore(m, data);

  // Gram-side eigen-decomposition; n is the number of grasps, far below D.
  const MatX gram = z * z.transpose() / double(n - 1);
  Eigen::SelfAdjointEigenSolver<MatX> es(gram);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("contact map: eigen-decomposition failed");

  m.components.resize(D, dims);
  m.explained.resize(dims);
  for (int k = 0; k < dims; ++k) {
    const int src = n - 1 - k;  // ascending order, take from the top
    const double lambda = std::max(0.0, es.eigenvalues()(src));
    m.explained(k) = lambda;
    VecX v = z.transpose() * es.eigenvectors().col(src);
    const double norm = v.norm();
    if (norm > 1e-12) {
      v /= norm;
    } else {
      // Data rank exhausted; the earlier columns already span the row space,
      // so complete the basis from canonical axes. Scores stay exactly zero.
      v.setZero();
      for (int j = 0; j < D && v.isZero(0.0); ++j) {
        VecX cand = VecX::Zero(D);
        cand(j) = 1.0;
        for (int p = 0; p < k; ++p)
          cand -= m.components.col(p).dot(cand) * m.components.col(p);
        const double rn = cand.norm();
        if (rn > 1e-6) v = cand / rn;
      }
      if (v.isZero(0.0))
        throw std::runtime_error("contact map: basis completion failed");
    }
    fix_sign(v);
    m.components.col(k) = v;
  }
  return m;
}

MatX pca_transform(const PcaModel& m, const MatX& data) {
  return zscore(m, data) * m.components;
}

MatX pca_reconstruct(const PcaModel& m, const MatX& scores) {
  const MatX z = scores * m.components.transpose();
  MatX out(z.rows(), z.cols());
  for (int c = 0; c < z.cols(); ++c) {
    if (m.stddev(c) > 0.0)
      out.col(c) = z.col(c).array() * m.stddev(c) + m.mean(c);
    else
      out.col(c).setConstant(m.mean(c));
  }
  return out;
}

std::vector<int> farthest_point_indices(const MatX& data, int k) {
  const int n = int(data.rows());
  if (n == 0 || k < 1) return {};
  k = std::min(k, n);
  std::vector<int> picked{0};
  VecX min_dist(n);
  for (int i = 0; i < n; ++i) min_dist(i) = (data.row(i) - data.row(0)).norm();
  while (int(picked.size()) < k) {
    int arg = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
      if (min_dist(i) > best) {
        best = min_dist(i);
        arg = i;
      }
    }
    picked.push_back(arg);
    for (int i = 0; i < n; ++i)
      min_dist(i) = std::min(min_dist(i), (data.row(i) - data.row(arg)).norm());
  }
  return picked;
}

void write_scores_csv(const std::string& path, const std::vector<std::string>& ids,
                      const MatX& scores) {
  if (int(ids.size()) != int(scores.rows()))
    throw std::invalid_argument("contact map: id count does not match score rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "grasp_id";
  for (int c = 0; c < scores.cols(); ++c) out << ",pc" << (c + 1);
  out << "\n";
  char buf[40];
  for (int r = 0; r < scores.rows(); ++r) {
    out << ids[r];
    for (int c = 0; c < scores.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.12g", scores(r, c));
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_omega_binary(const std::string& bin_path, const std::string& json_path,
                        const MatX& omega, const nlohmann::ordered_json& extra_meta) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + bin_path);
  static_assert(sizeof(double) == 8);
  for (int r = 0; r < omega.rows(); ++r)
    for (int c = 0; c < omega.cols(); ++c) {
      const double v = omega(r, c);
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      unsigned char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = (bits >> (8 * b)) & 0xff;
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  if (!out) throw std::runtime_error("write failed: " + bin_path);
  out.close();

  nlohmann::ordered_json meta;
  meta["dtype"] = "float64";
  meta["byte_order"] = "little";
  meta["order"] = "row_major";
  meta["rows"] = omega.rows();
  meta["cols"] = omega.cols();
  for (const auto& [key, value] : extra_meta.items()) meta[key] = value;
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw std::runtime_error("cannot open output file: " + json_path);
  js << meta.dump(2) << "\n";
  if (!js) throw std::runtime_error("write failed: " + json_path);
}

MatX read_omega_binary(const std::string& bin_path, const std::string& json_path) {
  std::ifstream js(json_path, std::ios::binary);
  if (!js) throw std::invalid_argument("cannot open sidecar: " + json_path);
  nlohmann::json meta;
  js >> meta;
  const int rows = meta.at("rows").get<int>();
  const int cols = meta.at("cols").get<int>();
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open matrix file: " + bin_path);
  MatX out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8))
        throw std::invalid_argument("matrix file truncated: " + bin_path);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
      double v;
      std::memcpy(&v, &bits, 8);
      out(r, c) = v;
    }
  return out;
}

}  // namespace gsynth
