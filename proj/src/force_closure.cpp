#include "gsynth/force_closure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace gsynth {

Eigen::Matrix<double, 6, Eigen::Dynamic> wrench_basis(const Mat3X& x) {
  const int n = int(x.cols());
  Eigen::Matrix<double, 6, Eigen::Dynamic> G(6, 3 * n);
  for (int i = 0; i < n; ++i) {
    G.block<3, 3>(0, 3 * i) = Mat3::Identity();
    G.block<3, 3>(3, 3 * i) = skew(x.col(i));
  }
  return G;
}

void jacobi_eigen6(const Mat6& M, Vec6& evals, Mat6& evecs) {
  Mat6 A = 0.5 * (M + M.transpose());
  Mat6 V = Mat6::Identity();
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 6; ++p)
      for (int q = p + 1; q < 6; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-28 * scale * scale) break;
    for (int p = 0; p < 6; ++p) {
      for (int q = p + 1; q < 6; ++q) {
        if (std::abs(A(p, q)) < 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 6; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 6; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < 6; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::array<int, 6> order{0, 1, 2, 3, 4, 5};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return A(a, a) < A(b, b); });
  for (int k = 0; k < 6; ++k) {
    evals(k) = A(order[k], order[k]);
    evecs.col(k) = V.col(order[k]);
  }
}

bool in_friction_cone(const Vec3& f, const Vec3& c_inward, double mu) {
  return f.dot(c_inward.normalized()) > f.norm() / std::sqrt(mu * mu + 1.0);
}

namespace {

void check_params(const FCParams& p, int n) {
  if (n < 2) throw std::invalid_argument("relaxed_fc: need at least 2 contacts");
  if (!(p.epsilon > 0.0) || !(p.delta > 0.0) || !(p.mu > 0.0) || p.w < 0.0)
    throw std::invalid_argument("relaxed_fc: parameters out of range");
}

struct LocalContacts {
  Mat3X x;   // object frame positions
  Mat3X c;   // object frame inward normals
  VecX sdf;  // signed distance per contact
};

LocalContacts to_local(const Mat3X& pw, const ObjectModel& obj) {
  const int n = int(pw.cols());
  LocalContacts lc;
  lc.x.resize(3, n);
  lc.c.resize(3, n);
  lc.sdf.resize(n);
  const Pose inv = obj.pose.inverse();
  const Mat3 Rt = obj.pose.linear().transpose();
  for (int i = 0; i < n; ++i) {
    const Vec3 p = pw.col(i);
    lc.x.col(i) = inv * p;
    lc.c.col(i) = Rt * (-sdf_gradient(obj, p));
    lc.sdf(i) = signed_distance(obj, p);
  }
  return lc;
}

}  // namespace

FCValue relaxed_fc(const Mat3X& positions_world, const ObjectModel& obj,
                   const FCParams& p) {
  check_params(p, int(positions_world.cols()));
  const LocalContacts lc = to_local(positions_world, obj);
  const auto G = wrench_basis(lc.x);
  const Mat6 M = G * G.transpose();
  Vec6 evals;
  Mat6 evecs;
  jacobi_eigen6(M, evals, evecs);

  FCValue out;
  out.lambda_min = evals(0);
  out.eig_term = p.literal_eig ? (evals(0) - p.epsilon)
                               : std::max(0.0, p.epsilon - evals(0));
  Vec6 gc = Vec6::Zero();
  for (int i = 0; i < lc.x.cols(); ++i) {
    gc.head<3>() += lc.c.col(i);
    gc.tail<3>() += lc.x.col(i).cross(Vec3(lc.c.col(i)));
  }
  out.gc_norm = gc.norm();
  out.sdf_term = lc.sdf.cwiseMax(0.0).sum();
  out.value = out.eig_term + out.gc_norm + p.w * out.sdf_term;
  return out;
}

FCValue relaxed_fc_grad(const Mat3X& positions_world, const ObjectModel& obj,
                        const FCParams& p, Mat3X& dpositions) {
  const int n = int(positions_world.cols());
  check_params(p, n);
  const LocalContacts lc = to_local(positions_world, obj);
  const Mat3 R = obj.pose.linear();
  const Mat3 Rt = R.transpose();

  const auto G = wrench_basis(lc.x);
  const Mat6 M = G * G.transpose();
  Vec6 evals;
  Mat6 evecs;
  jacobi_eigen6(M, evals, evecs);

  FCValue out;
  out.lambda_min = evals(0);
  out.eig_term = p.literal_eig ? (evals(0) - p.epsilon)
                               : std::max(0.0, p.epsilon - evals(0));

  Vec6 gc = Vec6::Zero();
  for (int i = 0; i < n; ++i) {
    gc.head<3>() += lc.c.col(i);
    gc.tail<3>() += lc.x.col(i).cross(Vec3(lc.c.col(i)));
  }
  out.gc_norm = gc.norm();
  out.sdf_term = lc.sdf.cwiseMax(0.0).sum();
  out.value = out.eig_term + out.gc_norm + p.w * out.sdf_term;

  dpositions.setZero(3, n);

  // Eigenvalue term: d(l0)/dx_i = 2 (a_i x v_tau), a_i = block i of G^T v0.
  const bool eig_active = p.literal_eig || evals(0) < p.epsilon;
  const double eig_sign = p.literal_eig ? 1.0 : -1.0;
  const Vec3 v_tau = evecs.col(0).tail<3>();
  const Vec3 v_f = evecs.col(0).head<3>();
  if (eig_active) {
    for (int i = 0; i < n; ++i) {
      const Vec3 a_i = v_f - lc.x.col(i).cross(v_tau);  // (G^T v0) block i
      dpositions.col(i) += eig_sign * 2.0 * a_i.cross(v_tau);
    }
  }

  // ||Gc|| term, including the contact-normal field curvature dc/dx = -H.
  if (out.gc_norm > 1e-12) {
    const Vec3 gf = gc.head<3>() / out.gc_norm;
    const Vec3 gt = gc.tail<3>() / out.gc_norm;
    for (int i = 0; i < n; ++i) {
      const Mat3 Jn_world = normal_jacobian(obj, Vec3(positions_world.col(i)));
      const Mat3 Jc = Rt * (-Jn_world) * R;  // local d(c_i)/d(x_i)
      const Vec3 ci = lc.c.col(i), xi = lc.x.col(i);
      dpositions.col(i) += ci.cross(gt) + Jc.transpose() * (gf + gt.cross(xi));
    }
  }

  // Contact surface term: active where the contact floats off the surface.
  for (int i = 0; i < n; ++i) {
    if (lc.sdf(i) > 0.0)
      dpositions.col(i) +=
          p.w * (Rt * sdf_gradient(obj, Vec3(positions_world.col(i))));
  }

  // Back to the world frame.
  dpositions = R * dpositions;
  return out;
}

ConstraintsReport relaxed_constraints_check(const Mat3X& positions_world,
                                            const ObjectModel& obj,
                                            const FCParams& p) {
  const FCValue v = relaxed_fc(positions_world, obj, p);
  ConstraintsReport r;
  r.lambda_min = v.lambda_min;
  r.gc_norm = v.gc_norm;
  r.max_abs_sdf = 0.0;
  for (int i = 0; i < positions_world.cols(); ++i)
    r.max_abs_sdf = std::max(
        r.max_abs_sdf, std::abs(signed_distance(obj, Vec3(positions_world.col(i)))));
  r.eig_ok = v.lambda_min >= p.epsilon;
  r.gc_ok = v.gc_norm < p.delta;
  r.surface_ok = r.max_abs_sdf <= p.surface_tol;
  r.pass = r.eig_ok && r.gc_ok && r.surface_ok;
  return r;
}

namespace {

// Beasley-Springer-Moro inverse normal CDF; plenty for direction generation.
double inv_normal_cdf(double u) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (u > phigh) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = u - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

bool oracle_force_closure(const Mat3X& positions, const Mat3X& inward_normals,
                          const OracleParams& op) {
  const int n = int(positions.cols());
  if (inward_normals.cols() != n)
    throw std::invalid_argument("oracle_force_closure: positions/normals size mismatch");
  // A single contact can never span opposing wrenches; not an error, just a refusal.
  if (n < 2) return false;
  if (op.cone_facets < 4)
    throw std::invalid_argument("oracle_force_closure: cone_facets must be >= 4");
  if (op.directions < 1000)
    throw std::invalid_argument("oracle_force_closure: directions must be >= 1000");

  const int K = op.cone_facets;
  std::vector<Vec6> gen;
  gen.reserve(n * K);
  for (int i = 0; i < n; ++i) {
    const Vec3 c = inward_normals.col(i).normalized();
    int kmin;
    c.cwiseAbs().minCoeff(&kmin);
    const Vec3 t1 = c.cross(Vec3::Unit(kmin)).normalized();
    const Vec3 t2 = c.cross(t1);
    for (int k = 0; k < K; ++k) {
      const double a = 2.0 * M_PI * k / K;
      const Vec3 f = (c + op.mu * (std::cos(a) * t1 + std::sin(a) * t2)).normalized();
      Vec6 w;
      w.head<3>() = f;
      w.tail<3>() = positions.col(i).cross(f);
      gen.push_back(w / w.norm());
    }
  }

  auto covered = [&](const Vec6& u) {
    for (const Vec6& w : gen)
      if (u.dot(w) > op.margin) return true;
    return false;
  };

  // Least-covered spectral directions first: bottom eigenvector of the
  // generator second moment catches exact null spaces at any resolution.
  Mat6 S = Mat6::Zero();
  for (const Vec6& w : gen) S += w * w.transpose();
  Vec6 evals;
  Mat6 evecs;
  jacobi_eigen6(S, evals, evecs);
  const Vec6 weak = evecs.col(0);
  if (!covered(weak) || !covered(Vec6(-weak))) return false;
  for (int k = 0; k < 6; ++k) {
    Vec6 e = Vec6::Zero();
    e(k) = 1.0;
    if (!covered(e)) return false;
    e(k) = -1.0;
    if (!covered(e)) return false;
  }

  // Kronecker lattice mapped to the sphere.
  static const double alpha[6] = {
      1.4142135623730951, 1.7320508075688772, 2.2360679774997896,
      2.6457513110645907, 3.3166247903554, 3.605551275463989};
  for (int i = 0; i < op.directions; ++i) {
    Vec6 z;
    for (int k = 0; k < 6; ++k) {
      double u = std::fmod((i + 1) * alpha[k], 1.0);
      u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
      z(k) = inv_normal_cdf(u);
    }
    const double nz = z.norm();
    if (nz < 1e-9) continue;
    if (!covered(Vec6(z / nz))) return false;
  }
  return true;
}

ContactSet make_contact_set(const std::vector<int>& cloud_indices) {
  const int n = int(cloud_indices.size());
  if (n < 2 || n > 8)
    throw std::invalid_argument("contact set size must be in [2, 8]");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (cloud_indices[i] == cloud_indices[j])
        throw std::invalid_argument("contact set indices must be distinct");
  ContactSet cs;
  cs.cloud_index = cloud_indices;
  cs.positions.setZero(3, n);
  cs.inward_normals.setZero(3, n);
  return cs;
}

void refresh_contacts(ContactSet& contacts, const SurfaceCloud& cloud,
                      const ObjectModel& obj) {
  const int n = contacts.size();
  for (int i = 0; i < n; ++i) {
    const int idx = contacts.cloud_index[i];
    if (idx < 0 || idx >= cloud.size())
      throw std::invalid_argument("contact cloud index out of range");
    contacts.positions.col(i) = cloud.positions.col(idx);
    contacts.inward_normals.col(i) =
        -sdf_gradient(obj, Vec3(cloud.positions.col(idx)));
  }
}

}  // namespace gsynth
