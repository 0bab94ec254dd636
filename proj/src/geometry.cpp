#include "gsynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsynth/rng.hpp"

namespace gsynth {

ObjectModel make_sphere(double radius, const Pose& pose) {
  ObjectModel o;
  o.kind = ShapeKind::Sphere;
  o.radius = radius;
  o.pose = pose;
  o.id = "sphere";
  return o;
}

ObjectModel make_box(const Vec3& half_extents, const Pose& pose) {
  ObjectModel o;
  o.kind = ShapeKind::Box;
  o.half_extents = half_extents;
  o.pose = pose;
  o.id = "box";
  return o;
}

ObjectModel make_cylinder(double radius, double half_height, const Pose& pose) {
  ObjectModel o;
  o.kind = ShapeKind::Cylinder;
  o.radius = radius;
  o.half_height = half_height;
  o.pose = pose;
  o.id = "cylinder";
  return o;
}

ObjectModel make_mesh_object(std::shared_ptr<const TriMesh> mesh, const Pose& pose) {
  if (!mesh || !mesh->finalized())
    throw std::runtime_error("mesh object requires a finalized mesh");
  ObjectModel o;
  o.kind = ShapeKind::Mesh;
  o.mesh = std::move(mesh);
  o.pose = pose;
  o.id = "mesh";
  return o;
}

namespace {

// Local-frame signed distance for the box, exact inside and out.
double box_sdf_local(const Vec3& h, const Vec3& p) {
  const Vec3 q = p.cwiseAbs() - h;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

// Lowest index among the maximal components of q; the crease tie-break.
int box_max_axis(const Vec3& q) {
  int ax = 0;
  for (int k = 1; k < 3; ++k)
    if (q(k) > q(ax)) ax = k;
  return ax;
}

Vec3 box_grad_local(const Vec3& h, const Vec3& p) {
  const Vec3 q = p.cwiseAbs() - h;
  if ((q.array() > 0.0).any()) {
    Vec3 g = q.cwiseMax(0.0);
    const double n = g.norm();
    for (int k = 0; k < 3; ++k) g(k) = (p(k) < 0.0 ? -g(k) : g(k));
    return g / n;
  }
  const int ax = box_max_axis(q);
  Vec3 g = Vec3::Zero();
  g(ax) = (p(ax) < 0.0 ? -1.0 : 1.0);
  return g;
}

Vec3 box_project_local(const Vec3& h, const Vec3& p) {
  const Vec3 q = p.cwiseAbs() - h;
  if ((q.array() > 0.0).any())
    return p.cwiseMax(-h).cwiseMin(h);
  const int ax = box_max_axis(q);
  Vec3 r = p;
  r(ax) = (p(ax) < 0.0 ? -h(ax) : h(ax));
  return r;
}

struct CylParts {
  double rho;     // radial distance in the xy plane
  double dr;      // rho - radius
  double dz;      // |z| - half_height
  Vec2 radial;    // unit radial direction, (1,0) at the axis
};

CylParts cyl_parts(const ObjectModel& o, const Vec3& p) {
  CylParts c;
  c.rho = std::hypot(p.x(), p.y());
  c.dr = c.rho - o.radius;
  c.dz = std::abs(p.z()) - o.half_height;
  c.radial = (c.rho < 1e-12) ? Vec2(1.0, 0.0) : Vec2(p.x() / c.rho, p.y() / c.rho);
  return c;
}

double cyl_sdf_local(const ObjectModel& o, const Vec3& p) {
  const CylParts c = cyl_parts(o, p);
  const double outside =
      std::hypot(std::max(c.dr, 0.0), std::max(c.dz, 0.0));
  const double inside = std::min(std::max(c.dr, c.dz), 0.0);
  return outside + inside;
}

Vec3 cyl_grad_local(const ObjectModel& o, const Vec3& p) {
  const CylParts c = cyl_parts(o, p);
  const double zs = (p.z() < 0.0 ? -1.0 : 1.0);
  if (c.dr > 0.0 || c.dz > 0.0) {
    const double gr = std::max(c.dr, 0.0);
    const double gz = std::max(c.dz, 0.0);
    const double n = std::hypot(gr, gz);
    return Vec3(c.radial.x() * gr / n, c.radial.y() * gr / n, zs * gz / n);
  }
  // Inside: the larger (less negative) of dr, dz wins; ties go to the side.
  if (c.dr >= c.dz) return Vec3(c.radial.x(), c.radial.y(), 0.0);
  return Vec3(0.0, 0.0, zs);
}

Vec3 cyl_project_local(const ObjectModel& o, const Vec3& p) {
  const CylParts c = cyl_parts(o, p);
  const double zs = (p.z() < 0.0 ? -1.0 : 1.0);
  if (c.dr > 0.0 && c.dz > 0.0) {
    return Vec3(c.radial.x() * o.radius, c.radial.y() * o.radius,
                zs * o.half_height);
  }
  if (c.dr > 0.0)
    return Vec3(c.radial.x() * o.radius, c.radial.y() * o.radius, p.z());
  if (c.dz > 0.0)
    return Vec3(p.x(), p.y(), zs * o.half_height);
  if (c.dr >= c.dz)
    return Vec3(c.radial.x() * o.radius, c.radial.y() * o.radius, p.z());
  return Vec3(p.x(), p.y(), zs * o.half_height);
}

const TriMesh& checked_mesh(const ObjectModel& o) {
  if (!o.mesh) throw std::runtime_error("mesh object has no mesh");
  return *o.mesh;
}

}  // namespace

double signed_distance(const ObjectModel& o, const Vec3& p) {
  const Vec3 q = o.pose.inverse() * p;
  switch (o.kind) {
    case ShapeKind::Sphere:
      return q.norm() - o.radius;
    case ShapeKind::Box:
      return box_sdf_local(o.half_extents, q);
    case ShapeKind::Cylinder:
      return cyl_sdf_local(o, q);
    case ShapeKind::Mesh: {
      const TriMesh& m = checked_mesh(o);
      if (!m.watertight())
        throw std::runtime_error(
            "signed_distance: mesh is not watertight, sign undefined");
      const TriMesh::Nearest n = m.nearest(q);
      return m.ray_parity(q) ? -n.dist : n.dist;
    }
  }
  return 0.0;
}

Vec3 sdf_gradient(const ObjectModel& o, const Vec3& p) {
  const Vec3 q = o.pose.inverse() * p;
  Vec3 g;
  switch (o.kind) {
    case ShapeKind::Sphere:
      g = (q.norm() < 1e-12) ? Vec3::UnitX() : q.normalized();
      break;
    case ShapeKind::Box:
      g = box_grad_local(o.half_extents, q);
      break;
    case ShapeKind::Cylinder:
      g = cyl_grad_local(o, q);
      break;
    case ShapeKind::Mesh: {
      const TriMesh& m = checked_mesh(o);
      const TriMesh::Nearest n = m.nearest(q);
      const bool inside = m.watertight() && m.ray_parity(q);
      if (n.dist < 1e-9) {
        g = m.face_normals().row(n.face);
      } else {
        g = (q - n.point) / n.dist;
        if (inside) g = -g;
      }
      break;
    }
  }
  return o.pose.linear() * g;
}

Vec3 project_to_surface(const ObjectModel& o, const Vec3& p) {
  const Vec3 q = o.pose.inverse() * p;
  Vec3 s;
  switch (o.kind) {
    case ShapeKind::Sphere:
      s = (q.norm() < 1e-12) ? Vec3(o.radius, 0.0, 0.0)
                             : Vec3(o.radius * q.normalized());
      break;
    case ShapeKind::Box:
      s = box_project_local(o.half_extents, q);
      break;
    case ShapeKind::Cylinder:
      s = cyl_project_local(o, q);
      break;
    case ShapeKind::Mesh:
      s = checked_mesh(o).nearest(q).point;
      break;
  }
  return o.pose * s;
}

Vec3 surface_normal(const ObjectModel& o, const Vec3& p) {
  if (o.kind == ShapeKind::Mesh) {
    const TriMesh& m = checked_mesh(o);
    const TriMesh::Nearest n = m.nearest(o.pose.inverse() * p);
    return o.pose.linear() * Vec3(m.face_normals().row(n.face));
  }
  return sdf_gradient(o, project_to_surface(o, p));
}

Mat3 normal_jacobian(const ObjectModel& o, const Vec3& p) {
  const Vec3 q = o.pose.inverse() * p;
  Mat3 J = Mat3::Zero();
  switch (o.kind) {
    case ShapeKind::Sphere: {
      const double d = q.norm();
      if (d > 1e-9) {
        const Vec3 u = q / d;
        J = (Mat3::Identity() - u * u.transpose()) / d;
      }
      break;
    }
    case ShapeKind::Cylinder: {
      const CylParts c = cyl_parts(o, q);
      // The normal varies only where the side wall governs the projection.
      const bool side = (c.dr > 0.0 && c.dz <= 0.0) ||
                        (c.dr <= 0.0 && c.dz <= 0.0 && c.dr >= c.dz);
      if (side && c.rho > 1e-9) {
        const Vec3 u(c.radial.x(), c.radial.y(), 0.0);
        Mat3 P = Mat3::Zero();
        P(0, 0) = P(1, 1) = 1.0;
        J = (P - u * u.transpose()) / c.rho;
        J.row(2).setZero();
        J.col(2).setZero();
      }
      break;
    }
    case ShapeKind::Box:
    case ShapeKind::Mesh:
      break;  // piecewise-constant normals
  }
  return o.pose.linear() * J * o.pose.linear().transpose();
}

std::vector<SurfaceSample> sample_surface(const ObjectModel& o, int count,
                                          std::uint64_t seed) {
  if (count <= 0) return {};
  Rng rng({0x5a3f0ace5ull, seed});
  std::vector<SurfaceSample> out;
  out.reserve(count);

  auto emit_local = [&](const Vec3& pos, const Vec3& nrm, double w) {
    SurfaceSample s;
    s.position = o.pose * pos;
    s.normal = o.pose.linear() * nrm;
    s.weight = w;
    out.push_back(s);
  };

  switch (o.kind) {
    case ShapeKind::Sphere: {
      const double w = 4.0 * M_PI * o.radius * o.radius / count;
      for (int i = 0; i < count; ++i) {
        const Vec3 d = rng.unit_vec3();
        emit_local(o.radius * d, d, w);
      }
      break;
    }
    case ShapeKind::Box: {
      const Vec3& h = o.half_extents;
      const double fa[3] = {4.0 * h.y() * h.z(), 4.0 * h.x() * h.z(),
                            4.0 * h.x() * h.y()};
      const double total = 2.0 * (fa[0] + fa[1] + fa[2]);
      const double w = total / count;
      for (int i = 0; i < count; ++i) {
        double r = rng.uniform() * total;
        int ax = 0;
        double sign = 1.0;
        for (int k = 0; k < 3; ++k) {
          if (r < fa[k]) { ax = k; sign = 1.0; break; }
          r -= fa[k];
          if (r < fa[k]) { ax = k; sign = -1.0; break; }
          r -= fa[k];
        }
        Vec3 p;
        p(ax) = sign * h(ax);
        const int u = (ax + 1) % 3, v = (ax + 2) % 3;
        p(u) = rng.uniform(-h(u), h(u));
        p(v) = rng.uniform(-h(v), h(v));
        Vec3 n = Vec3::Zero();
        n(ax) = sign;
        emit_local(p, n, w);
      }
      break;
    }
    case ShapeKind::Cylinder: {
      const double side = 2.0 * M_PI * o.radius * 2.0 * o.half_height;
      const double cap = M_PI * o.radius * o.radius;
      const double total = side + 2.0 * cap;
      const double w = total / count;
      for (int i = 0; i < count; ++i) {
        const double r = rng.uniform() * total;
        if (r < side) {
          const double a = rng.uniform(0.0, 2.0 * M_PI);
          const double z = rng.uniform(-o.half_height, o.half_height);
          const Vec3 n(std::cos(a), std::sin(a), 0.0);
          emit_local(Vec3(o.radius * n.x(), o.radius * n.y(), z), n, w);
        } else {
          const double sign = (r < side + cap) ? 1.0 : -1.0;
          const double rad = o.radius * std::sqrt(rng.uniform());
          const double a = rng.uniform(0.0, 2.0 * M_PI);
          emit_local(Vec3(rad * std::cos(a), rad * std::sin(a),
                          sign * o.half_height),
                     Vec3(0.0, 0.0, sign), w);
        }
      }
      break;
    }
    case ShapeKind::Mesh: {
      const TriMesh& m = checked_mesh(o);
      const VecX& fa = m.face_areas();
      VecX cdf(fa.size());
      double acc = 0.0;
      for (int i = 0; i < fa.size(); ++i) cdf(i) = (acc += fa(i));
      const double w = m.area() / count;
      for (int i = 0; i < count; ++i) {
        const double r = rng.uniform() * m.area();
        const int f = int(std::lower_bound(cdf.data(), cdf.data() + cdf.size(), r) -
                          cdf.data());
        const int fc = std::min<int>(f, int(fa.size()) - 1);
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) { u = 1.0 - u; v = 1.0 - v; }
        const Vec3 a = m.V.row(m.F(fc, 0)), b = m.V.row(m.F(fc, 1)),
                   c = m.V.row(m.F(fc, 2));
        emit_local(a + u * (b - a) + v * (c - a), m.face_normals().row(fc), w);
      }
      break;
    }
  }
  return out;
}

double bounding_radius(const ObjectModel& o) {
  switch (o.kind) {
    case ShapeKind::Sphere:
      return o.radius;
    case ShapeKind::Box:
      return o.half_extents.norm();
    case ShapeKind::Cylinder:
      return std::hypot(o.radius, o.half_height);
    case ShapeKind::Mesh: {
      const TriMesh& m = checked_mesh(o);
      double r = 0.0;
      for (int i = 0; i < m.V.rows(); ++i)
        r = std::max(r, m.V.row(i).norm());
      return r;
    }
  }
  return 0.0;
}

Vec3 object_centroid(const ObjectModel& o) { return o.pose.translation(); }

namespace {

constexpr double kContactTol = 1e-6;

bool box_box_intersect(const ObjectModel& a, const ObjectModel& b) {
  // Separating axis test: 3 + 3 face axes and 9 edge cross products.
  const Mat3 Ra = a.pose.linear(), Rb = b.pose.linear();
  const Mat3 R = Ra.transpose() * Rb;
  const Vec3 t = Ra.transpose() * (b.pose.translation() - a.pose.translation());
  const Mat3 absR = R.cwiseAbs() + Mat3::Constant(1e-12);
  const Vec3& ha = a.half_extents;
  const Vec3& hb = b.half_extents;
  for (int i = 0; i < 3; ++i) {
    const double ra = ha(i);
    const double rb = absR.row(i).dot(hb);
    if (std::abs(t(i)) > ra + rb + kContactTol) return false;
  }
  for (int j = 0; j < 3; ++j) {
    const double ra = absR.col(j).dot(ha);
    const double rb = hb(j);
    if (std::abs(t.dot(R.col(j))) > ra + rb + kContactTol) return false;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      const double ra = ha(i1) * absR(i2, j) + ha(i2) * absR(i1, j);
      const double rb = hb(j1) * absR(i, j2) + hb(j2) * absR(i, j1);
      const double tl = std::abs(t(i2) * R(i1, j) - t(i1) * R(i2, j));
      const double axis_norm =
          std::hypot(R(i1, j), R(i2, j));  // |e_i x R e_j|
      if (axis_norm < 1e-9) continue;      // parallel edges, axis degenerate
      if (tl > ra + rb + kContactTol) return false;
    }
  }
  return true;
}

bool cross_sample_intersect(const ObjectModel& a, const ObjectModel& b) {
  // Fallback: dense deterministic surface samples of each solid against the
  // other's SDF, plus a containment probe each way.
  if (signed_distance(b, a.pose.translation()) <= kContactTol) return true;
  if (signed_distance(a, b.pose.translation()) <= kContactTol) return true;
  const int n = 2048;
  for (const SurfaceSample& s : sample_surface(a, n, 71u))
    if (signed_distance(b, s.position) <= kContactTol) return true;
  for (const SurfaceSample& s : sample_surface(b, n, 72u))
    if (signed_distance(a, s.position) <= kContactTol) return true;
  return false;
}

}  // namespace

bool meshes_intersect(const ObjectModel& a, const ObjectModel& b) {
  // Sphere against anything is exact: the SDF evaluated at the center.
  if (a.kind == ShapeKind::Sphere)
    return signed_distance(b, a.pose.translation()) <= a.radius + kContactTol;
  if (b.kind == ShapeKind::Sphere)
    return signed_distance(a, b.pose.translation()) <= b.radius + kContactTol;
  if (a.kind == ShapeKind::Box && b.kind == ShapeKind::Box)
    return box_box_intersect(a, b);
  if (a.kind == ShapeKind::Mesh && b.kind == ShapeKind::Mesh) {
    const TriMesh& ma = checked_mesh(a);
    const TriMesh& mb = checked_mesh(b);
    if (ma.surface_distance(a.pose, mb, b.pose, kContactTol) <= kContactTol)
      return true;
    // Disjoint surfaces can still mean containment.
    const Vec3 va = a.pose * Vec3(ma.V.row(0));
    const Vec3 vb = b.pose * Vec3(mb.V.row(0));
    if (mb.watertight() && signed_distance(b, va) < 0.0) return true;
    if (ma.watertight() && signed_distance(a, vb) < 0.0) return true;
    return false;
  }
  return cross_sample_intersect(a, b);
}

}  // namespace gsynth
