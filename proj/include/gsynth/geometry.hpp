#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gsynth/types.hpp"

namespace gsynth {

// ---------------------------------------------------------------------------
// Triangle mesh with acceleration structure.
//
// V is n x 3, F is m x 3 with 0-based indices. finalize() must be called
// before any query; it builds the AABB tree, face normals, areas and the
// watertightness flag. Signed queries are only defined on watertight meshes.
// ---------------------------------------------------------------------------
struct TriMesh {
  Eigen::MatrixX3d V;
  Eigen::MatrixX3i F;

  void finalize();
  bool finalized() const { return !nodes_.empty() || F.rows() == 0; }

  bool watertight() const { return watertight_; }
  double area() const { return total_area_; }
  const Eigen::MatrixX3d& face_normals() const { return face_normals_; }
  const VecX& face_areas() const { return face_areas_; }

  struct Nearest {
    double dist = 0.0;  // unsigned
    int face = -1;
    Vec3 point = Vec3::Zero();
  };

  /// Closest surface point; ties broken toward the lowest face index.
  Nearest nearest(const Vec3& p) const;

  /// Crossing parity of a ray from p (1 = inside for watertight meshes).
  /// Degenerate hits retry along a different fixed direction.
  int ray_parity(const Vec3& p) const;

  /// Minimum surface-to-surface distance against another mesh, with poses.
  /// Stops early once a pair below `cutoff` is found.
  double surface_distance(const Pose& self_pose, const TriMesh& other,
                          const Pose& other_pose, double cutoff) const;

  Vec3 aabb_min() const { return bb_min_; }
  Vec3 aabb_max() const { return bb_max_; }

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;  // internal children, or
    int begin = 0, end = 0;     // leaf triangle range into order_
  };
  void build(int node, int begin, int end, std::vector<Vec3>& centroids);
  void nearest_rec(int node, const Vec3& p, Nearest& best) const;
  int ray_count_rec(int node, const Vec3& org, const Vec3& dir, bool& bad) const;

  std::vector<Node> nodes_;
  std::vector<int> order_;
  Eigen::MatrixX3d face_normals_;
  VecX face_areas_;
  double total_area_ = 0.0;
  bool watertight_ = false;
  Vec3 bb_min_ = Vec3::Zero(), bb_max_ = Vec3::Zero();
};

TriMesh load_obj(const std::string& path);
TriMesh load_stl(const std::string& path);

/// Unit-style icosphere: subdivided icosahedron scaled to `radius`.
TriMesh make_icosphere(double radius, int subdivisions);

// ---------------------------------------------------------------------------
// Object model: one rigid solid with a pose. Analytic shapes carry exact
// distance fields; meshes answer queries through the AABB tree with the sign
// from ray parity. All lengths are meters, all query points world frame.
// ---------------------------------------------------------------------------
enum class ShapeKind { Sphere, Box, Cylinder, Mesh };

struct ObjectModel {
  ShapeKind kind = ShapeKind::Sphere;
  double radius = 0.0;                  // sphere, cylinder
  Vec3 half_extents = Vec3::Zero();     // box
  double half_height = 0.0;             // cylinder, along local z
  std::shared_ptr<const TriMesh> mesh;  // mesh
  Pose pose = Pose::Identity();
  std::string id = "object";
};

ObjectModel make_sphere(double radius, const Pose& pose = Pose::Identity());
ObjectModel make_box(const Vec3& half_extents, const Pose& pose = Pose::Identity());
ObjectModel make_cylinder(double radius, double half_height,
                          const Pose& pose = Pose::Identity());
ObjectModel make_mesh_object(std::shared_ptr<const TriMesh> mesh,
                             const Pose& pose = Pose::Identity());

/// Signed distance to the object's surface, negative inside. Exact for
/// analytic shapes; for meshes nearest-triangle distance signed by ray
/// parity. Throws std::runtime_error for meshes that are not watertight.
double signed_distance(const ObjectModel& o, const Vec3& p);

/// Gradient of signed_distance; unit norm almost everywhere. On the medial
/// axis / crease sets the lower-index branch is returned.
Vec3 sdf_gradient(const ObjectModel& o, const Vec3& p);

/// Closest point on the surface. Idempotent: projecting a projection moves
/// it less than 1e-9.
Vec3 project_to_surface(const ObjectModel& o, const Vec3& p);

/// Outward unit normal at the surface point nearest to p. Face-normal of the
/// nearest triangle for meshes (ties toward the lowest face index).
Vec3 surface_normal(const ObjectModel& o, const Vec3& p);

/// Derivative of surface_normal(o, x) with respect to x, taken almost
/// everywhere (zero on the flat pieces of boxes and mesh faces).
Mat3 normal_jacobian(const ObjectModel& o, const Vec3& p);

struct SurfaceSample {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  double weight = 0.0;  // area / count, uniform across the draw
};

/// Area-weighted surface samples with outward normals, world frame.
std::vector<SurfaceSample> sample_surface(const ObjectModel& o, int count,
                                          std::uint64_t seed);

/// True iff the two posed solids overlap; surface contact within 1e-6 counts.
/// Exact for sphere-vs-anything, box-box and mesh-mesh; the remaining pairs
/// fall back to dense deterministic cross-sampling and are resolution
/// limited for features below a few millimeters.
bool meshes_intersect(const ObjectModel& a, const ObjectModel& b);

/// Max distance of any surface point from the object frame origin.
double bounding_radius(const ObjectModel& o);

/// Reference point used for approach directions; the object frame origin.
Vec3 object_centroid(const ObjectModel& o);

}  // namespace gsynth
