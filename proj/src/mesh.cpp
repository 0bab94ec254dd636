#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "gsynth/geometry.hpp"

namespace gsynth {

namespace {

// Ericson-style closest point on a triangle.
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double point_aabb_dist(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.cwiseMax(lo).cwiseMin(hi) - p).norm();
}

double seg_seg_dist(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-18 && e <= 1e-18) return r.norm();
  if (a <= 1e-18) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-18) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = (denom > 1e-18) ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return (p1 + s * d1 - (p2 + t * d2)).norm();
}

// Segment against triangle; true iff the segment pierces the triangle plane
// strictly inside the triangle.
bool seg_tri_intersect(const Vec3& p, const Vec3& q, const Vec3& a,
                       const Vec3& b, const Vec3& c) {
  const Vec3 dir = q - p;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-16) return false;
  const double inv = 1.0 / det;
  const Vec3 tv = p - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = e2.dot(qv) * inv;
  return t >= 0.0 && t <= 1.0;
}

double tri_tri_dist(const std::array<Vec3, 3>& A, const std::array<Vec3, 3>& B) {
  for (int i = 0; i < 3; ++i) {
    if (seg_tri_intersect(A[i], A[(i + 1) % 3], B[0], B[1], B[2])) return 0.0;
    if (seg_tri_intersect(B[i], B[(i + 1) % 3], A[0], A[1], A[2])) return 0.0;
  }
  double d = std::numeric_limits<double>::max();
  for (int i = 0; i < 3; ++i) {
    d = std::min(d, (A[i] - closest_on_triangle(A[i], B[0], B[1], B[2])).norm());
    d = std::min(d, (B[i] - closest_on_triangle(B[i], A[0], A[1], A[2])).norm());
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      d = std::min(d, seg_seg_dist(A[i], A[(i + 1) % 3], B[j], B[(j + 1) % 3]));
  return d;
}

struct RayHit {
  bool hit = false;
  bool degenerate = false;
};

RayHit ray_tri(const Vec3& org, const Vec3& dir, const Vec3& a, const Vec3& b,
               const Vec3& c) {
  RayHit h;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-14) {
    // Parallel ray; only a problem if the triangle is near the ray line.
    const Vec3 n = e1.cross(e2);
    const double plane = n.normalized().dot(org - a);
    if (std::abs(plane) < 1e-9) h.degenerate = true;
    return h;
  }
  const double inv = 1.0 / det;
  const Vec3 tv = org - a;
  const double u = tv.dot(pv) * inv;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  const double t = e2.dot(qv) * inv;
  const double eps = 1e-10;
  if (u > eps && v > eps && u + v < 1.0 - eps && t > eps) {
    h.hit = true;
    return h;
  }
  // Grazing an edge/vertex or starting on the surface: ambiguous.
  if (u > -eps && v > -eps && u + v < 1.0 + eps && t > -eps) h.degenerate = true;
  return h;
}

}  // namespace

void TriMesh::finalize() {
  const int nf = int(F.rows());
  face_normals_.resize(nf, 3);
  face_areas_.resize(nf);
  total_area_ = 0.0;
  for (int f = 0; f < nf; ++f) {
    const Vec3 a = V.row(F(f, 0)), b = V.row(F(f, 1)), c = V.row(F(f, 2));
    const Vec3 n = (b - a).cross(c - a);
    const double twice = n.norm();
    face_areas_(f) = 0.5 * twice;
    total_area_ += face_areas_(f);
    face_normals_.row(f) = (twice > 1e-18) ? Vec3(n / twice) : Vec3::UnitZ();
  }

  // Watertight: every directed edge appears exactly once and has its reverse.
  std::unordered_map<std::uint64_t, int> edges;
  edges.reserve(nf * 3);
  auto key = [](int a, int b) {
    return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
  };
  bool ok = nf > 0;
  for (int f = 0; f < nf && ok; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = F(f, k), b = F(f, (k + 1) % 3);
      if (a == b) { ok = false; break; }
      if (++edges[key(a, b)] > 1) { ok = false; break; }
    }
  }
  if (ok) {
    for (const auto& [k, n] : edges) {
      (void)n;
      if (!edges.count((k << 32) | (k >> 32))) { ok = false; break; }
    }
  }
  watertight_ = ok;

  if (V.rows() > 0) {
    bb_min_ = V.colwise().minCoeff();
    bb_max_ = V.colwise().maxCoeff();
  }

  nodes_.clear();
  order_.resize(nf);
  for (int i = 0; i < nf; ++i) order_[i] = i;
  if (nf == 0) return;
  std::vector<Vec3> centroids(nf);
  for (int f = 0; f < nf; ++f)
    centroids[f] = (V.row(F(f, 0)) + V.row(F(f, 1)) + V.row(F(f, 2))) / 3.0;
  nodes_.reserve(2 * nf);
  nodes_.emplace_back();
  build(0, 0, nf, centroids);
}

void TriMesh::build(int node, int begin, int end, std::vector<Vec3>& centroids) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = -lo;
  for (int i = begin; i < end; ++i) {
    const int f = order_[i];
    for (int k = 0; k < 3; ++k) {
      lo = lo.cwiseMin(Vec3(V.row(F(f, k)).transpose()));
      hi = hi.cwiseMax(Vec3(V.row(F(f, k)).transpose()));
    }
  }
  nodes_[node].lo = lo;
  nodes_[node].hi = hi;
  if (end - begin <= 4) {
    nodes_[node].begin = begin;
    nodes_[node].end = end;
    return;
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     return centroids[a](axis) < centroids[b](axis);
                   });
  const int l = int(nodes_.size());
  nodes_.emplace_back();
  nodes_.emplace_back();
  nodes_[node].left = l;
  nodes_[node].right = l + 1;
  build(l, begin, mid, centroids);
  build(l + 1, mid, end, centroids);
}

void TriMesh::nearest_rec(int node, const Vec3& p, Nearest& best) const {
  const Node& n = nodes_[node];
  if (point_aabb_dist(p, n.lo, n.hi) > best.dist) return;
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int f = order_[i];
      const Vec3 q = closest_on_triangle(p, V.row(F(f, 0)), V.row(F(f, 1)),
                                         V.row(F(f, 2)));
      const double d = (p - q).norm();
      if (d < best.dist - 1e-15 ||
          (d < best.dist + 1e-15 && f < best.face)) {
        best.dist = d;
        best.face = f;
        best.point = q;
      }
    }
    return;
  }
  const double dl = point_aabb_dist(p, nodes_[n.left].lo, nodes_[n.left].hi);
  const double dr = point_aabb_dist(p, nodes_[n.right].lo, nodes_[n.right].hi);
  if (dl <= dr) {
    nearest_rec(n.left, p, best);
    nearest_rec(n.right, p, best);
  } else {
    nearest_rec(n.right, p, best);
    nearest_rec(n.left, p, best);
  }
}

TriMesh::Nearest TriMesh::nearest(const Vec3& p) const {
  Nearest best;
  best.dist = std::numeric_limits<double>::max();
  if (!nodes_.empty()) nearest_rec(0, p, best);
  return best;
}

namespace {

// Conservative ray/AABB slab test over t in [0, inf). The box is padded a
// hair so boundary grazes are never pruned away; extra candidates only cost
// a triangle test.
bool ray_hits_aabb(const Vec3& org, const Vec3& dir, const Vec3& lo,
                   const Vec3& hi) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::max();
  for (int k = 0; k < 3; ++k) {
    const double l = lo(k) - 1e-12, h = hi(k) + 1e-12;
    if (std::abs(dir(k)) < 1e-300) {
      if (org(k) < l || org(k) > h) return false;
    } else {
      double a = (l - org(k)) / dir(k);
      double b = (h - org(k)) / dir(k);
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t0 > t1) return false;
    }
  }
  return true;
}

}  // namespace

int TriMesh::ray_count_rec(int node, const Vec3& org, const Vec3& dir,
                           bool& bad) const {
  const Node& n = nodes_[node];
  if (bad || !ray_hits_aabb(org, dir, n.lo, n.hi)) return 0;
  if (n.left < 0) {
    int count = 0;
    for (int i = n.begin; i < n.end && !bad; ++i) {
      const int f = order_[i];
      const RayHit h =
          ray_tri(org, dir, V.row(F(f, 0)), V.row(F(f, 1)), V.row(F(f, 2)));
      if (h.degenerate) bad = true;
      if (h.hit) ++count;
    }
    return count;
  }
  return ray_count_rec(n.left, org, dir, bad) +
         ray_count_rec(n.right, org, dir, bad);
}

int TriMesh::ray_parity(const Vec3& p) const {
  if (nodes_.empty()) return 0;
  static const std::array<Vec3, 8> dirs = {
      Vec3(0.5779, 0.5917, 0.5621), Vec3(-0.6823, 0.4117, 0.6039),
      Vec3(0.3917, -0.7223, 0.5701), Vec3(0.4923, 0.5129, -0.7031),
      Vec3(-0.5381, -0.6211, 0.5697), Vec3(-0.5023, 0.5911, -0.6313),
      Vec3(0.6317, -0.4817, -0.6073), Vec3(-0.5741, -0.5437, -0.6121)};
  for (const Vec3& draw : dirs) {
    const Vec3 dir = draw.normalized();
    bool bad = false;
    const int count = ray_count_rec(0, p, dir, bad);
    if (!bad) return count & 1;
  }
  return 0;  // every direction grazed something; treat as outside
}

double TriMesh::surface_distance(const Pose& self_pose, const TriMesh& other,
                                 const Pose& other_pose, double cutoff) const {
  // Other mesh expressed in this mesh's frame.
  const Pose rel = self_pose.inverse() * other_pose;
  auto other_tri = [&](int f) {
    return std::array<Vec3, 3>{rel * Vec3(other.V.row(other.F(f, 0))),
                               rel * Vec3(other.V.row(other.F(f, 1))),
                               rel * Vec3(other.V.row(other.F(f, 2)))};
  };
  auto other_box = [&](int node) {
    const Node& n = other.nodes_[node];
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = -lo;
    for (int cx = 0; cx < 2; ++cx)
      for (int cy = 0; cy < 2; ++cy)
        for (int cz = 0; cz < 2; ++cz) {
          const Vec3 c = rel * Vec3(cx ? n.hi.x() : n.lo.x(),
                                    cy ? n.hi.y() : n.lo.y(),
                                    cz ? n.hi.z() : n.lo.z());
          lo = lo.cwiseMin(c);
          hi = hi.cwiseMax(c);
        }
    return std::make_pair(lo, hi);
  };

  double best = std::numeric_limits<double>::max();
  struct Pair { int a, b; };
  std::vector<Pair> stack{{0, 0}};
  auto aabb_dist = [](const Vec3& alo, const Vec3& ahi, const Vec3& blo,
                      const Vec3& bhi) {
    const Vec3 d = (blo - ahi).cwiseMax(alo - bhi).cwiseMax(0.0);
    return d.norm();
  };
  while (!stack.empty() && best > cutoff) {
    const Pair pr = stack.back();
    stack.pop_back();
    const Node& na = nodes_[pr.a];
    const auto [blo, bhi] = other_box(pr.b);
    if (aabb_dist(na.lo, na.hi, blo, bhi) >= best) continue;
    const Node& nb = other.nodes_[pr.b];
    const bool leaf_a = na.left < 0, leaf_b = nb.left < 0;
    if (leaf_a && leaf_b) {
      for (int i = na.begin; i < na.end; ++i) {
        const int fa = order_[i];
        const std::array<Vec3, 3> A{Vec3(V.row(F(fa, 0))), Vec3(V.row(F(fa, 1))),
                                    Vec3(V.row(F(fa, 2)))};
        for (int j = nb.begin; j < nb.end; ++j) {
          best = std::min(best, tri_tri_dist(A, other_tri(other.order_[j])));
          if (best <= cutoff) return best;
        }
      }
    } else if (leaf_b || (!leaf_a && (na.hi - na.lo).norm() >= (bhi - blo).norm())) {
      stack.push_back({na.left, pr.b});
      stack.push_back({na.right, pr.b});
    } else {
      stack.push_back({pr.a, nb.left});
      stack.push_back({pr.a, nb.right});
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// File loaders
// ---------------------------------------------------------------------------

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OBJ file: " + path);
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        throw std::runtime_error("OBJ parse error (vertex): " + line);
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const std::string first = tok.substr(0, tok.find('/'));
        int v = std::stoi(first);
        if (v < 0) v = int(verts.size()) + v + 1;
        if (v < 1 || v > int(verts.size()))
          throw std::runtime_error("OBJ face index out of range: " + line);
        idx.push_back(v - 1);
      }
      if (idx.size() < 3)
        throw std::runtime_error("OBJ face with fewer than 3 vertices: " + line);
      for (size_t k = 2; k < idx.size(); ++k)
        faces.emplace_back(idx[0], idx[k - 1], idx[k]);
    }
  }
  TriMesh m;
  m.V.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) m.V.row(i) = verts[i];
  m.F.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) m.F.row(i) = faces[i];
  m.finalize();
  return m;
}

namespace {

TriMesh from_soup(const std::vector<Vec3>& tri_verts) {
  // Weld exactly coincident vertices so edge bookkeeping sees shared edges.
  std::unordered_map<std::string, int> index;
  std::vector<Vec3> verts;
  std::vector<int> tri;
  tri.reserve(tri_verts.size());
  for (const Vec3& v : tri_verts) {
    std::string key(reinterpret_cast<const char*>(v.data()), 3 * sizeof(double));
    auto [it, inserted] = index.emplace(key, int(verts.size()));
    if (inserted) verts.push_back(v);
    tri.push_back(it->second);
  }
  TriMesh m;
  m.V.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) m.V.row(i) = verts[i];
  m.F.resize(tri.size() / 3, 3);
  for (size_t f = 0; f < tri.size() / 3; ++f)
    m.F.row(f) << tri[3 * f], tri[3 * f + 1], tri[3 * f + 2];
  m.finalize();
  return m;
}

}  // namespace

TriMesh load_stl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open STL file: " + path);
  std::string head(5, '\0');
  in.read(head.data(), 5);
  in.seekg(0);
  std::vector<Vec3> tv;
  if (head == "solid") {
    // Possibly ASCII; binary files can also start with "solid", so verify.
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    if (text.find("facet") != std::string::npos) {
      std::istringstream ts(text);
      std::string tok;
      while (ts >> tok) {
        if (tok == "vertex") {
          double x, y, z;
          if (!(ts >> x >> y >> z))
            throw std::runtime_error("STL parse error in: " + path);
          tv.emplace_back(x, y, z);
        }
      }
      if (tv.size() % 3 != 0)
        throw std::runtime_error("STL vertex count not a multiple of 3: " + path);
      return from_soup(tv);
    }
    in.clear();
    in.seekg(0);
  }
  char header[80];
  in.read(header, 80);
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  if (!in) throw std::runtime_error("truncated STL header: " + path);
  tv.reserve(3 * n);
  for (std::uint32_t f = 0; f < n; ++f) {
    float buf[12];
    in.read(reinterpret_cast<char*>(buf), 48);
    char attr[2];
    in.read(attr, 2);
    if (!in) throw std::runtime_error("truncated STL body: " + path);
    for (int k = 0; k < 3; ++k)
      tv.emplace_back(buf[3 + 3 * k], buf[4 + 3 * k], buf[5 + 3 * k]);
  }
  return from_soup(tv);
}

TriMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<Eigen::Vector3i> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
      {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
      {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::unordered_map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
      const std::uint64_t key =
          (std::uint64_t(std::min(a, b)) << 32) | std::uint32_t(std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = int(verts.size());
      verts.push_back((verts[a] + verts[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f(0), f(1)), bc = mid(f(1), f(2)), ca = mid(f(2), f(0));
      next.push_back({f(0), ab, ca});
      next.push_back({f(1), bc, ab});
      next.push_back({f(2), ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces.swap(next);
  }
  TriMesh m;
  m.V.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) m.V.row(i) = radius * verts[i];
  m.F.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) m.F.row(i) = faces[i];
  m.finalize();
  return m;
}

}  // namespace gsynth
