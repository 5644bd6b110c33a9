#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>
#include <vector>

#include "asnbv/image.hpp"
#include "asnbv/scene.hpp"

namespace asnbv {

namespace detail {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }

  // Slab test; returns false when [t_enter, t_exit] misses [0, t_max].
  bool hit(const Ray& ray, const Vec3& inv_dir, double t_max) const {
    double t0 = 0.0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      double near = (lo[a] - ray.origin[a]) * inv_dir[a];
      double far = (hi[a] - ray.origin[a]) * inv_dir[a];
      if (near > far) std::swap(near, far);
      t0 = std::max(t0, near);
      t1 = std::min(t1, far);
      if (t0 > t1) return false;
    }
    return true;
  }
};

}  // namespace detail

struct RayHit {
  double t = std::numeric_limits<double>::infinity();  // along unit ray dir
  std::int32_t instance = kMiss;
  Vec3 normal = Vec3::Zero();  // unit geometric normal, unoriented
  bool valid() const { return instance != kMiss; }
};

/// World-space triangle soup with a median-split AABB BVH. Build once per
/// scene configuration, cast many rays; immutable after construction.
class CompiledScene {
 public:
  CompiledScene() = default;

  explicit CompiledScene(const SceneModel& scene) {
    std::string err;
    if (!scene.validate(&err)) throw std::runtime_error("CompiledScene: " + err);
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
      const auto& inst = scene.instances[i];
      const auto& mesh = scene.meshes[inst.mesh];
      for (const auto& t : mesh.triangles) {
        Tri tri;
        tri.v0 = inst.pose.apply(mesh.vertices[t[0]]);
        tri.e1 = inst.pose.apply(mesh.vertices[t[1]]) - tri.v0;
        tri.e2 = inst.pose.apply(mesh.vertices[t[2]]) - tri.v0;
        tri.normal = tri.e1.cross(tri.e2).normalized();
        tri.instance = std::int32_t(i);
        tris_.push_back(tri);
      }
    }
    build();
  }

  bool empty() const { return tris_.empty(); }

  RayHit cast(const Ray& ray, double t_max = std::numeric_limits<double>::infinity()) const {
    RayHit best;
    best.t = t_max;
    if (nodes_.empty()) return best;
    const Vec3 inv_dir = ray.dir.cwiseInverse();
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
      const Node& node = nodes_[stack[--sp]];
      if (!node.box.hit(ray, inv_dir, best.t)) continue;
      if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i)
          intersect(tris_[order_[i]], ray, best);
      } else {
        stack[sp++] = node.first;
        stack[sp++] = node.first + 1;
      }
    }
    if (!best.valid()) best.t = std::numeric_limits<double>::infinity();
    return best;
  }

  /// True when the open segment from `from` to `to` is blocked. `from` is
  /// nudged along `offset_dir` to avoid self-intersection at the surface.
  bool occluded(const Vec3& from, const Vec3& to, const Vec3& offset_dir) const {
    const Vec3 origin = from + 1e-2 * offset_dir;
    const Vec3 diff = to - origin;
    const double dist = diff.norm();
    if (dist < 1e-9) return false;
    const Ray ray{origin, diff / dist};
    const RayHit hit = cast(ray, dist - 1e-2);
    return hit.valid();
  }

 private:
  struct Tri {
    Vec3 v0, e1, e2;
    Vec3 normal;
    std::int32_t instance;
    Vec3 centroid() const { return v0 + (e1 + e2) / 3.0; }
  };

  struct Node {
    detail::Aabb box;
    int first = 0;  // child index for inner nodes, triangle range start for leaves
    int count = 0;  // 0 for inner nodes
  };

  static void intersect(const Tri& tri, const Ray& ray, RayHit& best) {
    // Moller-Trumbore
    const Vec3 pvec = ray.dir.cross(tri.e2);
    const double det = tri.e1.dot(pvec);
    if (std::abs(det) < 1e-12) return;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = ray.origin - tri.v0;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < -1e-9 || u > 1.0 + 1e-9) return;
    const Vec3 qvec = tvec.cross(tri.e1);
    const double v = ray.dir.dot(qvec) * inv_det;
    if (v < -1e-9 || u + v > 1.0 + 1e-9) return;
    const double t = tri.e2.dot(qvec) * inv_det;
    if (t <= 1e-9 || t >= best.t) return;
    best.t = t;
    best.instance = tri.instance;
    best.normal = tri.normal;
  }

  void build() {
    order_.resize(tris_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.clear();
    if (tris_.empty()) return;
    nodes_.reserve(2 * tris_.size());
    nodes_.push_back({});
    build_node(0, 0, int(tris_.size()));
  }

  void build_node(int node_idx, int first, int count) {
    detail::Aabb box;
    for (int i = first; i < first + count; ++i) {
      const Tri& t = tris_[order_[i]];
      box.grow(t.v0);
      box.grow(t.v0 + t.e1);
      box.grow(t.v0 + t.e2);
    }
    nodes_[node_idx].box = box;
    if (count <= 4) {
      nodes_[node_idx].first = first;
      nodes_[node_idx].count = count;
      return;
    }
    // median split along the widest centroid axis
    detail::Aabb cbox;
    for (int i = first; i < first + count; ++i) cbox.grow(tris_[order_[i]].centroid());
    int axis = 0;
    const Vec3 extent = cbox.hi - cbox.lo;
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid,
                     order_.begin() + first + count, [&](int a, int b) {
                       return tris_[a].centroid()[axis] < tris_[b].centroid()[axis];
                     });
    const int left = int(nodes_.size());
    nodes_[node_idx].first = left;
    nodes_[node_idx].count = 0;
    nodes_.push_back({});
    nodes_.push_back({});
    build_node(left, first, mid - first);
    build_node(left + 1, mid, first + count - mid);
  }

  std::vector<Tri> tris_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

struct ViewMaps {
  DepthMap depth;
  NormalMap normal;
  HitMap hits;
};

/// Per-pixel z-depth (along the optical axis), camera-facing geometric
/// normal, and instance id of the nearest intersection. Pixels with no hit
/// are missing. Deterministic: identical inputs give bit-identical maps.
inline ViewMaps raycast_view(const CompiledScene& compiled, const PinholeCamera& camera) {
  ViewMaps out;
  out.depth = DepthMap(camera.width, camera.height, kMissing);
  out.normal = NormalMap(camera.width, camera.height, missing_normal());
  out.hits = HitMap(camera.width, camera.height, kMiss);
  const RigidPose world_to_cam = camera.pose.inverse();
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Ray ray = camera.ray_through_pixel(x, y);
      const RayHit hit = compiled.cast(ray);
      if (!hit.valid()) continue;
      const Vec3 point = ray.origin + hit.t * ray.dir;
      out.depth.at(x, y) = float(world_to_cam.apply(point).z());
      Vec3 n = hit.normal;
      if (n.dot(ray.dir) > 0) n = -n;  // orient toward the camera
      out.normal.at(x, y) = n.cast<float>();
      out.hits.at(x, y) = hit.instance;
    }
  }
  return out;
}

inline ViewMaps raycast_view(const SceneModel& scene, const PinholeCamera& camera) {
  return raycast_view(CompiledScene(scene), camera);
}

}  // namespace asnbv
