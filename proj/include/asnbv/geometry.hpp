#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "asnbv/core.hpp"

namespace asnbv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform. For cameras this is camera-to-world: rotation columns
/// are the camera axes expressed in world coordinates.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  RigidPose inverse() const {
    RigidPose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -inv.rotation * translation;
    return inv;
  }

  /// Composition: (*this) after `other`, i.e. result.apply(p) == apply(other.apply(p)).
  RigidPose operator*(const RigidPose& other) const {
    RigidPose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  bool is_rigid(double tol = 1e-6) const {
    const Mat3 should_be_identity = rotation.transpose() * rotation;
    if ((should_be_identity - Mat3::Identity()).norm() > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
  }

  static RigidPose from_axis_angle(const Vec3& axis, double angle_rad,
                                   const Vec3& translation = Vec3::Zero()) {
    RigidPose p;
    p.rotation = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
    p.translation = translation;
    return p;
  }

  /// Camera-to-world pose for an eye looking at a target. Camera convention:
  /// +Z forward, +X right, pixel y grows along +Y.
  static RigidPose look_at(const Vec3& eye, const Vec3& target,
                           const Vec3& up_hint = Vec3(0, 1, 0)) {
    const Vec3 z = (target - eye).normalized();
    Vec3 u = up_hint;
    if (std::abs(u.normalized().dot(z)) > 0.999) u = Vec3(1, 0, 0);
    const Vec3 x = u.cross(z).normalized();
    const Vec3 y = z.cross(x);
    RigidPose p;
    p.rotation.col(0) = x;
    p.rotation.col(1) = y;
    p.rotation.col(2) = z;
    p.translation = eye;
    return p;
  }
};

/// Rotation angle between two poses, degrees.
inline double rotation_angle_deg(const RigidPose& a, const RigidPose& b) {
  const Mat3 rel = a.rotation.transpose() * b.rotation;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  return rad2deg(std::acos(c));
}

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit
};

struct PinholeCamera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  RigidPose pose;  // camera-to-world

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 &&
           cx < width && cy >= 0 && cy < height && pose.is_rigid();
  }

  Vec3 center() const { return pose.translation; }

  /// Ray through the center of pixel (x, y), world frame.
  Ray ray_through_pixel(int x, int y) const {
    const Vec3 d_cam((x + 0.5 - cx) / fx, (y + 0.5 - cy) / fy, 1.0);
    return {center(), pose.rotate(d_cam.normalized())};
  }

  /// Continuous image coordinates of a world point, or nullopt when the point
  /// is at or behind the camera plane.
  std::optional<Eigen::Vector2d> project(const Vec3& p_world) const {
    const Vec3 pc = pose.inverse().apply(p_world);
    if (pc.z() <= 1e-9) return std::nullopt;
    return Eigen::Vector2d(fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy);
  }

  bool contains(const Eigen::Vector2d& px) const {
    return px.x() >= 0 && px.y() >= 0 && px.x() < width && px.y() < height;
  }

  /// World point of pixel (x, y) at camera-frame depth z (along the optical
  /// axis, not ray length).
  Vec3 backproject(int x, int y, double z_depth) const {
    const Vec3 pc((x + 0.5 - cx) / fx * z_depth, (y + 0.5 - cy) / fy * z_depth,
                  z_depth);
    return pose.apply(pc);
  }
};

/// Active-stereo sensing head. Camera and projector poses are expressed in
/// the rig frame; place_rig() instantiates the head at a world pose. The
/// projector is modeled as a point source of intensity projector_intensity
/// (the dominant term of the total incident light); ambient_intensity is the
/// residual constant term, zero by default.
struct StereoRig {
  PinholeCamera left;
  PinholeCamera right;
  RigidPose projector_pose;
  double projector_intensity = 1.0;
  double ambient_intensity = 0.0;

  bool valid() const {
    if (!(projector_intensity > 0) || ambient_intensity < 0) return false;
    if (!left.valid() || !right.valid()) return false;
    return (left.pose.translation - right.pose.translation).norm() > 1e-9;
  }
};

inline StereoRig place_rig(const StereoRig& rig, const RigidPose& world_from_rig) {
  StereoRig placed = rig;
  placed.left.pose = world_from_rig * rig.left.pose;
  placed.right.pose = world_from_rig * rig.right.pose;
  placed.projector_pose = world_from_rig * rig.projector_pose;
  return placed;
}

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  double diameter = 0.0;  // max pairwise vertex distance, set by finalize()

  bool empty() const { return vertices.empty() || triangles.empty(); }

  /// Drops degenerate triangles, validates indices, caches the diameter.
  void finalize() {
    std::vector<std::array<int, 3>> kept;
    kept.reserve(triangles.size());
    const int n = int(vertices.size());
    for (const auto& t : triangles) {
      if (t[0] < 0 || t[1] < 0 || t[2] < 0 || t[0] >= n || t[1] >= n || t[2] >= n)
        throw std::runtime_error("mesh: triangle index out of range");
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
      const Vec3 e1 = vertices[t[1]] - vertices[t[0]];
      const Vec3 e2 = vertices[t[2]] - vertices[t[0]];
      if (e1.cross(e2).norm() < 1e-9) continue;  // zero-area
      kept.push_back(t);
    }
    triangles = std::move(kept);
    diameter = vertices.size() >= 2 ? compute_diameter() : 0.0;
  }

 private:
  double compute_diameter() const {
    double best2 = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
      for (std::size_t j = i + 1; j < vertices.size(); ++j)
        best2 = std::max(best2, (vertices[i] - vertices[j]).squaredNorm());
    return std::sqrt(best2);
  }
};

/// Max pairwise vertex distance; the denominator of the 10%-of-diameter pose
/// correctness test.
inline double mesh_diameter(const TriangleMesh& mesh) {
  if (mesh.vertices.size() < 2)
    throw std::invalid_argument("mesh_diameter: need at least 2 vertices");
  double best2 = 0.0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    for (std::size_t j = i + 1; j < mesh.vertices.size(); ++j)
      best2 = std::max(best2, (mesh.vertices[i] - mesh.vertices[j]).squaredNorm());
  return std::sqrt(best2);
}

}  // namespace asnbv
