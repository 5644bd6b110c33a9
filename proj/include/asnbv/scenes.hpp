#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "asnbv/geometry.hpp"
#include "asnbv/scene.hpp"

namespace asnbv {

/// Flat rectangle in the XY plane, centered at the origin, tessellated into
/// cells x cells quads (two triangles each).
inline TriangleMesh gen_plate(double width_mm, double height_mm, int cells = 16) {
  if (!(width_mm > 0) || !(height_mm > 0) || cells < 1)
    throw std::invalid_argument("gen_plate: bad dimensions");
  TriangleMesh mesh;
  for (int j = 0; j <= cells; ++j)
    for (int i = 0; i <= cells; ++i)
      mesh.vertices.emplace_back(width_mm * (double(i) / cells - 0.5),
                                 height_mm * (double(j) / cells - 0.5), 0.0);
  auto vid = [cells](int i, int j) { return j * (cells + 1) + i; };
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  mesh.finalize();
  return mesh;
}

/// UV sphere centered at the origin.
inline TriangleMesh gen_sphere(double radius_mm, int slices = 48, int stacks = 24) {
  if (!(radius_mm > 0) || slices < 3 || stacks < 2)
    throw std::invalid_argument("gen_sphere: bad dimensions");
  TriangleMesh mesh;
  mesh.vertices.emplace_back(0, 0, radius_mm);  // top pole
  for (int j = 1; j < stacks; ++j) {
    const double polar = kPi * double(j) / stacks;
    for (int i = 0; i < slices; ++i) {
      const double azim = 2.0 * kPi * double(i) / slices;
      mesh.vertices.emplace_back(radius_mm * std::sin(polar) * std::cos(azim),
                                 radius_mm * std::sin(polar) * std::sin(azim),
                                 radius_mm * std::cos(polar));
    }
  }
  mesh.vertices.emplace_back(0, 0, -radius_mm);  // bottom pole
  const int bottom = int(mesh.vertices.size()) - 1;
  auto ring = [slices](int j, int i) { return 1 + (j - 1) * slices + (i % slices); };
  for (int i = 0; i < slices; ++i)
    mesh.triangles.push_back({0, ring(1, i), ring(1, i + 1)});
  for (int j = 1; j < stacks - 1; ++j)
    for (int i = 0; i < slices; ++i) {
      mesh.triangles.push_back({ring(j, i), ring(j + 1, i), ring(j + 1, i + 1)});
      mesh.triangles.push_back({ring(j, i), ring(j + 1, i + 1), ring(j, i + 1)});
    }
  for (int i = 0; i < slices; ++i)
    mesh.triangles.push_back({bottom, ring(stacks - 1, i + 1), ring(stacks - 1, i)});
  mesh.finalize();
  return mesh;
}

/// Two half-plates folded about the Y axis: the minimal concave shape. The
/// dihedral angle is measured inside the fold; 180 degrees is flat.
inline TriangleMesh gen_bent_plate(double width_mm, double height_mm,
                                   double dihedral_deg = 120.0, int cells = 16) {
  if (!(dihedral_deg > 0) || dihedral_deg > 180)
    throw std::invalid_argument("gen_bent_plate: dihedral must be in (0, 180]");
  TriangleMesh flat = gen_plate(width_mm, height_mm, cells);
  const double tilt = deg2rad(180.0 - dihedral_deg) / 2.0;
  TriangleMesh mesh = flat;
  for (auto& v : mesh.vertices) {
    const double s = v.x() < 0 ? -1.0 : 1.0;
    // rotate each half about the Y axis so the fold opens toward +Z
    const double x = std::abs(v.x());
    v = Vec3(s * x * std::cos(tilt), v.y(), x * std::sin(tilt));
  }
  mesh.finalize();
  return mesh;
}

/// Sensing head with the left camera at the rig origin, the right camera at
/// +X baseline, and the projector midway between them, all looking down +Z.
inline StereoRig make_rig(int width, int height, double fx, double baseline_mm,
                          double projector_intensity = 1.0, double ambient_intensity = 0.0) {
  StereoRig rig;
  rig.left.fx = rig.left.fy = fx;
  rig.left.cx = width / 2.0;
  rig.left.cy = height / 2.0;
  rig.left.width = width;
  rig.left.height = height;
  rig.right = rig.left;
  rig.right.pose.translation = Vec3(baseline_mm, 0, 0);
  rig.projector_pose.translation = Vec3(baseline_mm / 2.0, 0, 0);
  rig.projector_intensity = projector_intensity;
  rig.ambient_intensity = ambient_intensity;
  return rig;
}

}  // namespace asnbv
