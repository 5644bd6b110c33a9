#pragma once

#include <string>
#include <vector>

#include "asnbv/geometry.hpp"
#include "asnbv/reflectance.hpp"

namespace asnbv {

struct SceneInstance {
  int mesh = -1;
  RigidPose pose;  // object-to-world
  int material = -1;
};

/// Ground-truth world: meshes with poses and material assignments.
struct SceneModel {
  std::vector<TriangleMesh> meshes;
  std::vector<PhongMaterial> materials;
  std::vector<SceneInstance> instances;

  bool empty() const { return instances.empty(); }

  bool validate(std::string* error = nullptr) const {
    for (const auto& inst : instances) {
      if (inst.mesh < 0 || inst.mesh >= int(meshes.size())) {
        if (error) *error = "scene instance references unknown mesh";
        return false;
      }
      if (inst.material < 0 || inst.material >= int(materials.size())) {
        if (error) *error = "scene instance references unknown material";
        return false;
      }
      if (!inst.pose.is_rigid()) {
        if (error) *error = "scene instance pose is not rigid";
        return false;
      }
    }
    return true;
  }
};

}  // namespace asnbv
