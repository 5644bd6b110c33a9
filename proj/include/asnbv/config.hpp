#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asnbv/mesh_io.hpp"
#include "asnbv/planner.hpp"
#include "asnbv/scenes.hpp"
#include "asnbv/viewpoints.hpp"

namespace asnbv {

/// Carries every validation problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errs) {
    std::string out = "configuration invalid:";
    for (const auto& e : errs) out += "\n  - " + e;
    return out;
  }
  std::vector<std::string> errors_;
};

/// FNV-1a over the canonical (key-sorted) JSON dump, so semantically identical
/// configs hash identically regardless of key order in the file.
inline std::uint64_t config_hash(const nlohmann::json& j) {
  const std::string canon = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct ExperimentConfig {
  nlohmann::json raw;
  std::filesystem::path base_dir;

  SceneModel scene;
  StereoRig rig;
  ResponseCurve curve;
  RigidPose reference_pose;
  std::vector<ViewpointCandidate> candidates;
  SensingConfig sensing;

  int hypothesis_count = 5;
  double hypothesis_rot_std_deg = 2.0;
  double hypothesis_trans_std_mm = 3.0;
  std::uint64_t hypothesis_seed = 1;
  double confidence_scale = 0.25;

  Policy policy = Policy::kNbv;
  StopRule stop;
  int object_index = 0;
  bool evaluate_pose = true;
  std::string output_dir = "out";

  std::uint64_t hash() const { return config_hash(raw); }
};

namespace detail {

using nlohmann::json;

inline Vec3 parse_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

/// Pose object: either {position, look_at[, up]} or {position[, axis, angle_deg]}.
inline RigidPose parse_pose(const json& j) {
  const Vec3 position = parse_vec3(j.at("position"));
  if (j.contains("look_at")) {
    const Vec3 up = j.contains("up") ? parse_vec3(j.at("up")) : Vec3(0, 1, 0);
    return RigidPose::look_at(position, parse_vec3(j.at("look_at")), up);
  }
  if (j.contains("axis")) {
    return RigidPose::from_axis_angle(parse_vec3(j.at("axis")),
                                      deg2rad(j.value("angle_deg", 0.0)), position);
  }
  RigidPose p;
  p.translation = position;
  return p;
}

inline TriangleMesh parse_mesh_source(const json& j, const std::filesystem::path& base,
                                      std::vector<std::string>& errors,
                                      const std::string& where) {
  if (j.contains("mesh_path")) {
    std::filesystem::path p = j.at("mesh_path").get<std::string>();
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) {
      errors.push_back(where + ".mesh_path: file does not exist: " + p.string());
      return {};
    }
    return load_mesh(p.string());
  }
  if (!j.contains("generator")) {
    errors.push_back(where + ": needs mesh_path or generator");
    return {};
  }
  const json& g = j.at("generator");
  const std::string type = g.value("type", "");
  if (type == "plate")
    return gen_plate(g.value("width_mm", 200.0), g.value("height_mm", 200.0),
                     g.value("cells", 16));
  if (type == "sphere")
    return gen_sphere(g.value("radius_mm", 100.0), g.value("slices", 48),
                      g.value("stacks", 24));
  if (type == "bent_plate" || type == "bent-plate")
    return gen_bent_plate(g.value("width_mm", 200.0), g.value("height_mm", 200.0),
                          g.value("dihedral_deg", 120.0), g.value("cells", 16));
  errors.push_back(where + ".generator.type: unknown generator '" + type + "'");
  return {};
}

inline ResponseCurve parse_response(const json& j, const std::filesystem::path& base,
                                    std::vector<std::string>& errors) {
  const std::string type = j.value("type", "gamma");
  if (type == "gamma") {
    const double gamma = j.value("gamma", 2.2);
    if (!(gamma > 0)) {
      errors.push_back("response.gamma: must be > 0");
      return ResponseCurve::linear();
    }
    return ResponseCurve::gamma(gamma);
  }
  if (type == "linear") return ResponseCurve::linear();
  if (type == "file") {
    std::filesystem::path p = j.value("path", "");
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) {
      errors.push_back("response.path: file does not exist: " + p.string());
      return ResponseCurve::linear();
    }
    return ResponseCurve::load(p.string());
  }
  errors.push_back("response.type: unknown type '" + type + "'");
  return ResponseCurve::linear();
}

inline StereoRig parse_rig(const json& j, std::vector<std::string>& errors) {
  const int width = j.value("width", 160);
  const int height = j.value("height", 120);
  const double fx = j.value("fx", 170.0);
  const double baseline = j.value("baseline_mm", 100.0);
  if (width <= 0 || height <= 0) errors.push_back("rig.width/height: must be positive");
  if (!(fx > 0)) errors.push_back("rig.fx: must be positive");
  if (!(baseline > 0)) errors.push_back("rig.baseline_mm: must be positive");
  const double projector_intensity = j.value("projector_intensity", 1.0);
  if (!(projector_intensity > 0)) errors.push_back("rig.projector_intensity: must be > 0");
  const double ambient = j.value("ambient_intensity", 0.0);
  if (ambient < 0) errors.push_back("rig.ambient_intensity: must be >= 0");
  if (!errors.empty()) return {};
  return make_rig(width, height, fx, baseline, projector_intensity, ambient);
}

inline SensingConfig parse_sensing(const json& j, std::vector<std::string>& errors) {
  SensingConfig cfg;
  cfg.sigma = j.value("sigma", 100.0);
  cfg.z_min_valid = j.value("z_min", 5);
  cfg.z_max_valid = j.value("z_max", 255);
  cfg.exposure_ms = j.value("exposure_ms", 1.0);
  cfg.threshold = j.value("threshold", 0.5);
  cfg.depth_noise_std_mm = j.value("depth_noise_std_mm", 0.1);
  cfg.seed = j.value("seed", std::uint64_t(1));
  const std::string mode = j.value("dropout", "stochastic");
  if (mode == "stochastic") cfg.dropout_mode = DropoutMode::kStochastic;
  else if (mode == "deterministic") cfg.dropout_mode = DropoutMode::kDeterministic;
  else errors.push_back("sensing.dropout: must be 'stochastic' or 'deterministic'");
  if (!(cfg.sigma > 0)) errors.push_back("sensing.sigma: must be > 0");
  if (cfg.z_min_valid < 0 || cfg.z_max_valid > 255 || cfg.z_min_valid >= cfg.z_max_valid)
    errors.push_back("sensing.z_min/z_max: need 0 <= z_min < z_max <= 255");
  if (!(cfg.exposure_ms > 0)) errors.push_back("sensing.exposure_ms: must be > 0");
  if (!(cfg.threshold > 0 && cfg.threshold < 1))
    errors.push_back("sensing.threshold: must be in (0, 1)");
  if (cfg.depth_noise_std_mm < 0) errors.push_back("sensing.depth_noise_std_mm: must be >= 0");
  return cfg;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir) {
  using detail::json;
  std::vector<std::string> errors;
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.base_dir = base_dir;

  try {
    if (!j.contains("scene") || !j.at("scene").contains("objects") ||
        j.at("scene").at("objects").empty()) {
      errors.push_back("scene.objects: at least one object is required");
    } else {
      int idx = 0;
      for (const auto& obj : j.at("scene").at("objects")) {
        const std::string where = "scene.objects[" + std::to_string(idx) + "]";
        TriangleMesh mesh = detail::parse_mesh_source(obj, base_dir, errors, where);
        PhongMaterial mat;
        if (!obj.contains("material")) {
          errors.push_back(where + ".material: required");
        } else {
          const auto& m = obj.at("material");
          mat.k_d = m.value("k_d", 0.0);
          mat.k_s = m.value("k_s", 0.0);
          mat.n = m.value("n", 1.0);
          if (mat.k_d < 0) errors.push_back(where + ".material.k_d: must be >= 0");
          if (mat.k_s < 0) errors.push_back(where + ".material.k_s: must be >= 0");
          if (!(mat.n > 0)) errors.push_back(where + ".material.n: must be > 0");
        }
        RigidPose pose;
        if (obj.contains("pose")) pose = detail::parse_pose(obj.at("pose"));
        cfg.scene.meshes.push_back(std::move(mesh));
        cfg.scene.materials.push_back(mat);
        cfg.scene.instances.push_back({idx, pose, idx});
        ++idx;
      }
    }

    cfg.rig = detail::parse_rig(j.value("rig", json::object()), errors);
    cfg.curve = detail::parse_response(j.value("response", json::object()), base_dir, errors);

    if (!j.contains("reference_view"))
      errors.push_back("reference_view: required");
    else
      cfg.reference_pose = detail::parse_pose(j.at("reference_view"));

    if (!j.contains("candidates")) {
      errors.push_back("candidates: required");
    } else {
      const json& c = j.at("candidates");
      const std::string type = c.value("type", "sphere");
      if (type == "sphere") {
        const double radius = c.value("radius_mm", 0.0);
        const int count = c.value("count", 0);
        if (!(radius > 0)) errors.push_back("candidates.radius_mm: must be > 0");
        if (count < 1) errors.push_back("candidates.count: must be >= 1");
        if (radius > 0 && count >= 1)
          cfg.candidates = viewpoint_sphere(
              c.contains("center") ? detail::parse_vec3(c.at("center")) : Vec3::Zero(),
              radius, count, c.value("hemisphere", true));
      } else if (type == "list") {
        int id = 0;
        for (const auto& p : c.value("poses", json::array()))
          cfg.candidates.push_back({id++, detail::parse_pose(p)});
        if (cfg.candidates.empty()) errors.push_back("candidates.poses: empty list");
      } else {
        errors.push_back("candidates.type: unknown type '" + type + "'");
      }
    }

    cfg.sensing = detail::parse_sensing(j.value("sensing", json::object()), errors);

    const json& h = j.value("hypotheses", json::object());
    cfg.hypothesis_count = h.value("count", 5);
    cfg.hypothesis_rot_std_deg = h.value("rot_std_deg", 2.0);
    cfg.hypothesis_trans_std_mm = h.value("trans_std_mm", 3.0);
    cfg.hypothesis_seed = h.value("seed", std::uint64_t(1));
    cfg.confidence_scale = h.value("confidence_scale", 0.25);
    if (cfg.hypothesis_count < 1) errors.push_back("hypotheses.count: must be >= 1");
    if (cfg.hypothesis_rot_std_deg < 0) errors.push_back("hypotheses.rot_std_deg: must be >= 0");
    if (cfg.hypothesis_trans_std_mm < 0)
      errors.push_back("hypotheses.trans_std_mm: must be >= 0");

    const std::string policy = j.value("policy", "nbv");
    if (policy == "nbv") cfg.policy = Policy::kNbv;
    else if (policy == "random") cfg.policy = Policy::kRandom;
    else if (policy == "max-distance" || policy == "max_distance")
      cfg.policy = Policy::kMaxDistance;
    else errors.push_back("policy: must be one of nbv, random, max-distance");

    const json& s = j.value("stop", json::object());
    cfg.stop.gain_threshold = s.value("gain_threshold", 0.0);
    cfg.stop.max_views = s.value("max_views", 3);
    if (cfg.stop.max_views < 0) errors.push_back("stop.max_views: must be >= 0");

    cfg.object_index = j.value("object_index", 0);
    if (cfg.object_index < 0 || cfg.object_index >= int(cfg.scene.instances.size()))
      errors.push_back("object_index: out of range");
    cfg.evaluate_pose = j.value("evaluate_pose", true);
    cfg.output_dir = j.value("output_dir", "out");
  } catch (const nlohmann::json::exception& e) {
    errors.push_back(std::string("json structure: ") + e.what());
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

/// Loads, parses, and validates an experiment configuration. Throws
/// ConfigError carrying every problem found.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

/// Assembles the planner inputs for one run of the loop.
inline LoopConfig make_loop_config(const ExperimentConfig& cfg, Policy policy,
                                   std::uint64_t seed) {
  LoopConfig lc;
  lc.scene_gt = cfg.scene;
  lc.hypothesis_model = cfg.scene;
  lc.gt_object_pose = cfg.scene.instances[cfg.object_index].pose;
  lc.object_mesh = cfg.scene.instances[cfg.object_index].mesh;
  lc.object_material = cfg.scene.instances[cfg.object_index].material;
  lc.rig = cfg.rig;
  lc.reference_pose = cfg.reference_pose;
  lc.candidates = cfg.candidates;
  lc.curve = cfg.curve;
  lc.sensing = cfg.sensing;
  lc.sensing.seed = seed;
  lc.policy = policy;
  lc.stop = cfg.stop;
  lc.hypothesis_count = cfg.hypothesis_count;
  lc.hypothesis_rot_std_deg = cfg.hypothesis_rot_std_deg;
  lc.hypothesis_trans_std_mm = cfg.hypothesis_trans_std_mm;
  lc.hypothesis_seed = mix_seed(cfg.hypothesis_seed, seed);
  lc.evaluate_pose = cfg.evaluate_pose;
  return lc;
}

}  // namespace asnbv
