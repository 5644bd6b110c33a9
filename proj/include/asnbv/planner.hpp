#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "asnbv/fusion.hpp"
#include "asnbv/icp.hpp"
#include "asnbv/metrics.hpp"
#include "asnbv/sensor.hpp"
#include "asnbv/viewpoints.hpp"

namespace asnbv {

struct PoseHypothesis {
  RigidPose pose;
  double confidence = 0.0;
  int mesh = 0;      // into the hypothesis model's mesh table
  int material = 0;  // into the hypothesis model's material table
};

inline std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> w(scores.size());
  double maxv = -std::numeric_limits<double>::infinity();
  for (double s : scores) maxv = std::max(maxv, s);
  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    w[i] = std::exp(scores[i] - maxv);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// K pose candidates with softmax weights over their confidence scores.
struct PoseHypothesisSet {
  std::vector<PoseHypothesis> hypotheses;
  std::vector<double> weights;

  static PoseHypothesisSet from(std::vector<PoseHypothesis> hyps) {
    if (hyps.empty()) throw std::invalid_argument("hypothesis set must be nonempty");
    std::vector<double> scores;
    scores.reserve(hyps.size());
    for (const auto& h : hyps) scores.push_back(h.confidence);
    PoseHypothesisSet set;
    set.hypotheses = std::move(hyps);
    set.weights = softmax(scores);
    return set;
  }
};

/// Stand-in for an image-based pose estimator: K perturbations of the true
/// pose with confidences decreasing in the perturbation magnitude. Zero noise
/// gives K copies of the truth with uniform weights.
inline PoseHypothesisSet synthetic_hypotheses(const RigidPose& gt_pose, int count,
                                              double rot_std_deg, double trans_std_mm,
                                              std::uint64_t seed, int mesh = 0,
                                              int material = 0,
                                              double confidence_scale = 0.25) {
  if (count < 1) throw std::invalid_argument("synthetic_hypotheses: count must be >= 1");
  Rng rng(mix_seed(seed, 0x9dbul));
  std::vector<PoseHypothesis> hyps;
  hyps.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double angle_deg = rot_std_deg * rng.gaussian();
    Vec3 axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
    if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
    const Vec3 dt(trans_std_mm * rng.gaussian(), trans_std_mm * rng.gaussian(),
                  trans_std_mm * rng.gaussian());
    const RigidPose delta =
        RigidPose::from_axis_angle(axis.normalized(), deg2rad(angle_deg), dt);
    PoseHypothesis h;
    h.pose = gt_pose * delta;
    h.confidence = -confidence_scale * (std::abs(angle_deg) + dt.norm());
    h.mesh = mesh;
    h.material = material;
    hyps.push_back(h);
  }
  return PoseHypothesisSet::from(std::move(hyps));
}

/// Predicted depth and normals of one hypothesis alone, in the reference view.
inline ViewMaps hypothesis_maps(const PoseHypothesis& h, const SceneModel& model,
                                const PinholeCamera& reference_camera) {
  SceneModel single;
  single.meshes = {model.meshes.at(h.mesh)};
  single.materials = {model.materials.at(h.material)};
  single.instances = {{0, h.pose, 0}};
  return raycast_view(single, reference_camera);
}

/// Per-hypothesis planning context: predicted reference-view maps plus the
/// hypothesis world used for occlusion tests.
struct HypothesisContext {
  ViewMaps maps;
  CompiledScene world;
  PhongMaterial material;
};

inline std::vector<HypothesisContext> build_hypothesis_contexts(
    const PoseHypothesisSet& set, const SceneModel& model,
    const PinholeCamera& reference_camera) {
  std::vector<HypothesisContext> out;
  out.reserve(set.hypotheses.size());
  for (const auto& h : set.hypotheses) {
    HypothesisContext ctx;
    ctx.maps = hypothesis_maps(h, model, reference_camera);
    SceneModel single;
    single.meshes = {model.meshes.at(h.mesh)};
    single.materials = {model.materials.at(h.material)};
    single.instances = {{0, h.pose, 0}};
    ctx.world = CompiledScene(single);
    ctx.material = single.materials[0];
    out.push_back(std::move(ctx));
  }
  return out;
}

/// Reference-view pixels whose depth is still missing, restricted to the
/// union of the hypothesis silhouettes (planning outside the object wastes
/// the camera budget on empty space).
struct MissingPixelSet {
  std::vector<std::pair<int, int>> pixels;
};

inline MissingPixelSet missing_pixels(const DepthMap& current,
                                      std::span<const HypothesisContext> contexts) {
  MissingPixelSet out;
  for (int y = 0; y < current.height(); ++y)
    for (int x = 0; x < current.width(); ++x) {
      if (!is_missing(current.at(x, y))) continue;
      for (const auto& ctx : contexts)
        if (ctx.maps.hits.at(x, y) != kMiss) {
          out.pixels.emplace_back(x, y);
          break;
        }
    }
  return out;
}

/// Predicted probability that viewpoint `candidate` recovers pixel u under
/// one hypothesis: the full reflection chain at the hypothesized surface
/// point, zero when the point is occluded or outside either camera.
inline double pixel_gain(int x, int y, const HypothesisContext& ctx,
                         const PinholeCamera& reference_camera, const StereoRig& rig,
                         const ViewpointCandidate& candidate, const ResponseCurve& curve,
                         const SensingConfig& cfg) {
  if (ctx.maps.hits.at(x, y) == kMiss) return 0.0;
  const Vec3 point = reference_camera.backproject(x, y, ctx.maps.depth.at(x, y));
  // The hypothesis normal faces the reference camera; candidates that view
  // the surface from behind are rejected inside the chain.
  const Vec3 normal = ctx.maps.normal.at(x, y).cast<double>();
  const StereoRig placed = place_rig(rig, candidate.pose);
  return point_sensing_probability(point, normal, placed, ctx.material, ctx.world, curve, cfg);
}

struct CandidateGain {
  int id = 0;
  double gain = 0.0;
  std::vector<double> per_hypothesis;
};

struct GainReport {
  std::vector<CandidateGain> candidates;
  int chosen_id = -1;
  double chosen_gain = 0.0;
};

/// Expected number of recoverable missing pixels from one candidate:
/// hypothesis-weighted sum of per-pixel sensing probabilities.
inline CandidateGain viewpoint_gain(const ViewpointCandidate& candidate,
                                    const PoseHypothesisSet& set,
                                    std::span<const HypothesisContext> contexts,
                                    const MissingPixelSet& missing,
                                    const PinholeCamera& reference_camera,
                                    const StereoRig& rig, const ResponseCurve& curve,
                                    const SensingConfig& cfg) {
  CandidateGain out;
  out.id = candidate.id;
  out.per_hypothesis.resize(contexts.size(), 0.0);
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    double sum = 0;
    for (const auto& [x, y] : missing.pixels)
      sum += pixel_gain(x, y, contexts[k], reference_camera, rig, candidate, curve, cfg);
    out.per_hypothesis[k] = sum;
    out.gain += set.weights[k] * sum;
  }
  return out;
}

/// Scores every candidate and selects the argmax; ties break toward the
/// lowest candidate id.
inline GainReport select_nbv(std::span<const ViewpointCandidate> candidates,
                             const PoseHypothesisSet& set,
                             std::span<const HypothesisContext> contexts,
                             const MissingPixelSet& missing,
                             const PinholeCamera& reference_camera, const StereoRig& rig,
                             const ResponseCurve& curve, const SensingConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("select_nbv: no candidates");
  GainReport report;
  report.candidates.reserve(candidates.size());
  for (const auto& c : candidates)
    report.candidates.push_back(
        viewpoint_gain(c, set, contexts, missing, reference_camera, rig, curve, cfg));
  for (const auto& cg : report.candidates) {
    const bool better = report.chosen_id < 0 || cg.gain > report.chosen_gain ||
                        (cg.gain == report.chosen_gain && cg.id < report.chosen_id);
    if (better) {
      report.chosen_id = cg.id;
      report.chosen_gain = cg.gain;
    }
  }
  return report;
}

/// Baseline: seeded uniform choice among the remaining candidates.
inline int baseline_random(std::span<const ViewpointCandidate> candidates, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("baseline_random: no candidates");
  return candidates[rng.uniform_index(candidates.size())].id;
}

/// Baseline: candidate whose rig position is farthest (max-min Euclidean
/// distance) from every previously visited rig position.
inline int baseline_max_distance(std::span<const ViewpointCandidate> candidates,
                                 std::span<const Vec3> visited_positions) {
  if (candidates.empty()) throw std::invalid_argument("baseline_max_distance: no candidates");
  if (visited_positions.empty())
    throw std::invalid_argument("baseline_max_distance: need at least one visited pose");
  int best_id = -1;
  double best = -1;
  for (const auto& c : candidates) {
    double dmin = std::numeric_limits<double>::infinity();
    for (const Vec3& v : visited_positions)
      dmin = std::min(dmin, (c.pose.translation - v).norm());
    if (dmin > best) {
      best = dmin;
      best_id = c.id;
    }
  }
  return best_id;
}

enum class Policy { kNbv, kRandom, kMaxDistance };

struct StopRule {
  double gain_threshold = 0.0;  // stop when the best expected gain drops below
  int max_views = 3;            // additional views beyond the reference capture
};

struct LoopConfig {
  SceneModel scene_gt;
  SceneModel hypothesis_model;  // CAD + material tables for planning
  RigidPose gt_object_pose;     // truth for the synthetic pose estimator & metrics
  int object_mesh = 0;
  int object_material = 0;

  StereoRig rig;
  RigidPose reference_pose;
  std::vector<ViewpointCandidate> candidates;
  ResponseCurve curve;
  SensingConfig sensing;  // sensing.seed is the master seed for all captures

  Policy policy = Policy::kNbv;
  StopRule stop;

  int hypothesis_count = 5;
  double hypothesis_rot_std_deg = 2.0;
  double hypothesis_trans_std_mm = 3.0;
  std::uint64_t hypothesis_seed = 1;

  bool evaluate_pose = true;  // run ICP refinement per iteration
  double completion_err_mm = 2.0;
  double icp_corr_dist_mm = 5.0;
};

struct IterationRecord {
  int iteration = 0;
  int chosen_id = -1;  // -1: the reference capture
  double gain = 0.0;
  double completion_pct = 0.0;
  int missing_count = 0;
  double add_mm = std::numeric_limits<double>::quiet_NaN();
  bool correct = false;
  double wall_ms = 0.0;
};

struct LoopResult {
  DepthMap fused;
  std::vector<int> trajectory;
  std::vector<IterationRecord> records;  // records[0] is the reference capture
  PoseHypothesisSet hypotheses;
};

/// The depth-completion loop: estimate pose hypotheses from the reference
/// view, score candidate viewpoints by expected gain (or a baseline rule),
/// capture, fuse into the reference depth map, and repeat until the view
/// budget is exhausted, nothing is missing, or the best expected gain falls
/// below the threshold. Visited candidates leave the pool.
inline LoopResult run_nbv_loop(const LoopConfig& cfg) {
  if (cfg.candidates.empty()) throw std::invalid_argument("run_nbv_loop: no candidates");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&t_start] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t_start)
        .count();
  };

  const StereoRig ref_rig = place_rig(cfg.rig, cfg.reference_pose);
  SensingConfig capture_cfg = cfg.sensing;
  capture_cfg.seed = mix_seed(cfg.sensing.seed, 0);
  const CaptureResult initial = simulate_capture(cfg.scene_gt, ref_rig, cfg.curve, capture_cfg);

  const DepthMap& gt_depth = initial.left_view.depth;
  const Image<std::uint8_t> recover_mask = completion_mask(initial.depth, initial.left_view.hits);

  LoopResult result;
  result.hypotheses = synthetic_hypotheses(
      cfg.gt_object_pose, cfg.hypothesis_count, cfg.hypothesis_rot_std_deg,
      cfg.hypothesis_trans_std_mm, cfg.hypothesis_seed, cfg.object_mesh, cfg.object_material);
  const std::vector<HypothesisContext> contexts =
      build_hypothesis_contexts(result.hypotheses, cfg.hypothesis_model, ref_rig.left);

  FusionState state = make_fusion_state(ref_rig.left, initial.depth);

  const TriangleMesh& object = cfg.hypothesis_model.meshes.at(cfg.object_mesh);
  int best_hyp = 0;
  for (std::size_t k = 1; k < result.hypotheses.hypotheses.size(); ++k)
    if (result.hypotheses.hypotheses[k].confidence >
        result.hypotheses.hypotheses[best_hyp].confidence)
      best_hyp = int(k);
  const RigidPose initial_guess = result.hypotheses.hypotheses[best_hyp].pose;

  auto evaluate = [&](int iteration, int chosen, double gain) {
    IterationRecord rec;
    rec.iteration = iteration;
    rec.chosen_id = chosen;
    rec.gain = gain;
    rec.completion_pct = depth_completion_pct(initial.depth, state.fused, gt_depth,
                                              cfg.completion_err_mm, recover_mask);
    rec.missing_count = int(missing_pixels(state.fused, contexts).pixels.size());
    if (cfg.evaluate_pose) {
      std::vector<Vec3> observed;
      observed.reserve(state.points.size());
      for (const auto& fp : state.points) observed.push_back(fp.point);
      const IcpResult icp =
          icp_refine(initial_guess, object, observed, 50, cfg.icp_corr_dist_mm);
      rec.add_mm = add_error(icp.pose, cfg.gt_object_pose, object);
      rec.correct = pose_correct(rec.add_mm, object);
    }
    rec.wall_ms = elapsed_ms();
    result.records.push_back(rec);
  };

  evaluate(0, -1, 0.0);

  std::vector<ViewpointCandidate> pool = cfg.candidates;
  std::vector<Vec3> visited = {cfg.reference_pose.translation};
  Rng policy_rng(mix_seed(cfg.sensing.seed, 0x7a11ced));

  for (int iter = 1; iter <= cfg.stop.max_views && !pool.empty(); ++iter) {
    const MissingPixelSet missing = missing_pixels(state.fused, contexts);
    if (missing.pixels.empty()) break;

    int chosen_id = -1;
    double chosen_gain = 0.0;
    if (cfg.policy == Policy::kNbv) {
      const GainReport report = select_nbv(pool, result.hypotheses, contexts, missing,
                                           ref_rig.left, cfg.rig, cfg.curve, cfg.sensing);
      if (report.chosen_gain < cfg.stop.gain_threshold) break;
      chosen_id = report.chosen_id;
      chosen_gain = report.chosen_gain;
    } else if (cfg.policy == Policy::kRandom) {
      chosen_id = baseline_random(pool, policy_rng);
    } else {
      chosen_id = baseline_max_distance(pool, visited);
    }

    const auto it = std::find_if(pool.begin(), pool.end(),
                                 [&](const auto& c) { return c.id == chosen_id; });
    const ViewpointCandidate chosen = *it;
    pool.erase(it);
    visited.push_back(chosen.pose.translation);
    result.trajectory.push_back(chosen.id);

    SensingConfig view_cfg = cfg.sensing;
    view_cfg.seed = mix_seed(cfg.sensing.seed, std::uint64_t(iter));
    const CaptureResult capture =
        simulate_capture(cfg.scene_gt, place_rig(cfg.rig, chosen.pose), cfg.curve, view_cfg);
    state = fuse_view(std::move(state), capture.depth, place_rig(cfg.rig, chosen.pose).left,
                      &capture.left_view.normal);

    evaluate(iter, chosen.id, chosen_gain);
  }

  result.fused = state.fused;
  return result;
}

}  // namespace asnbv
