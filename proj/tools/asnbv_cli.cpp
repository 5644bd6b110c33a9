// Command line for the active-stereo simulation and next-best-view pipeline.
// Subcommands map to the pipeline stages: gen-scene, calibrate-response,
// calibrate-material, simulate, plan, run, eval.
//
// Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "asnbv/asnbv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw asnbv::ConfigError({"cannot open manifest: " + path});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw asnbv::ConfigError({std::string("parse error in ") + path + ": " + e.what()});
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? base / path : path;
}

asnbv::StereoRig rig_from_json(const json& j) {
  std::vector<std::string> errors;
  asnbv::StereoRig rig = asnbv::detail::parse_rig(j, errors);
  if (!errors.empty()) throw asnbv::ConfigError(std::move(errors));
  return rig;
}

int cmd_gen_scene(const std::string& type, const std::string& out, double width, double height,
                  double radius, double dihedral, int cells, bool binary) {
  asnbv::TriangleMesh mesh;
  if (type == "plate") mesh = asnbv::gen_plate(width, height, cells);
  else if (type == "sphere") mesh = asnbv::gen_sphere(radius);
  else if (type == "bent-plate") mesh = asnbv::gen_bent_plate(width, height, dihedral, cells);
  else throw asnbv::ConfigError({"gen-scene: unknown type '" + type + "'"});
  asnbv::save_ply(mesh, out, binary);
  std::cout << "wrote " << out << " (" << mesh.vertices.size() << " vertices, "
            << mesh.triangles.size() << " triangles, diameter " << mesh.diameter << " mm)\n";
  return 0;
}

int cmd_calibrate_response(const std::string& manifest_path, const std::string& out,
                           double lambda, int samples) {
  const json manifest = load_json(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  asnbv::ExposureStack stack;
  for (const auto& entry : manifest.at("images")) {
    stack.images.push_back(
        asnbv::load_intensity_png(resolve(base, entry.at("path").get<std::string>()).string()));
    stack.exposure_times_ms.push_back(entry.at("exposure_ms").get<double>());
  }
  const asnbv::ResponseCurve curve = asnbv::recover_response(stack, lambda, samples);
  curve.save(out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_calibrate_material(const std::string& manifest_path, const std::string& out) {
  const json manifest = load_json(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();

  const auto image =
      asnbv::load_intensity_png(resolve(base, manifest.at("image").get<std::string>()).string());
  const double dt = manifest.at("exposure_ms").get<double>();
  const auto depth =
      asnbv::load_depth_png(resolve(base, manifest.at("depth").get<std::string>()).string());
  const auto normals =
      asnbv::load_normal_map(resolve(base, manifest.at("normals").get<std::string>()).string());
  asnbv::MaskImage mask;
  if (manifest.contains("mask"))
    mask = asnbv::load_mask_png(resolve(base, manifest.at("mask").get<std::string>()).string());
  else
    mask = asnbv::MaskImage(image.width(), image.height(), 1);
  const asnbv::ResponseCurve curve = asnbv::ResponseCurve::load(
      resolve(base, manifest.at("response").get<std::string>()).string());
  asnbv::StereoRig rig = rig_from_json(manifest.value("rig", json::object()));
  if (manifest.contains("rig_pose"))
    rig = asnbv::place_rig(rig, asnbv::detail::parse_pose(manifest.at("rig_pose")));
  const double light = manifest.value("light_intensity", 1.0);

  const asnbv::MaterialFit fit =
      asnbv::calibrate_material(image, dt, depth, normals, rig, curve, mask, light);

  std::ofstream os(out);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << "k_d " << fit.material.k_d << "\n"
     << "k_s " << fit.material.k_s << "\n"
     << "n " << fit.material.n << "\n"
     << "rms_relative_residual " << fit.rms_relative_residual << "\n"
     << "samples_total " << fit.samples_total << "\n"
     << "holdout_count " << fit.holdout_count << "\n";
  for (const auto& w : fit.warnings) os << "warning " << w << "\n";
  std::cout << "k_d=" << fit.material.k_d << " k_s=" << fit.material.k_s
            << " n=" << fit.material.n << " rms=" << fit.rms_relative_residual << "\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool has_seed) {
  asnbv::ExperimentConfig cfg = asnbv::load_config(config_path);
  if (has_seed) cfg.sensing.seed = seed_override;
  fs::create_directories(out_dir);
  const asnbv::StereoRig placed = asnbv::place_rig(cfg.rig, cfg.reference_pose);
  const asnbv::CaptureResult cap =
      asnbv::simulate_capture(cfg.scene, placed, cfg.curve, cfg.sensing);
  const fs::path dir(out_dir);
  asnbv::save_intensity_png(cap.left, (dir / "left.png").string());
  asnbv::save_intensity_png(cap.right, (dir / "right.png").string());
  asnbv::save_depth_png(cap.depth, (dir / "depth.png").string());
  asnbv::save_depth_png(cap.left_view.depth, (dir / "depth_gt.png").string());
  asnbv::save_scalar_map(cap.probability, (dir / "probability.f32").string());
  asnbv::save_normal_map(cap.left_view.normal, (dir / "normals_gt.f32").string());
  std::cout << "wrote capture to " << out_dir << " (" << asnbv::count_valid(cap.depth) << "/"
            << cap.depth.size() << " pixels measured)\n";
  return 0;
}

int cmd_plan(const std::string& config_path, const std::string& out) {
  const asnbv::ExperimentConfig cfg = asnbv::load_config(config_path);
  const asnbv::LoopConfig lc = asnbv::make_loop_config(cfg, cfg.policy, cfg.sensing.seed);

  const asnbv::StereoRig ref_rig = asnbv::place_rig(lc.rig, lc.reference_pose);
  asnbv::SensingConfig capture_cfg = lc.sensing;
  capture_cfg.seed = asnbv::mix_seed(lc.sensing.seed, 0);
  const asnbv::CaptureResult initial =
      asnbv::simulate_capture(lc.scene_gt, ref_rig, lc.curve, capture_cfg);
  const asnbv::PoseHypothesisSet hyps = asnbv::synthetic_hypotheses(
      lc.gt_object_pose, lc.hypothesis_count, lc.hypothesis_rot_std_deg,
      lc.hypothesis_trans_std_mm, lc.hypothesis_seed, lc.object_mesh, lc.object_material);
  const auto contexts =
      asnbv::build_hypothesis_contexts(hyps, lc.hypothesis_model, ref_rig.left);
  const asnbv::MissingPixelSet missing = asnbv::missing_pixels(initial.depth, contexts);
  const asnbv::GainReport report =
      asnbv::select_nbv(lc.candidates, hyps, contexts, missing, ref_rig.left, lc.rig,
                        lc.curve, lc.sensing);

  std::string csv = "candidate_id,gain";
  for (std::size_t k = 0; k < hyps.hypotheses.size(); ++k)
    csv += ",hyp" + std::to_string(k);
  csv += "\n";
  for (const auto& cg : report.candidates) {
    csv += std::to_string(cg.id) + ',' + asnbv::format_double(cg.gain);
    for (const double g : cg.per_hypothesis) csv += ',' + asnbv::format_double(g);
    csv += '\n';
  }
  asnbv::write_text_file(out, csv);
  std::cout << "wrote " << out << "; best candidate " << report.chosen_id << " with gain "
            << report.chosen_gain << " over " << missing.pixels.size() << " missing pixels\n";
  return 0;
}

std::vector<asnbv::Policy> parse_policies(const std::string& list) {
  std::vector<asnbv::Policy> out;
  std::istringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "nbv") out.push_back(asnbv::Policy::kNbv);
    else if (tok == "random") out.push_back(asnbv::Policy::kRandom);
    else if (tok == "max-distance" || tok == "max_distance")
      out.push_back(asnbv::Policy::kMaxDistance);
    else throw asnbv::ConfigError({"unknown policy '" + tok + "'"});
  }
  if (out.empty()) throw asnbv::ConfigError({"no policies given"});
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& policies_arg, const std::string& seeds_arg, bool save_fused) {
  const asnbv::ExperimentConfig cfg = asnbv::load_config(config_path);

  std::vector<asnbv::Policy> policies =
      policies_arg.empty() ? std::vector<asnbv::Policy>{cfg.policy}
                           : parse_policies(policies_arg);
  std::vector<std::uint64_t> seeds;
  if (seeds_arg.empty()) {
    seeds.push_back(cfg.sensing.seed);
  } else {
    std::istringstream ss(seeds_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
  }

  const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
  fs::create_directories(dir);
  const asnbv::ExperimentResult result = asnbv::run_experiment(cfg, policies, seeds);
  asnbv::write_text_file((fs::path(dir) / "results.csv").string(),
                         asnbv::results_csv(result.rows));
  asnbv::write_text_file((fs::path(dir) / "timings.csv").string(),
                         asnbv::timings_csv(result.rows));
  asnbv::write_text_file((fs::path(dir) / "manifest.json").string(), result.manifest);
  if (save_fused)
    for (const auto& [run_id, depth] : result.fused)
      asnbv::save_depth_png(depth, (fs::path(dir) / ("fused_" + run_id + ".png")).string());
  std::cout << "wrote " << result.rows.size() << " rows to " << dir << "/results.csv\n";
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& out) {
  const json manifest = load_json(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::string csv = "object_id,completion_pct,add_mm,correct\n";
  for (const auto& obj : manifest.at("objects")) {
    const std::string id = obj.value("id", "object");
    const auto gt =
        asnbv::load_depth_png(resolve(base, obj.at("gt_depth").get<std::string>()).string());
    const auto before =
        asnbv::load_depth_png(resolve(base, obj.at("before").get<std::string>()).string());
    const auto after =
        asnbv::load_depth_png(resolve(base, obj.at("after").get<std::string>()).string());
    asnbv::MaskImage mask;
    if (obj.contains("mask"))
      mask = asnbv::load_mask_png(resolve(base, obj.at("mask").get<std::string>()).string());
    else {  // object pixels = valid ground truth
      mask = asnbv::MaskImage(gt.width(), gt.height(), 0);
      for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
          if (!asnbv::is_missing(gt.at(x, y)) && asnbv::is_missing(before.at(x, y)))
            mask.at(x, y) = 1;
    }
    const double err_mm = obj.value("err_mm", 2.0);
    const double completion = asnbv::depth_completion_pct(before, after, gt, err_mm, mask);

    std::string add_str, correct_str = "";
    if (obj.contains("mesh") && obj.contains("pose_est") && obj.contains("pose_gt")) {
      const asnbv::TriangleMesh mesh =
          asnbv::load_mesh(resolve(base, obj.at("mesh").get<std::string>()).string());
      const asnbv::RigidPose est = asnbv::detail::parse_pose(obj.at("pose_est"));
      const asnbv::RigidPose gtp = asnbv::detail::parse_pose(obj.at("pose_gt"));
      const double add = asnbv::add_error(est, gtp, mesh);
      add_str = asnbv::format_double(add);
      correct_str = asnbv::pose_correct(add, mesh) ? "1" : "0";
    }
    csv += id + ',' + asnbv::format_double(completion) + ',' + add_str + ',' + correct_str + '\n';
  }
  asnbv::write_text_file(out, csv);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-stereo sensing simulator and next-best-view planner for reflective objects"};
  app.require_subcommand(1);

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Write a built-in scene mesh as PLY");
  std::string gen_type = "plate", gen_out = "scene.ply";
  double gen_width = 200, gen_height = 200, gen_radius = 100, gen_dihedral = 120;
  int gen_cells = 16;
  bool gen_binary = false;
  gen->add_option("--type", gen_type, "plate | sphere | bent-plate");
  gen->add_option("--out", gen_out, "output PLY path");
  gen->add_option("--width-mm", gen_width);
  gen->add_option("--height-mm", gen_height);
  gen->add_option("--radius-mm", gen_radius);
  gen->add_option("--dihedral-deg", gen_dihedral);
  gen->add_option("--cells", gen_cells);
  gen->add_flag("--binary", gen_binary, "binary_little_endian PLY");

  // calibrate-response
  auto* cresp = app.add_subcommand("calibrate-response",
                                   "Recover the inverse log response from an exposure stack");
  std::string cresp_manifest, cresp_out = "curve.txt";
  double cresp_lambda = 100.0;
  int cresp_samples = 256;
  cresp->add_option("--manifest", cresp_manifest, "JSON stack manifest")->required();
  cresp->add_option("--out", cresp_out);
  cresp->add_option("--lambda", cresp_lambda, "smoothness weight");
  cresp->add_option("--samples", cresp_samples, "sample pixel count");

  // calibrate-material
  auto* cmat = app.add_subcommand("calibrate-material",
                                  "Two-stage Phong parameter fit from a calibration capture");
  std::string cmat_manifest, cmat_out = "material.txt";
  cmat->add_option("--manifest", cmat_manifest, "JSON capture manifest")->required();
  cmat->add_option("--out", cmat_out);

  // simulate
  auto* sim = app.add_subcommand("simulate", "One capture from the reference viewpoint");
  std::string sim_config, sim_out = "capture";
  std::uint64_t sim_seed = 0;
  sim->add_option("--config", sim_config)->required();
  sim->add_option("--out-dir", sim_out);
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override sensing seed");

  // plan
  auto* plan = app.add_subcommand("plan", "Score all candidate viewpoints once");
  std::string plan_config, plan_out = "gains.csv";
  plan->add_option("--config", plan_config)->required();
  plan->add_option("--out", plan_out);

  // run
  auto* run = app.add_subcommand("run", "Full depth-completion experiment");
  std::string run_config, run_out, run_policies, run_seeds;
  bool run_fused = false;
  run->add_option("--config", run_config)->required();
  run->add_option("--out-dir", run_out, "default: config output_dir");
  run->add_option("--policies", run_policies, "comma list, default: config policy");
  run->add_option("--seeds", run_seeds, "comma list, default: config sensing seed");
  run->add_flag("--save-fused", run_fused, "write fused depth PNG per run");

  // eval
  auto* ev = app.add_subcommand("eval", "Completion and pose metrics from depth maps");
  std::string ev_manifest, ev_out = "metrics.csv";
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--out", ev_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_scene(gen_type, gen_out, gen_width, gen_height, gen_radius, gen_dihedral,
                           gen_cells, gen_binary);
    if (cresp->parsed())
      return cmd_calibrate_response(cresp_manifest, cresp_out, cresp_lambda, cresp_samples);
    if (cmat->parsed()) return cmd_calibrate_material(cmat_manifest, cmat_out);
    if (sim->parsed())
      return cmd_simulate(sim_config, sim_out, sim_seed, sim_seed_opt->count() > 0);
    if (plan->parsed()) return cmd_plan(plan_config, plan_out);
    if (run->parsed()) return cmd_run(run_config, run_out, run_policies, run_seeds, run_fused);
    if (ev->parsed()) return cmd_eval(ev_manifest, ev_out);
  } catch (const asnbv::ConfigError& e) {
    for (const auto& msg : e.errors()) std::cerr << "error: " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
