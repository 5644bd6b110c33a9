#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "asnbv/config.hpp"

namespace asnbv {

inline const char* policy_name(Policy p) {
  switch (p) {
    case Policy::kNbv: return "nbv";
    case Policy::kRandom: return "random";
    case Policy::kMaxDistance: return "max-distance";
  }
  return "?";
}

struct ResultRow {
  std::string run_id;
  std::string policy;
  std::uint64_t seed = 0;
  int iteration = 0;
  int chosen_viewpoint = -1;
  double gain = 0.0;
  double completion_pct = 0.0;
  int missing_count = 0;
  double add_mm = std::numeric_limits<double>::quiet_NaN();
  bool correct = false;
  double wall_ms = 0.0;  // serialized to the timing sidecar, not results.csv
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::string manifest;  // JSON: config hash, policies, seeds
  std::vector<std::pair<std::string, DepthMap>> fused;  // run id -> final depth
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

/// Deterministic result table; timing lives in the separate sidecar so two
/// runs of the same manifest produce byte-identical bytes here.
inline std::string results_csv(std::span<const ResultRow> rows) {
  std::string out =
      "run_id,policy,seed,iteration,chosen_viewpoint,gain,completion_pct,"
      "missing_count,add_mm,correct\n";
  for (const auto& r : rows) {
    out += r.run_id + ',' + r.policy + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.iteration) + ',' + std::to_string(r.chosen_viewpoint) + ',' +
           format_double(r.gain) + ',' + format_double(r.completion_pct) + ',' +
           std::to_string(r.missing_count) + ',' + format_double(r.add_mm) + ',' +
           (r.correct ? "1" : "0") + '\n';
  }
  return out;
}

inline std::string timings_csv(std::span<const ResultRow> rows) {
  std::string out = "run_id,iteration,wall_ms\n";
  for (const auto& r : rows)
    out += r.run_id + ',' + std::to_string(r.iteration) + ',' + format_double(r.wall_ms) + '\n';
  return out;
}

/// Executes the completion loop for every (policy, seed) pair. Runs are
/// independent; rows come out grouped by policy then seed then iteration, so
/// the emitted CSV does not depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       std::span<const Policy> policies,
                                       std::span<const std::uint64_t> seeds) {
  ExperimentResult result;
  for (const Policy policy : policies) {
    for (const std::uint64_t seed : seeds) {
      const LoopConfig lc = make_loop_config(cfg, policy, seed);
      const LoopResult lr = run_nbv_loop(lc);
      const std::string run_id =
          std::string(policy_name(policy)) + "-s" + std::to_string(seed);
      for (const auto& rec : lr.records) {
        ResultRow row;
        row.run_id = run_id;
        row.policy = policy_name(policy);
        row.seed = seed;
        row.iteration = rec.iteration;
        row.chosen_viewpoint = rec.chosen_id;
        row.gain = rec.gain;
        row.completion_pct = rec.completion_pct;
        row.missing_count = rec.missing_count;
        row.add_mm = rec.add_mm;
        row.correct = rec.correct;
        row.wall_ms = rec.wall_ms;
        result.rows.push_back(row);
      }
      result.fused.emplace_back(run_id, lr.fused);
    }
  }

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(cfg.hash()));
  nlohmann::json manifest;
  manifest["config_hash"] = hash_hex;
  auto& pol = manifest["policies"] = nlohmann::json::array();
  for (const Policy p : policies) pol.push_back(policy_name(p));
  auto& sd = manifest["seeds"] = nlohmann::json::array();
  for (const std::uint64_t s : seeds) sd.push_back(s);
  result.manifest = manifest.dump(2) + "\n";
  return result;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace asnbv
