#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/SVD>

#include "asnbv/core.hpp"
#include "asnbv/geometry.hpp"

namespace asnbv {

/// Static 3D k-d tree for nearest-neighbor queries.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Vec3> points) : pts_(std::move(points)) {
    idx_.resize(pts_.size());
    std::iota(idx_.begin(), idx_.end(), 0);
    if (!pts_.empty()) build(0, int(pts_.size()), 0);
  }

  std::size_t size() const { return pts_.size(); }
  const Vec3& point(int i) const { return pts_[i]; }

  /// Index of the nearest point and its squared distance; (-1, inf) when empty.
  std::pair<int, double> nearest(const Vec3& q) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    if (!pts_.empty()) search(q, 0, int(pts_.size()), 0, best, best_d2);
    return {best, best_d2};
  }

 private:
  void build(int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    const int axis = depth % 3;
    const int mid = (lo + hi) / 2;
    std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi,
                     [&](int a, int b) { return pts_[a][axis] < pts_[b][axis]; });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void search(const Vec3& q, int lo, int hi, int depth, int& best, double& best_d2) const {
    if (lo >= hi) return;
    const int axis = depth % 3;
    const int mid = (lo + hi) / 2;
    const Vec3& p = pts_[idx_[mid]];
    const double d2 = (q - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = idx_[mid];
    }
    const double delta = q[axis] - p[axis];
    const int first_lo = delta < 0 ? lo : mid + 1;
    const int first_hi = delta < 0 ? mid : hi;
    const int second_lo = delta < 0 ? mid + 1 : lo;
    const int second_hi = delta < 0 ? hi : mid;
    search(q, first_lo, first_hi, depth + 1, best, best_d2);
    if (delta * delta < best_d2) search(q, second_lo, second_hi, depth + 1, best, best_d2);
  }

  std::vector<Vec3> pts_;
  std::vector<int> idx_;
};

/// Deterministic area-weighted surface sampling.
inline std::vector<Vec3> sample_mesh_surface(const TriangleMesh& mesh, int count,
                                             std::uint64_t seed = 7) {
  std::vector<double> cum;
  cum.reserve(mesh.triangles.size());
  double total = 0;
  for (const auto& t : mesh.triangles) {
    const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    total += 0.5 * e1.cross(e2).norm();
    cum.push_back(total);
  }
  std::vector<Vec3> out;
  out.reserve(count);
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform() * total;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto& t = mesh.triangles[std::min<std::size_t>(it - cum.begin(),
                                                         mesh.triangles.size() - 1)];
    double a = rng.uniform(), b = rng.uniform();
    const double sa = std::sqrt(a);
    const double w0 = 1.0 - sa, w1 = sa * (1.0 - b), w2 = sa * b;
    out.push_back(w0 * mesh.vertices[t[0]] + w1 * mesh.vertices[t[1]] +
                  w2 * mesh.vertices[t[2]]);
  }
  return out;
}

struct IcpResult {
  RigidPose pose;
  bool enough_correspondences = true;  // false: returned pose is the initial guess
  bool converged = false;
  double rms = 0.0;
  int iterations = 0;
};

/// Point-to-point ICP of area-sampled model points against an observed cloud.
/// Correspondences are found in the model frame (observed points are pulled
/// back through the current pose estimate), rejected beyond corr_dist, and
/// each iteration solves the absolute orientation in closed form. Iterations
/// that would increase the correspondence RMS are rejected, so the inner
/// objective descends monotonically.
inline IcpResult icp_refine(const RigidPose& initial, const TriangleMesh& mesh,
                            std::span<const Vec3> observed, int max_iter = 50,
                            double corr_dist_mm = 5.0, int model_samples = 10000,
                            std::uint64_t sample_seed = 7,
                            std::vector<double>* rms_trace = nullptr) {
  IcpResult res;
  res.pose = initial;
  if (observed.size() < 100) {
    res.enough_correspondences = false;
    return res;
  }
  const std::vector<Vec3> model = sample_mesh_surface(mesh, model_samples, sample_seed);
  const KdTree3 tree(model);
  const double corr_d2 = corr_dist_mm * corr_dist_mm;

  double prev_rms = std::numeric_limits<double>::infinity();
  RigidPose pose = initial;

  for (int iter = 0; iter < max_iter; ++iter) {
    const RigidPose inv = pose.inverse();
    std::vector<std::pair<Vec3, Vec3>> pairs;  // (model point, observed target)
    double sq = 0;
    for (const Vec3& p : observed) {
      const Vec3 q = inv.apply(p);
      const auto [idx, d2] = tree.nearest(q);
      if (idx < 0 || d2 > corr_d2) continue;
      pairs.emplace_back(model[idx], p);
      sq += d2;
    }
    if (int(pairs.size()) < 100) {
      res.enough_correspondences = false;
      res.pose = initial;
      return res;
    }
    const double rms = std::sqrt(sq / double(pairs.size()));
    if (rms > prev_rms + 1e-12) break;  // keep the inner objective monotone
    if (rms_trace) rms_trace->push_back(rms);
    res.pose = pose;
    res.rms = rms;
    res.iterations = iter;
    if (prev_rms - rms < 1e-6 * std::max(prev_rms, 1e-12)) {
      res.converged = true;
      break;
    }
    prev_rms = rms;

    // Closed-form absolute orientation (Kabsch) for the matched pairs.
    Vec3 cm = Vec3::Zero(), co = Vec3::Zero();
    for (const auto& [m, o] : pairs) {
      cm += m;
      co += o;
    }
    cm /= double(pairs.size());
    co /= double(pairs.size());
    Mat3 h = Mat3::Zero();
    for (const auto& [m, o] : pairs) h += (m - cm) * (o - co).transpose();
    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixV() * svd.matrixU().transpose();
    if (r.determinant() < 0) {
      Mat3 flip = Mat3::Identity();
      flip(2, 2) = -1;
      r = svd.matrixV() * flip * svd.matrixU().transpose();
    }
    pose.rotation = r;
    pose.translation = co - r * cm;
  }
  return res;
}

}  // namespace asnbv
