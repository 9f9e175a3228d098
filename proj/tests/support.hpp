#pragma once

// Shared helpers and independent reference implementations for the tests.
// Oracles avoid the library code paths they check: rotations come from
// Eigen's AngleAxis, FK multiplies each chain from scratch, attention is
// written as plain loops.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "jlm/dataio.hpp"
#include "jlm/rotmath.hpp"
#include "jlm/skeleton.hpp"

#ifndef JLM_TEST_ASSET_DIR
#define JLM_TEST_ASSET_DIR "assets"
#endif

namespace testing_support {

using jlm::Mat3;
using jlm::Vec3;

inline constexpr double kPi = 3.14159265358979323846;

inline jlm::SkeletonTemplate humanoid() {
  return jlm::SkeletonTemplate::load(std::filesystem::path(JLM_TEST_ASSET_DIR) / "humanoid22.json");
}

inline Mat3 eigen_rotation(const Vec3& axis_angle) {
  const double a = axis_angle.norm();
  if (a == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(a, axis_angle / a).toRotationMatrix();
}

inline Vec3 random_axis_angle(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  Vec3 axis(n(rng), n(rng), n(rng));
  axis.normalize();
  return axis * u(rng);
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Mat3 rz_deg(double deg) { return Eigen::AngleAxisd(deg * kPi / 180.0, Vec3::UnitZ()).toRotationMatrix(); }

// Gram-Schmidt written out by hand on plain arrays.
inline Mat3 naive_sixd(const double v[6]) {
  double a1[3] = {v[0], v[1], v[2]}, a2[3] = {v[3], v[4], v[5]};
  const double n1 = std::sqrt(a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]);
  double b1[3] = {a1[0] / n1, a1[1] / n1, a1[2] / n1};
  const double d = b1[0] * a2[0] + b1[1] * a2[1] + b1[2] * a2[2];
  double u[3] = {a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]};
  const double n2 = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  double b2[3] = {u[0] / n2, u[1] / n2, u[2] / n2};
  double b3[3] = {b1[1] * b2[2] - b1[2] * b2[1], b1[2] * b2[0] - b1[0] * b2[2], b1[0] * b2[1] - b1[1] * b2[0]};
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    m(r, 0) = b1[r];
    m(r, 1) = b2[r];
    m(r, 2) = b3[r];
  }
  return m;
}

// Each joint recomputed from the root down its own ancestor chain.
struct NaiveFk {
  std::vector<Vec3> positions;
  std::vector<Mat3> rotations;
};

inline NaiveFk naive_fk(const std::vector<Mat3>& local, const jlm::SkeletonTemplate& tmpl, const Vec3& root) {
  const std::size_t J = tmpl.parents.size();
  NaiveFk out{std::vector<Vec3>(J), std::vector<Mat3>(J)};
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<int> chain;
    for (int k = static_cast<int>(j); k >= 0; k = tmpl.parents[k]) chain.insert(chain.begin(), k);
    Mat3 g = Mat3::Identity();
    Vec3 p = root;
    for (std::size_t c = 0; c < chain.size(); ++c) {
      if (c > 0) p = p + g * tmpl.offsets[chain[c]];
      g = g * local[chain[c]];
    }
    out.positions[j] = p;
    out.rotations[j] = g;
  }
  return out;
}

inline jlm::MotionSequence constant_sequence(std::size_t frames, double fps, const Vec3& root,
                                             const std::array<jlm::AxisAngle, jlm::kNumJoints>& pose = {}) {
  jlm::MotionSequence seq;
  seq.fps = fps;
  for (std::size_t f = 0; f < frames; ++f) {
    jlm::MotionFrame fr;
    fr.local_rotations = pose;
    fr.root_translation = root;
    seq.frames.push_back(fr);
  }
  return seq;
}

inline jlm::MotionSequence random_sequence(std::size_t frames, std::mt19937_64& rng, double max_angle = 1.0) {
  jlm::MotionSequence seq;
  seq.fps = 30.0;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t f = 0; f < frames; ++f) {
    jlm::MotionFrame fr;
    for (auto& r : fr.local_rotations) r.r = random_axis_angle(rng, max_angle);
    fr.root_translation = Vec3(u(rng), u(rng), 1.0 + 0.1 * u(rng));
    seq.frames.push_back(fr);
  }
  return seq;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("jlm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing_support
