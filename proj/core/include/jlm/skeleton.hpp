#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jlm/rotmath.hpp"

namespace jlm {

inline constexpr std::size_t kNumJoints = 22;

// Joint ids of the 22-joint SMPL body tree.
namespace joint {
inline constexpr int kPelvis = 0, kLeftHip = 1, kRightHip = 2, kSpine1 = 3;
inline constexpr int kLeftKnee = 4, kRightKnee = 5, kSpine2 = 6;
inline constexpr int kLeftAnkle = 7, kRightAnkle = 8, kSpine3 = 9;
inline constexpr int kLeftFoot = 10, kRightFoot = 11, kNeck = 12;
inline constexpr int kLeftCollar = 13, kRightCollar = 14, kHead = 15;
inline constexpr int kLeftShoulder = 16, kRightShoulder = 17;
inline constexpr int kLeftElbow = 18, kRightElbow = 19;
inline constexpr int kLeftWrist = 20, kRightWrist = 21;

inline constexpr std::array<int, 3> kTracked = {kHead, kLeftWrist, kRightWrist};
inline constexpr std::array<int, 2> kHands = {kLeftWrist, kRightWrist};
inline constexpr std::array<int, 4> kFeet = {kLeftAnkle, kRightAnkle, kLeftFoot, kRightFoot};
inline constexpr std::array<int, 13> kUpperBody = {3, 6, 9, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21};
inline constexpr std::array<int, 9> kLowerBody = {0, 1, 2, 4, 5, 7, 8, 10, 11};
}  // namespace joint

// Kinematic tree with rest offsets. Offsets are expressed in the parent
// frame at rest, meters, +z up.
struct SkeletonTemplate {
  std::vector<int> parents;
  std::vector<Vec3> offsets;

  std::size_t joint_count() const { return parents.size(); }

  // Throws TopologyError unless parents[0] == -1, 0 <= parents[j] < j and
  // offsets are finite with matching length.
  void validate() const;

  static SkeletonTemplate load(const std::filesystem::path& path);
  static SkeletonTemplate from_json_text(const std::string& text);
  std::string to_json_text() const;
  void save(const std::filesystem::path& path) const;
};

// t frames x J joints, frame-major.
struct LocalPose {
  std::size_t joints = kNumJoints;
  std::vector<Mat3> rotations;

  std::size_t frames() const { return joints ? rotations.size() / joints : 0; }
  const Mat3& at(std::size_t f, std::size_t j) const { return rotations[f * joints + j]; }
  Mat3& at(std::size_t f, std::size_t j) { return rotations[f * joints + j]; }
};

struct GlobalMotion {
  std::size_t joints = kNumJoints;
  std::vector<Vec3> positions;
  std::vector<Mat3> rotations;

  std::size_t frames() const { return joints ? positions.size() / joints : 0; }
  const Vec3& pos(std::size_t f, std::size_t j) const { return positions[f * joints + j]; }
  Vec3& pos(std::size_t f, std::size_t j) { return positions[f * joints + j]; }
  const Mat3& rot(std::size_t f, std::size_t j) const { return rotations[f * joints + j]; }
};

namespace skeleton {

GlobalMotion forward_kinematics(const LocalPose& pose, const SkeletonTemplate& tmpl,
                                std::span<const Vec3> root_translation);

// Positions re-expressed relative to the head joint; rotations untouched.
GlobalMotion to_head_relative(const GlobalMotion& motion, int head_index = joint::kHead);

// Adds (observed_head - local_head) to every joint of each frame.
std::vector<Vec3> head_align(std::span<const Vec3> local_positions, std::size_t joints,
                             std::span<const Vec3> observed_head,
                             int head_index = joint::kHead);

}  // namespace skeleton
}  // namespace jlm
