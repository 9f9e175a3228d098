#include <cmath>
#include <numbers>

#include "jlm/dataio.hpp"
#include "jlm/errors.hpp"

namespace jlm::dataio {
namespace {

using rotmath::rot_x;
using rotmath::rot_y;
using rotmath::rot_z;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Per-sequence jitter drawn from the seed.
struct Variation {
  double amp = 1.0;
  double freq = 1.0;
  double phase = 0.0;
  double heading = 0.0;
};

// Arms hang from the T-pose rest by rotating about y.
constexpr double kArmDrop = 1.25;

using PoseFrame = std::array<Mat3, kNumJoints>;

PoseFrame identity_frame() {
  PoseFrame p;
  p.fill(Mat3::Identity());
  return p;
}

PoseFrame idle_sway(double t, const Variation& v) {
  PoseFrame p = identity_frame();
  const double w = kTwoPi * 0.25 * v.freq;
  const double a = 0.05 * v.amp;
  const double s1 = std::sin(w * t + v.phase);
  const double s2 = std::sin(0.7 * w * t + 2.0 * v.phase);
  p[joint::kPelvis] = rot_z(v.heading) * rot_y(0.5 * a * s1);
  p[joint::kLeftHip] = rot_y(-0.5 * a * s1);
  p[joint::kRightHip] = rot_y(-0.5 * a * s1);
  p[joint::kSpine1] = rot_x(0.4 * a * s2);
  p[joint::kSpine2] = rot_y(0.4 * a * s1);
  p[joint::kNeck] = rot_z(a * s2);
  p[joint::kHead] = rot_x(0.5 * a * s1);
  p[joint::kLeftShoulder] = rot_y(kArmDrop + a * s2) * rot_x(0.5 * a * s1);
  p[joint::kRightShoulder] = rot_y(-kArmDrop - a * s1) * rot_x(-0.5 * a * s2);
  p[joint::kLeftElbow] = rot_z(0.2 + 0.5 * a * s1);
  p[joint::kRightElbow] = rot_z(-0.2 - 0.5 * a * s2);
  return p;
}

PoseFrame walk_cycle(double t, const Variation& v) {
  PoseFrame p = identity_frame();
  const double phi = kTwoPi * 0.9 * v.freq * t + v.phase;
  const double s = std::sin(phi), c = std::cos(phi);
  const double hip = 0.35 * v.amp;
  const double knee = 0.9 * v.amp;
  // Knee flexes during that leg's swing (hip angle increasing).
  const double swing_l = 0.25 * (1.0 + c) * (1.0 + c);
  const double swing_r = 0.25 * (1.0 - c) * (1.0 - c);
  p[joint::kPelvis] = rot_z(v.heading) * rot_z(-0.05 * s);
  p[joint::kLeftHip] = rot_x(hip * s);
  p[joint::kRightHip] = rot_x(-hip * s);
  p[joint::kLeftKnee] = rot_x(-knee * swing_l);
  p[joint::kRightKnee] = rot_x(-knee * swing_r);
  p[joint::kLeftAnkle] = rot_x(0.3 * knee * swing_l);
  p[joint::kRightAnkle] = rot_x(0.3 * knee * swing_r);
  p[joint::kSpine1] = rot_z(0.08 * s);
  p[joint::kSpine2] = rot_x(0.03 * std::sin(2.0 * phi));
  p[joint::kNeck] = rot_z(-0.06 * s);
  p[joint::kLeftShoulder] = rot_x(-0.3 * v.amp * s) * rot_y(kArmDrop);
  p[joint::kRightShoulder] = rot_x(0.3 * v.amp * s) * rot_y(-kArmDrop);
  p[joint::kLeftElbow] = rot_z(0.3 + 0.15 * s);
  p[joint::kRightElbow] = rot_z(-0.3 + 0.15 * s);
  return p;
}

PoseFrame arm_wave(double t, const Variation& v) {
  PoseFrame p = identity_frame();
  const double w = kTwoPi * 0.6 * v.freq;
  const double s = std::sin(w * t + v.phase);
  const double f = std::sin(2.0 * w * t + v.phase);
  p[joint::kPelvis] = rot_z(v.heading);
  p[joint::kSpine2] = rot_y(-0.05 * s);
  p[joint::kNeck] = rot_z(0.1 * s);
  // Right arm raised and waving, left arm swinging up and down at its side.
  p[joint::kRightShoulder] = rot_y(0.9 + 0.25 * v.amp * s);
  p[joint::kRightElbow] = rot_y(0.9 + 0.5 * v.amp * f);
  p[joint::kLeftShoulder] = rot_y(kArmDrop - 0.6 * v.amp * (0.5 + 0.5 * s)) * rot_x(0.2 * f);
  p[joint::kLeftElbow] = rot_z(0.4 + 0.3 * v.amp * s);
  return p;
}

PoseFrame squat(double t, const Variation& v) {
  PoseFrame p = identity_frame();
  const double w = kTwoPi * 0.3 * v.freq;
  const double depth = 0.5 * (1.0 - std::cos(w * t + v.phase));  // 0..1, smooth
  const double a = 0.9 * v.amp;
  p[joint::kPelvis] = rot_z(v.heading);
  p[joint::kLeftHip] = rot_x(a * depth);
  p[joint::kRightHip] = rot_x(a * depth);
  p[joint::kLeftKnee] = rot_x(-2.0 * a * depth);
  p[joint::kRightKnee] = rot_x(-2.0 * a * depth);
  p[joint::kLeftAnkle] = rot_x(a * depth);
  p[joint::kRightAnkle] = rot_x(a * depth);
  p[joint::kSpine1] = rot_x(0.35 * depth);
  p[joint::kHead] = rot_x(-0.2 * depth);
  p[joint::kLeftShoulder] = rot_x(1.0 * depth) * rot_y(kArmDrop * (1.0 - 0.8 * depth));
  p[joint::kRightShoulder] = rot_x(1.0 * depth) * rot_y(-kArmDrop * (1.0 - 0.8 * depth));
  return p;
}

}  // namespace

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "idle_sway") return SynthKind::kIdleSway;
  if (name == "walk_cycle") return SynthKind::kWalkCycle;
  if (name == "arm_wave") return SynthKind::kArmWave;
  if (name == "squat") return SynthKind::kSquat;
  throw UnknownKind("unknown motion kind '" + std::string(name) +
                    "' (expected idle_sway, walk_cycle, arm_wave or squat)");
}

std::string_view synth_kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::kIdleSway: return "idle_sway";
    case SynthKind::kWalkCycle: return "walk_cycle";
    case SynthKind::kArmWave: return "arm_wave";
    case SynthKind::kSquat: return "squat";
  }
  return "";
}

MotionSequence synth_generate(SynthKind kind, double duration_s, double fps, std::uint64_t seed,
                              const SkeletonTemplate& tmpl) {
  tmpl.validate();
  if (tmpl.joint_count() != kNumJoints) throw TopologyError("synthetic motion needs a 22-joint template");
  const auto frames = static_cast<std::size_t>(std::llround(duration_s * fps));
  if (!(fps > 0.0) || frames < 2) throw SequenceTooShort("duration * fps must give at least 2 frames");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Variation var;
  var.amp = 0.9 + 0.2 * u01(rng);
  var.freq = 0.95 + 0.1 * u01(rng);
  var.phase = kTwoPi * u01(rng);
  var.heading = std::numbers::pi * (2.0 * u01(rng) - 1.0);

  LocalPose pose;
  pose.joints = kNumJoints;
  pose.rotations.reserve(frames * kNumJoints);
  for (std::size_t i = 0; i < frames; ++i) {
    const double t = static_cast<double>(i) / fps;
    PoseFrame p;
    switch (kind) {
      case SynthKind::kIdleSway: p = idle_sway(t, var); break;
      case SynthKind::kWalkCycle: p = walk_cycle(t, var); break;
      case SynthKind::kArmWave: p = arm_wave(t, var); break;
      case SynthKind::kSquat: p = squat(t, var); break;
    }
    pose.rotations.insert(pose.rotations.end(), p.begin(), p.end());
  }

  // Root placement: the lowest joint rests on the floor and the lowest
  // feet joint stays planted horizontally from one frame to the next.
  const std::vector<Vec3> zero(frames, Vec3::Zero());
  const GlobalMotion rel = skeleton::forward_kinematics(pose, tmpl, zero);
  std::vector<Vec3> root(frames, Vec3::Zero());
  for (std::size_t i = 0; i < frames; ++i) {
    double lowest = rel.pos(i, 0).z();
    for (std::size_t j = 1; j < kNumJoints; ++j) lowest = std::min(lowest, rel.pos(i, j).z());
    root[i].z() = -lowest;
    if (i == 0) continue;
    std::size_t anchor = static_cast<std::size_t>(joint::kFeet[0]);
    for (int j : joint::kFeet) {
      if (rel.pos(i - 1, static_cast<std::size_t>(j)).z() < rel.pos(i - 1, anchor).z()) {
        anchor = static_cast<std::size_t>(j);
      }
    }
    const Vec3 d = rel.pos(i, anchor) - rel.pos(i - 1, anchor);
    root[i].x() = root[i - 1].x() - d.x();
    root[i].y() = root[i - 1].y() - d.y();
  }

  MotionSequence seq;
  seq.fps = fps;
  seq.frames.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      seq.frames[i].local_rotations[j] = rotmath::matrix_to_axis_angle(pose.at(i, j));
    }
    seq.frames[i].root_translation = root[i];
  }
  return floor_calibrate(seq, tmpl);
}

}  // namespace jlm::dataio
