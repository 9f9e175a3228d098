#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "jlm/rotmath.hpp"
#include "jlm/skeleton.hpp"

namespace jlm {

struct MotionFrame {
  std::array<AxisAngle, kNumJoints> local_rotations{};
  Vec3 root_translation = Vec3::Zero();
};

struct MotionSequence {
  double fps = 60.0;
  std::vector<MotionFrame> frames;

  std::size_t size() const { return frames.size(); }
  LocalPose local_pose() const;
  std::vector<Vec3> root_translations() const;
  // Throws FormatError unless fps > 0, t >= 2 and every value is finite.
  void validate() const;
};

// Per-frame observation of head, left hand, right hand. Each device block
// holds rotation (6D), angular velocity (6D), position (3, m) and positional
// velocity (3, m/frame), in that order.
struct TrackingSignals {
  static constexpr std::size_t kDevices = 3;
  static constexpr std::size_t kDeviceWidth = 18;
  static constexpr std::size_t kWidth = kDevices * kDeviceWidth;  // 54
  static constexpr std::size_t kRotation = 0, kAngularVelocity = 6, kPosition = 12, kVelocity = 15;

  double fps = 60.0;
  std::size_t frames = 0;
  std::vector<double> values;  // frames x 54

  const double* row(std::size_t f) const { return values.data() + f * kWidth; }
  double* row(std::size_t f) { return values.data() + f * kWidth; }
  Vec3 position(std::size_t f, std::size_t device) const;
  Rot6D rotation(std::size_t f, std::size_t device) const;
};

// 1 where a feet-relevant joint (7, 8, 10, 11) is grounded.
struct ContactMask {
  static constexpr std::size_t kFeet = 4;
  std::size_t frames = 0;
  std::vector<std::uint8_t> values;  // frames x 4

  std::uint8_t at(std::size_t f, std::size_t foot) const { return values[f * kFeet + foot]; }
};

struct ContactThresholds {
  double height = 0.05;        // m
  double displacement = 0.02;  // m per frame, horizontal
};

enum class SynthKind { kIdleSway, kWalkCycle, kArmWave, kSquat };

namespace dataio {

inline constexpr int kMotionVersion = 1;

struct SaveOptions {
  // Writes frames to "<path>.bin" as row-major little-endian float32.
  bool binary_sidecar = false;
};

MotionSequence load_motion(const std::filesystem::path& path);
void save_motion(const MotionSequence& seq, const std::filesystem::path& path,
                 const SaveOptions& opt = {});
MotionSequence parse_motion(const std::string& text, const std::filesystem::path& base_dir = {});
std::string format_motion(const MotionSequence& seq);

TrackingSignals load_signals(const std::filesystem::path& path);
void save_signals(const TrackingSignals& signals, const std::filesystem::path& path);

TrackingSignals derive_tracking_signals(const MotionSequence& seq, const SkeletonTemplate& tmpl);
// Same, from a precomputed global motion.
TrackingSignals derive_tracking_signals(const GlobalMotion& motion, double fps);

ContactMask derive_contact_mask(const MotionSequence& seq, const SkeletonTemplate& tmpl,
                                const ContactThresholds& thr = {});
ContactMask derive_contact_mask(const GlobalMotion& motion, const ContactThresholds& thr = {});

// Shifts root z so that the 5th percentile of per-frame minimum joint
// height becomes zero.
MotionSequence floor_calibrate(const MotionSequence& seq, const SkeletonTemplate& tmpl);

SynthKind parse_synth_kind(std::string_view name);  // throws UnknownKind
std::string_view synth_kind_name(SynthKind kind);
MotionSequence synth_generate(SynthKind kind, double duration_s, double fps, std::uint64_t seed,
                              const SkeletonTemplate& tmpl);

// One training window of length t ending at frame start + t - 1.
struct Window {
  std::size_t sequence = 0;
  std::size_t start = 0;
  TrackingSignals signals;
  LocalPose pose;
  GlobalMotion motion;
  ContactMask contact;
};

// Uniform sampler over every (sequence, start) window of a dataset.
// Single consumer; deterministic given the seed.
class WindowSampler {
 public:
  WindowSampler(std::vector<MotionSequence> dataset, const SkeletonTemplate& tmpl, std::size_t t,
                std::uint64_t seed, const ContactThresholds& thr = {});

  std::size_t window_length() const { return t_; }
  std::size_t window_count() const { return total_; }
  std::size_t sequence_count() const { return seqs_.size(); }

  Window window_at(std::size_t sequence, std::size_t start) const;
  std::vector<Window> next_batch(std::size_t batch);

 private:
  struct Prepared {
    MotionSequence seq;
    LocalPose pose;
    GlobalMotion motion;
    TrackingSignals signals;
    ContactMask contact;
  };
  std::vector<Prepared> seqs_;
  std::vector<std::size_t> cumulative_;  // window counts prefix sums
  std::size_t t_;
  std::size_t total_ = 0;
  std::mt19937_64 rng_;
};

// Throws SequenceTooShort if any sequence has fewer than t frames.
WindowSampler window_batches(std::vector<MotionSequence> dataset, const SkeletonTemplate& tmpl,
                             std::size_t t, std::uint64_t seed);

}  // namespace dataio
}  // namespace jlm
