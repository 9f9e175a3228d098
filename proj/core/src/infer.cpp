#include "jlm/infer.hpp"

#include <algorithm>

#include "jlm/errors.hpp"

namespace jlm {
namespace {

constexpr std::size_t kW = TrackingSignals::kWidth;

// Decodes the last frame of window `b` of a (B, t, 22, 6) output.
FramePrediction decode_last(const nn::Tensor& theta, std::size_t b, const double* observed_row,
                            const SkeletonTemplate& tmpl) {
  const std::size_t t = theta.dim(1);
  const double* src = theta.data().data() + ((b * t) + (t - 1)) * kNumJoints * 6;
  FramePrediction out;
  LocalPose pose;
  pose.joints = kNumJoints;
  pose.rotations.resize(kNumJoints);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    Rot6D r;
    std::copy_n(src + j * 6, 6, r.v.begin());
    pose.rotations[j] = rotmath::sixd_to_matrix(r);
    out.local_rotations[j] = pose.rotations[j];
  }
  const Vec3 zero = Vec3::Zero();
  const GlobalMotion rel = skeleton::forward_kinematics(pose, tmpl, std::span<const Vec3>(&zero, 1));
  const Vec3 head(observed_row + TrackingSignals::kPosition);
  const auto aligned = skeleton::head_align(rel.positions, kNumJoints, std::span<const Vec3>(&head, 1));
  std::copy(aligned.begin(), aligned.end(), out.positions.begin());
  out.root_translation = aligned[0];
  out.root_orientation = rel.rot(0, 0);
  return out;
}

}  // namespace

std::size_t resolve_history(std::size_t history, std::size_t t) {
  if (history > t) {
    throw ShapeMismatch("window history " + std::to_string(history) + " exceeds the model window length " +
                        std::to_string(t));
  }
  return history == 0 ? t : history;
}

std::vector<double> window_rows(const TrackingSignals& signals, std::size_t frame, std::size_t t,
                                std::size_t history) {
  history = resolve_history(history, t);
  if (frame >= signals.frames) throw ShapeMismatch("window frame beyond the end of the signals");
  const std::size_t oldest = frame + 1 >= history ? frame + 1 - history : 0;
  std::vector<double> rows(t * kW);
  for (std::size_t k = 0; k < t; ++k) {
    // Slot k holds frame (frame - t + 1 + k), clamped to the oldest real one.
    const std::size_t back = t - 1 - k;
    const std::size_t src = frame >= back ? std::max(frame - back, oldest) : oldest;
    std::copy_n(signals.row(src), kW, rows.begin() + static_cast<long>(k * kW));
  }
  return rows;
}

InferenceStream::InferenceStream(const JLMModel& model, std::size_t history)
    : model_(model), history_(resolve_history(history, model.config().t)) {}

FramePrediction InferenceStream::push(std::span<const double> row) {
  if (row.size() != kW) throw ShapeMismatch("stream rows must hold 54 values, got " + std::to_string(row.size()));
  buffer_.emplace_back(row.begin(), row.end());
  if (buffer_.size() > history_) buffer_.pop_front();
  ++seen_;

  const std::size_t t = model_.config().t;
  std::vector<double> x(t * kW);
  const std::size_t have = buffer_.size();
  for (std::size_t k = 0; k < t; ++k) {
    const std::size_t back = t - 1 - k;
    const std::size_t idx = back < have ? have - 1 - back : 0;
    std::copy(buffer_[idx].begin(), buffer_[idx].end(), x.begin() + static_cast<long>(k * kW));
  }
  const nn::Tensor input = nn::Tensor::constant({1, t, kW}, std::move(x));
  const ModelOutput out = model_.full_forward(input);
  return decode_last(out.theta, 0, buffer_.back().data(), model_.skeleton());
}

std::size_t infer_stream(const JLMModel& model, const SignalSource& source, const FrameSink& sink,
                         std::size_t history) {
  InferenceStream stream(model, history);
  while (auto row = source()) sink(stream.push(*row));
  return stream.frames_seen();
}

std::vector<FramePrediction> infer_windows(const JLMModel& model, const TrackingSignals& signals,
                                           std::size_t history, std::size_t batch) {
  const std::size_t t = model.config().t;
  history = resolve_history(history, t);
  if (batch == 0) batch = 1;
  std::vector<FramePrediction> out;
  out.reserve(signals.frames);
  for (std::size_t first = 0; first < signals.frames; first += batch) {
    const std::size_t count = std::min(batch, signals.frames - first);
    std::vector<double> x;
    x.reserve(count * t * kW);
    for (std::size_t i = 0; i < count; ++i) {
      const auto rows = window_rows(signals, first + i, t, history);
      x.insert(x.end(), rows.begin(), rows.end());
    }
    const ModelOutput res = model.full_forward(nn::Tensor::constant({count, t, kW}, std::move(x)));
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(decode_last(res.theta, i, signals.row(first + i), model.skeleton()));
    }
  }
  return out;
}

MotionSequence to_motion(const std::vector<FramePrediction>& frames, double fps) {
  MotionSequence seq;
  seq.fps = fps;
  seq.frames.resize(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      seq.frames[f].local_rotations[j] = rotmath::matrix_to_axis_angle(frames[f].local_rotations[j]);
    }
    seq.frames[f].root_translation = frames[f].root_translation;
  }
  return seq;
}

}  // namespace jlm
