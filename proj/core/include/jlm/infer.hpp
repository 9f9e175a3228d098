#pragma once

#include <array>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "jlm/dataio.hpp"
#include "jlm/model.hpp"

namespace jlm {

struct FramePrediction {
  std::array<Mat3, kNumJoints> local_rotations;
  Vec3 root_translation = Vec3::Zero();  // head-aligned pelvis position
  Mat3 root_orientation = Mat3::Identity();
  std::array<Vec3, kNumJoints> positions;  // global, head-aligned
};

// Causal sliding-window predictor over one stream. Each pushed frame yields
// the prediction for that same frame. `history` (1..t, 0 meaning t) limits
// how many real frames the window sees; missing slots repeat the oldest
// available frame. Many streams may share one model.
class InferenceStream {
 public:
  explicit InferenceStream(const JLMModel& model, std::size_t history = 0);

  // row holds the 54 tracking values of the newest frame.
  FramePrediction push(std::span<const double> row);
  std::size_t frames_seen() const { return seen_; }
  std::size_t history() const { return history_; }

 private:
  const JLMModel& model_;
  std::size_t history_;
  std::deque<std::vector<double>> buffer_;
  std::size_t seen_ = 0;
};

// A source yields rows until it returns std::nullopt.
using SignalSource = std::function<std::optional<std::vector<double>>()>;
using FrameSink = std::function<void(const FramePrediction&)>;

// Drains the source through one stream; returns the number of frames emitted.
std::size_t infer_stream(const JLMModel& model, const SignalSource& source, const FrameSink& sink,
                         std::size_t history = 0);

// Same windows as the stream, evaluated in batches.
std::vector<FramePrediction> infer_windows(const JLMModel& model, const TrackingSignals& signals,
                                           std::size_t history = 0, std::size_t batch = 64);

// The padded t x 54 window the stream sees when frame `frame` arrives.
std::vector<double> window_rows(const TrackingSignals& signals, std::size_t frame, std::size_t t,
                                std::size_t history);

MotionSequence to_motion(const std::vector<FramePrediction>& frames, double fps);

// Throws ShapeMismatch unless 0 <= history <= t; returns the effective value.
std::size_t resolve_history(std::size_t history, std::size_t t);

}  // namespace jlm
