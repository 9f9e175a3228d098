#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jlm/dataio.hpp"
#include "jlm/skeleton.hpp"

namespace jlm {

// Units: degrees, cm, cm/s, 10^2 m/s^3, cm, cm.
struct MetricsReport {
  double mpjre = 0, mpjpe = 0, mpjve = 0, jitter = 0, ground = 0, skate = 0;
  double h_pe = 0, u_pe = 0, l_pe = 0;
  std::size_t frames = 0;
  std::size_t contact_frames = 0;

  // In report order, keyed MPJRE, MPJPE, MPJVE, Jitter, Ground, Skate, H-PE, U-PE, L-PE.
  std::vector<std::pair<std::string, double>> named() const;
  bool operator==(const MetricsReport&) const = default;
};

struct SequenceReport {
  std::string name;
  MetricsReport metrics;
};

struct EvaluationReport {
  std::vector<SequenceReport> sequences;
  MetricsReport aggregate;
};

namespace metrics {

inline constexpr int kReportVersion = 1;

// Mean Euclidean joint distance over frames x joints, cm.
double mpjpe(const GlobalMotion& pred, const GlobalMotion& gt, std::span<const int> joints);
double mpjpe(const GlobalMotion& pred, const GlobalMotion& gt);
double mpjre(const LocalPose& pred, const LocalPose& gt);
double mpjve(const GlobalMotion& pred, const GlobalMotion& gt, double fps);
double jitter(const GlobalMotion& pred, double fps);
double ground(const GlobalMotion& pred, const GlobalMotion& gt);

struct SkateResult {
  double cm = 0;
  std::size_t contact_frames = 0;  // frames with at least one grounded foot
};
SkateResult skate(const GlobalMotion& pred, const ContactMask& contact);

// pred must already be head-aligned to gt.
MetricsReport evaluate_motions(const LocalPose& pred_pose, const GlobalMotion& pred,
                               const LocalPose& gt_pose, const GlobalMotion& gt, double fps,
                               const ContactThresholds& thr = {});

// FK on both, head alignment of pred onto the gt head, gt contact mask.
MetricsReport evaluate_pair(const MotionSequence& pred, const MotionSequence& gt, const SkeletonTemplate& tmpl,
                            double fps);

// Frame-weighted mean over sequences.
MetricsReport aggregate(std::span<const SequenceReport> sequences);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);
void save_report(const EvaluationReport& report, const std::filesystem::path& path);

}  // namespace metrics
}  // namespace jlm
