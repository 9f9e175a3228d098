#include "jlm/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "jlm/errors.hpp"

namespace jlm {

std::vector<std::pair<std::string, double>> MetricsReport::named() const {
  return {{"MPJRE", mpjre}, {"MPJPE", mpjpe}, {"MPJVE", mpjve}, {"Jitter", jitter}, {"Ground", ground},
          {"Skate", skate}, {"H-PE", h_pe},   {"U-PE", u_pe},   {"L-PE", l_pe}};
}

namespace metrics {
namespace {

constexpr double kCm = 100.0;

void require_same_length(const GlobalMotion& a, const GlobalMotion& b, const char* what) {
  if (a.frames() != b.frames() || a.joints != b.joints) {
    throw LengthMismatch(std::string(what) + ": prediction has " + std::to_string(a.frames()) +
                         " frames, ground truth " + std::to_string(b.frames()));
  }
}

double lowest_z(const GlobalMotion& m, std::size_t f) {
  double z = m.pos(f, 0).z();
  for (std::size_t j = 1; j < m.joints; ++j) z = std::min(z, m.pos(f, j).z());
  return z;
}

}  // namespace

double mpjpe(const GlobalMotion& pred, const GlobalMotion& gt, std::span<const int> joints) {
  require_same_length(pred, gt, "mpjpe");
  if (pred.frames() == 0 || joints.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t f = 0; f < pred.frames(); ++f) {
    for (int j : joints) {
      const auto k = static_cast<std::size_t>(j);
      acc += (pred.pos(f, k) - gt.pos(f, k)).norm();
    }
  }
  return kCm * acc / static_cast<double>(pred.frames() * joints.size());
}

double mpjpe(const GlobalMotion& pred, const GlobalMotion& gt) {
  std::vector<int> all(pred.joints);
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
  return mpjpe(pred, gt, all);
}

double mpjre(const LocalPose& pred, const LocalPose& gt) {
  if (pred.frames() != gt.frames() || pred.joints != gt.joints) {
    throw LengthMismatch("mpjre: prediction has " + std::to_string(pred.frames()) + " frames, ground truth " +
                         std::to_string(gt.frames()));
  }
  if (pred.rotations.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.rotations.size(); ++i) {
    acc += rotmath::geodesic_angle_deg(pred.rotations[i], gt.rotations[i]);
  }
  return acc / static_cast<double>(pred.rotations.size());
}

double mpjve(const GlobalMotion& pred, const GlobalMotion& gt, double fps) {
  require_same_length(pred, gt, "mpjve");
  const std::size_t t = pred.frames();
  if (t < 2) throw WindowTooShort("mpjve needs at least 2 frames");
  double acc = 0.0;
  for (std::size_t f = 1; f < t; ++f) {
    for (std::size_t j = 0; j < pred.joints; ++j) {
      const Vec3 vp = pred.pos(f, j) - pred.pos(f - 1, j);
      const Vec3 vg = gt.pos(f, j) - gt.pos(f - 1, j);
      acc += (vp - vg).norm();
    }
  }
  return kCm * fps * acc / static_cast<double>((t - 1) * pred.joints);
}

double jitter(const GlobalMotion& pred, double fps) {
  const std::size_t t = pred.frames();
  if (t < 4) throw WindowTooShort("jitter needs at least 4 frames");
  double acc = 0.0;
  for (std::size_t f = 0; f + 3 < t; ++f) {
    for (std::size_t j = 0; j < pred.joints; ++j) {
      // Nested differences: exact zero for still joints.
      const Vec3 v0 = pred.pos(f + 1, j) - pred.pos(f, j);
      const Vec3 v1 = pred.pos(f + 2, j) - pred.pos(f + 1, j);
      const Vec3 v2 = pred.pos(f + 3, j) - pred.pos(f + 2, j);
      acc += ((v2 - v1) - (v1 - v0)).norm();
    }
  }
  return acc * fps * fps * fps / static_cast<double>((t - 3) * pred.joints) / 100.0;
}

double ground(const GlobalMotion& pred, const GlobalMotion& gt) {
  require_same_length(pred, gt, "ground");
  if (pred.frames() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t f = 0; f < pred.frames(); ++f) acc += std::abs(lowest_z(pred, f) - lowest_z(gt, f));
  return kCm * acc / static_cast<double>(pred.frames());
}

SkateResult skate(const GlobalMotion& pred, const ContactMask& contact) {
  if (contact.frames != pred.frames()) {
    throw LengthMismatch("skate: contact mask has " + std::to_string(contact.frames) + " frames, motion " +
                         std::to_string(pred.frames()));
  }
  SkateResult r;
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t f = 1; f < pred.frames(); ++f) {
    bool any = false;
    for (std::size_t k = 0; k < ContactMask::kFeet; ++k) {
      if (!contact.at(f, k)) continue;
      any = true;
      const auto j = static_cast<std::size_t>(joint::kFeet[k]);
      const Vec3 d = pred.pos(f, j) - pred.pos(f - 1, j);
      acc += std::hypot(d.x(), d.y());
      ++n;
    }
    if (any) ++r.contact_frames;
  }
  r.cm = n ? kCm * acc / static_cast<double>(n) : 0.0;
  return r;
}

MetricsReport evaluate_motions(const LocalPose& pred_pose, const GlobalMotion& pred, const LocalPose& gt_pose,
                               const GlobalMotion& gt, double fps, const ContactThresholds& thr) {
  require_same_length(pred, gt, "evaluate");
  MetricsReport r;
  r.frames = gt.frames();
  r.mpjre = mpjre(pred_pose, gt_pose);
  r.mpjpe = mpjpe(pred, gt);
  r.h_pe = mpjpe(pred, gt, joint::kHands);
  r.u_pe = mpjpe(pred, gt, joint::kUpperBody);
  r.l_pe = mpjpe(pred, gt, joint::kLowerBody);
  r.mpjve = mpjve(pred, gt, fps);
  r.jitter = jitter(pred, fps);
  r.ground = ground(pred, gt);
  const SkateResult s = skate(pred, dataio::derive_contact_mask(gt, thr));
  r.skate = s.cm;
  r.contact_frames = s.contact_frames;
  return r;
}

MetricsReport evaluate_pair(const MotionSequence& pred, const MotionSequence& gt, const SkeletonTemplate& tmpl,
                            double fps) {
  if (pred.size() != gt.size()) {
    throw LengthMismatch("prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                         std::to_string(gt.size()));
  }
  if (pred.fps != gt.fps) throw LengthMismatch("prediction and ground truth frame rates differ");
  const LocalPose pred_pose = pred.local_pose(), gt_pose = gt.local_pose();
  const GlobalMotion gt_motion = skeleton::forward_kinematics(gt_pose, tmpl, gt.root_translations());
  GlobalMotion pred_motion = skeleton::forward_kinematics(pred_pose, tmpl, pred.root_translations());

  std::vector<Vec3> gt_head(gt.size());
  for (std::size_t f = 0; f < gt.size(); ++f) gt_head[f] = gt_motion.pos(f, joint::kHead);
  pred_motion.positions = skeleton::head_align(pred_motion.positions, pred_motion.joints, gt_head);
  return evaluate_motions(pred_pose, pred_motion, gt_pose, gt_motion, fps);
}

MetricsReport aggregate(std::span<const SequenceReport> sequences) {
  MetricsReport out;
  for (const auto& s : sequences) {
    out.frames += s.metrics.frames;
    out.contact_frames += s.metrics.contact_frames;
  }
  if (out.frames == 0) return out;
  for (const auto& s : sequences) {
    const double w = static_cast<double>(s.metrics.frames) / static_cast<double>(out.frames);
    const MetricsReport& m = s.metrics;
    out.mpjre += w * m.mpjre;
    out.mpjpe += w * m.mpjpe;
    out.mpjve += w * m.mpjve;
    out.jitter += w * m.jitter;
    out.ground += w * m.ground;
    out.skate += w * m.skate;
    out.h_pe += w * m.h_pe;
    out.u_pe += w * m.u_pe;
    out.l_pe += w * m.l_pe;
  }
  return out;
}

}  // namespace metrics
}  // namespace jlm
