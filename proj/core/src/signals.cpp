#include <algorithm>
#include <cmath>

#include "jlm/dataio.hpp"
#include "jlm/errors.hpp"

namespace jlm::dataio {

TrackingSignals derive_tracking_signals(const GlobalMotion& motion, double fps) {
  TrackingSignals s;
  s.fps = fps;
  s.frames = motion.frames();
  s.values.assign(s.frames * TrackingSignals::kWidth, 0.0);
  const Rot6D identity;
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t d = 0; d < TrackingSignals::kDevices; ++d) {
      const auto j = static_cast<std::size_t>(joint::kTracked[d]);
      double* out = s.row(f) + d * TrackingSignals::kDeviceWidth;
      const Mat3& rot = motion.rot(f, j);
      const Vec3& pos = motion.pos(f, j);
      const Rot6D r6 = rotmath::matrix_to_sixd(rot);
      const Rot6D w6 = f == 0 ? identity
                              : rotmath::matrix_to_sixd(rotmath::rotation_delta(rot, motion.rot(f - 1, j)));
      const Vec3 vel = f == 0 ? Vec3::Zero() : Vec3(pos - motion.pos(f - 1, j));
      for (std::size_t k = 0; k < 6; ++k) {
        out[TrackingSignals::kRotation + k] = r6.v[k];
        out[TrackingSignals::kAngularVelocity + k] = w6.v[k];
      }
      for (int k = 0; k < 3; ++k) {
        out[TrackingSignals::kPosition + static_cast<std::size_t>(k)] = pos[k];
        out[TrackingSignals::kVelocity + static_cast<std::size_t>(k)] = vel[k];
      }
    }
  }
  return s;
}

TrackingSignals derive_tracking_signals(const MotionSequence& seq, const SkeletonTemplate& tmpl) {
  const auto roots = seq.root_translations();
  return derive_tracking_signals(skeleton::forward_kinematics(seq.local_pose(), tmpl, roots), seq.fps);
}

ContactMask derive_contact_mask(const GlobalMotion& motion, const ContactThresholds& thr) {
  ContactMask m;
  m.frames = motion.frames();
  m.values.assign(m.frames * ContactMask::kFeet, 0);
  for (std::size_t f = 1; f < m.frames; ++f) {
    for (std::size_t k = 0; k < ContactMask::kFeet; ++k) {
      const auto j = static_cast<std::size_t>(joint::kFeet[k]);
      const Vec3& p = motion.pos(f, j);
      const Vec3& q = motion.pos(f - 1, j);
      const double horiz = std::hypot(p.x() - q.x(), p.y() - q.y());
      m.values[f * ContactMask::kFeet + k] = (p.z() < thr.height && horiz < thr.displacement) ? 1 : 0;
    }
  }
  if (m.frames >= 2) {
    std::copy_n(m.values.begin() + ContactMask::kFeet, ContactMask::kFeet, m.values.begin());
  } else if (m.frames == 1) {
    for (std::size_t k = 0; k < ContactMask::kFeet; ++k) {
      m.values[k] = motion.pos(0, static_cast<std::size_t>(joint::kFeet[k])).z() < thr.height ? 1 : 0;
    }
  }
  return m;
}

ContactMask derive_contact_mask(const MotionSequence& seq, const SkeletonTemplate& tmpl,
                                const ContactThresholds& thr) {
  const auto roots = seq.root_translations();
  return derive_contact_mask(skeleton::forward_kinematics(seq.local_pose(), tmpl, roots), thr);
}

MotionSequence floor_calibrate(const MotionSequence& seq, const SkeletonTemplate& tmpl) {
  const auto roots = seq.root_translations();
  const GlobalMotion motion = skeleton::forward_kinematics(seq.local_pose(), tmpl, roots);
  std::vector<double> lowest(motion.frames());
  for (std::size_t f = 0; f < motion.frames(); ++f) {
    double z = motion.pos(f, 0).z();
    for (std::size_t j = 1; j < motion.joints; ++j) z = std::min(z, motion.pos(f, j).z());
    lowest[f] = z;
  }
  std::sort(lowest.begin(), lowest.end());
  // Linear interpolation between order statistics.
  const double rank = 0.05 * static_cast<double>(lowest.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, lowest.size() - 1);
  const double floor_z = lowest[lo] + (rank - static_cast<double>(lo)) * (lowest[hi] - lowest[lo]);

  MotionSequence out = seq;
  for (auto& f : out.frames) f.root_translation.z() -= floor_z;
  return out;
}

}  // namespace jlm::dataio
