#include "jlm/skeleton.hpp"

#include <sstream>

#include "jlm/errors.hpp"

namespace jlm {

void SkeletonTemplate::validate() const {
  if (parents.empty()) throw TopologyError("skeleton has no joints");
  if (offsets.size() != parents.size()) {
    std::ostringstream os;
    os << "parents has " << parents.size() << " entries but offsets has " << offsets.size();
    throw TopologyError(os.str());
  }
  if (parents[0] != -1) throw TopologyError("parents[0] must be -1 (root)");
  for (std::size_t j = 1; j < parents.size(); ++j) {
    if (parents[j] < 0 || static_cast<std::size_t>(parents[j]) >= j) {
      std::ostringstream os;
      os << "joint " << j << " has parent " << parents[j]
         << "; parents must be topologically ordered";
      throw TopologyError(os.str());
    }
  }
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    if (!offsets[j].allFinite()) {
      throw TopologyError("offset of joint " + std::to_string(j) + " is not finite");
    }
  }
}

namespace skeleton {

GlobalMotion forward_kinematics(const LocalPose& pose, const SkeletonTemplate& tmpl,
                                std::span<const Vec3> root_translation) {
  tmpl.validate();
  const std::size_t nj = tmpl.joint_count();
  if (pose.joints != nj) {
    throw TopologyError("pose has " + std::to_string(pose.joints) + " joints, template has " +
                        std::to_string(nj));
  }
  const std::size_t t = pose.frames();
  if (root_translation.size() != t) {
    throw TopologyError("root translation length does not match frame count");
  }

  GlobalMotion out;
  out.joints = nj;
  out.positions.resize(t * nj);
  out.rotations.resize(t * nj);
  for (std::size_t f = 0; f < t; ++f) {
    const std::size_t base = f * nj;
    out.rotations[base] = pose.at(f, 0);
    out.positions[base] = root_translation[f];
    for (std::size_t j = 1; j < nj; ++j) {
      const auto p = base + static_cast<std::size_t>(tmpl.parents[j]);
      out.rotations[base + j] = out.rotations[p] * pose.at(f, j);
      out.positions[base + j] = out.positions[p] + out.rotations[p] * tmpl.offsets[j];
    }
  }
  return out;
}

GlobalMotion to_head_relative(const GlobalMotion& motion, int head_index) {
  GlobalMotion out = motion;
  const std::size_t nj = motion.joints;
  for (std::size_t f = 0; f < motion.frames(); ++f) {
    const Vec3 head = motion.pos(f, static_cast<std::size_t>(head_index));
    for (std::size_t j = 0; j < nj; ++j) out.pos(f, j) -= head;
    out.pos(f, static_cast<std::size_t>(head_index)).setZero();
  }
  return out;
}

std::vector<Vec3> head_align(std::span<const Vec3> local_positions, std::size_t joints,
                             std::span<const Vec3> observed_head, int head_index) {
  const std::size_t t = observed_head.size();
  if (local_positions.size() != t * joints) {
    throw ShapeMismatch("head_align: positions do not match observed head frames");
  }
  std::vector<Vec3> out(local_positions.begin(), local_positions.end());
  for (std::size_t f = 0; f < t; ++f) {
    const Vec3 shift = observed_head[f] - local_positions[f * joints + head_index];
    for (std::size_t j = 0; j < joints; ++j) out[f * joints + j] += shift;
    out[f * joints + head_index] = observed_head[f];
  }
  return out;
}

}  // namespace skeleton
}  // namespace jlm
