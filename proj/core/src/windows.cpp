#include <algorithm>

#include "jlm/dataio.hpp"
#include "jlm/errors.hpp"

namespace jlm::dataio {

WindowSampler::WindowSampler(std::vector<MotionSequence> dataset, const SkeletonTemplate& tmpl,
                             std::size_t t, std::uint64_t seed, const ContactThresholds& thr)
    : t_(t), rng_(seed) {
  if (dataset.empty()) throw SequenceTooShort("window sampler needs at least one sequence");
  if (t == 0) throw SequenceTooShort("window length must be positive");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].size() < t) {
      throw SequenceTooShort("sequence " + std::to_string(i) + " has " + std::to_string(dataset[i].size()) +
                             " frames, window needs " + std::to_string(t));
    }
  }
  seqs_.reserve(dataset.size());
  for (auto& seq : dataset) {
    Prepared p;
    p.pose = seq.local_pose();
    p.motion = skeleton::forward_kinematics(p.pose, tmpl, seq.root_translations());
    p.signals = derive_tracking_signals(p.motion, seq.fps);
    p.contact = derive_contact_mask(p.motion, thr);
    p.seq = std::move(seq);
    total_ += p.seq.size() - t + 1;
    cumulative_.push_back(total_);
    seqs_.push_back(std::move(p));
  }
}

Window WindowSampler::window_at(std::size_t sequence, std::size_t start) const {
  const Prepared& p = seqs_.at(sequence);
  if (start + t_ > p.seq.size()) throw SequenceTooShort("window runs past the end of the sequence");
  const std::size_t nj = p.pose.joints;
  Window w;
  w.sequence = sequence;
  w.start = start;

  w.signals.fps = p.signals.fps;
  w.signals.frames = t_;
  w.signals.values.assign(p.signals.row(start), p.signals.row(start) + t_ * TrackingSignals::kWidth);

  w.pose.joints = nj;
  w.pose.rotations.assign(p.pose.rotations.begin() + static_cast<long>(start * nj),
                          p.pose.rotations.begin() + static_cast<long>((start + t_) * nj));

  w.motion.joints = nj;
  w.motion.positions.assign(p.motion.positions.begin() + static_cast<long>(start * nj),
                            p.motion.positions.begin() + static_cast<long>((start + t_) * nj));
  w.motion.rotations.assign(p.motion.rotations.begin() + static_cast<long>(start * nj),
                            p.motion.rotations.begin() + static_cast<long>((start + t_) * nj));

  w.contact.frames = t_;
  w.contact.values.assign(p.contact.values.begin() + static_cast<long>(start * ContactMask::kFeet),
                          p.contact.values.begin() + static_cast<long>((start + t_) * ContactMask::kFeet));
  return w;
}

std::vector<Window> WindowSampler::next_batch(std::size_t batch) {
  std::uniform_int_distribution<std::size_t> pick(0, total_ - 1);
  std::vector<Window> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t k = pick(rng_);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), k);
    const auto seq = static_cast<std::size_t>(it - cumulative_.begin());
    const std::size_t before = seq == 0 ? 0 : cumulative_[seq - 1];
    out.push_back(window_at(seq, k - before));
  }
  return out;
}

WindowSampler window_batches(std::vector<MotionSequence> dataset, const SkeletonTemplate& tmpl,
                             std::size_t t, std::uint64_t seed) {
  return WindowSampler(std::move(dataset), tmpl, t, seed);
}

}  // namespace jlm::dataio
