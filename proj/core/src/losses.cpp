#include "jlm/losses.hpp"

#include <cmath>

#include "jlm/errors.hpp"
#include "jlm/kinematics.hpp"
#include "jlm/nn/ops.hpp"

namespace jlm {

using nn::Tensor;

void LossWeights::validate() const {
  for (double v : {alpha, beta, gamma, delta, epsilon, zeta}) {
    if (!std::isfinite(v) || v < 0.0) throw SchemaError("loss weights must be finite and non-negative");
  }
}

std::vector<std::pair<std::string, double>> LossReport::named() const {
  return {{"l_first", l_first}, {"l_ori", l_ori}, {"l_rot", l_rot}, {"l_pos", l_pos},
          {"l_hand", l_hand},   {"l_v1", l_v1},   {"l_v3", l_v3},   {"l_v5", l_v5},
          {"l_fc", l_fc},       {"l_p", l_p},     {"l_fh", l_fh},   {"total", total}};
}

bool LossReport::all_finite() const {
  for (const auto& [name, v] : named()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

LossReport LossTerms::report() const {
  auto v = [](const Tensor& t) { return t.defined() ? t.item() : 0.0; };
  LossReport r;
  r.l_first = v(l_first);
  r.l_ori = v(l_ori);
  r.l_rot = v(l_rot);
  r.l_pos = v(l_pos);
  r.l_hand = v(l_hand);
  r.l_v1 = v(l_v1);
  r.l_v3 = v(l_v3);
  r.l_v5 = v(l_v5);
  r.l_fc = v(l_fc);
  r.l_p = v(l_p);
  r.l_fh = v(l_fh);
  r.total = v(total);
  return r;
}

namespace losses {
namespace {

void require_positions(const Tensor& p, const char* what) {
  if (p.rank() != 4 || p.dim(2) != kNumJoints || p.dim(3) != 3) {
    throw ShapeMismatch(std::string(what) + ": expected (B, t, 22, 3), got " + nn::to_string(p.shape()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(what) + ": " + nn::to_string(a.shape()) + " vs " + nn::to_string(b.shape()));
  }
}

Tensor mean_abs_diff(const Tensor& a, const Tensor& b) { return nn::mean(nn::abs(nn::sub(a, b))); }

// (B, t, 22, 3) -> (B, t, 4, 3)
Tensor feet(const Tensor& p) {
  std::vector<std::size_t> idx;
  for (int j : joint::kFeet) idx.push_back(static_cast<std::size_t>(j));
  return nn::index_select(p, 2, idx);
}

// Contact weights broadcast over xyz for frames [0, frames).
Tensor contact_weights(const std::vector<std::uint8_t>& contact, std::size_t b, std::size_t t,
                       std::size_t frames) {
  if (contact.size() != b * t * ContactMask::kFeet) {
    throw ShapeMismatch("contact mask has " + std::to_string(contact.size()) + " entries, expected " +
                        std::to_string(b * t * ContactMask::kFeet));
  }
  std::vector<double> w(b * frames * ContactMask::kFeet * 3);
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t i = 0; i < frames; ++i) {
      for (std::size_t k = 0; k < ContactMask::kFeet; ++k) {
        const double m = contact[(s * t + i) * ContactMask::kFeet + k];
        for (std::size_t c = 0; c < 3; ++c) w[((s * frames + i) * ContactMask::kFeet + k) * 3 + c] = m;
      }
    }
  }
  return Tensor::constant({b, frames, ContactMask::kFeet, 3}, std::move(w));
}

double per_frame_scale(const Tensor& p) { return 1.0 / static_cast<double>(p.dim(0) * p.dim(1)); }

}  // namespace

Tensor local_positions(const Tensor& theta, const SkeletonTemplate& tmpl) {
  if (theta.rank() < 2 || theta.dim(theta.rank() - 1) != 6 || theta.dim(theta.rank() - 2) != kNumJoints) {
    throw ShapeMismatch("local_positions expects (..., 22, 6), got " + nn::to_string(theta.shape()));
  }
  nn::Shape out_shape = theta.shape();
  out_shape.back() = 3;
  const std::size_t n = theta.numel() / (kNumJoints * 6);
  const Tensor r = nn::sixd_to_matrix(nn::reshape(theta, {n, kNumJoints, 6}));
  return nn::reshape(kinematics::forward_kinematics(r, Tensor(), tmpl).positions, out_shape);
}

BasicLosses basic_losses(const Tensor& theta_init, const Tensor& theta, const Tensor& local_pos,
                         const Tensor& theta_gt, const Tensor& local_pos_gt, const SkeletonTemplate& tmpl) {
  require_same(theta_init, theta_gt, "basic_losses theta_init");
  require_same(theta, theta_gt, "basic_losses theta");
  require_same(local_pos, local_pos_gt, "basic_losses positions");
  if (theta.rank() != 4 || theta.dim(2) != kNumJoints || theta.dim(3) != 6) {
    throw ShapeMismatch("basic_losses expects (B, t, 22, 6), got " + nn::to_string(theta.shape()));
  }
  require_positions(local_pos, "basic_losses");

  BasicLosses out;
  out.l_ori = mean_abs_diff(nn::slice(theta, 2, 0, 1), nn::slice(theta_gt, 2, 0, 1));
  out.l_rot = mean_abs_diff(nn::slice(theta, 2, 1, kNumJoints), nn::slice(theta_gt, 2, 1, kNumJoints));
  out.l_pos = mean_abs_diff(local_pos, local_pos_gt);
  const Tensor init_rel = kinematics::to_head_relative(local_positions(theta_init, tmpl));
  const Tensor gt_rel = kinematics::to_head_relative(local_pos_gt);
  out.l_first = nn::add(mean_abs_diff(theta_init, theta_gt), mean_abs_diff(init_rel, gt_rel));
  return out;
}

Tensor hand_alignment_loss(const Tensor& pg, const Tensor& pg_gt) {
  require_positions(pg, "hand_alignment_loss");
  require_same(pg, pg_gt, "hand_alignment_loss");
  const std::vector<std::size_t> hands = {static_cast<std::size_t>(joint::kLeftWrist),
                                          static_cast<std::size_t>(joint::kRightWrist)};
  const Tensor d = nn::abs(nn::sub(nn::index_select(pg, 2, hands), nn::index_select(pg_gt, 2, hands)));
  return nn::scale(nn::sum(d), 0.5 * per_frame_scale(pg));
}

Tensor velocity_loss(const Tensor& pg, const Tensor& pg_gt, std::size_t lag) {
  require_positions(pg, "velocity_loss");
  require_same(pg, pg_gt, "velocity_loss");
  const std::size_t t = pg.dim(1);
  if (lag == 0 || t <= lag) {
    throw WindowTooShort("velocity loss with lag " + std::to_string(lag) + " needs more than " +
                         std::to_string(lag) + " frames, window has " + std::to_string(t));
  }
  const Tensor v = nn::sub(nn::slice(pg, 1, lag, t), nn::slice(pg, 1, 0, t - lag));
  const Tensor v_gt = nn::sub(nn::slice(pg_gt, 1, lag, t), nn::slice(pg_gt, 1, 0, t - lag));
  return mean_abs_diff(v, v_gt);
}

Tensor foot_contact_loss(const Tensor& pg, const std::vector<std::uint8_t>& contact) {
  require_positions(pg, "foot_contact_loss");
  const std::size_t b = pg.dim(0), t = pg.dim(1);
  if (t < 2) throw WindowTooShort("foot contact loss needs at least 2 frames");
  const Tensor f = feet(pg);
  const Tensor step = nn::sub(nn::slice(f, 1, 1, t), nn::slice(f, 1, 0, t - 1));
  return nn::mean(nn::abs(nn::mul(step, contact_weights(contact, b, t, t - 1))));
}

Tensor penetration_loss(const Tensor& pg) {
  require_positions(pg, "penetration_loss");
  const Tensor z = nn::slice(pg, 3, 2, 3);
  return nn::scale(nn::sum(nn::relu(nn::neg(z))), per_frame_scale(pg));
}

Tensor foot_height_loss(const Tensor& pg, const std::vector<std::uint8_t>& contact) {
  require_positions(pg, "foot_height_loss");
  const std::size_t b = pg.dim(0), t = pg.dim(1);
  const Tensor z = nn::slice(feet(pg), 3, 2, 3);
  const Tensor m = nn::slice(contact_weights(contact, b, t, t), 3, 2, 3);
  return nn::scale(nn::sum(nn::abs(nn::mul(z, m))), per_frame_scale(pg));
}

void total_loss(LossTerms& terms, const LossWeights& w) {
  w.validate();
  Tensor total = Tensor::scalar(0.0);
  auto acc = [&](const Tensor& term, double weight) {
    if (term.defined()) total = nn::add(total, nn::scale(term, weight));
  };
  acc(terms.l_first, 1.0);
  acc(terms.l_ori, w.beta);
  acc(terms.l_rot, w.gamma);
  acc(terms.l_pos, w.delta);
  acc(terms.l_hand, w.epsilon);
  acc(terms.l_v1, w.zeta);
  acc(terms.l_v3, w.zeta);
  acc(terms.l_v5, w.zeta);
  acc(terms.l_fc, w.zeta);
  acc(terms.l_p, 1.0);
  acc(terms.l_fh, w.alpha);
  terms.total = total;
}

WindowTargets make_targets(const std::vector<dataio::Window>& windows, const SkeletonTemplate& tmpl) {
  if (windows.empty()) throw DataError("make_targets of an empty batch");
  const std::size_t b = windows.size(), t = windows.front().signals.frames, j = kNumJoints;
  std::vector<double> theta, local, global, head;
  theta.reserve(b * t * j * 6);
  local.reserve(b * t * j * 3);
  global.reserve(b * t * j * 3);
  head.reserve(b * t * 3);
  WindowTargets out;
  out.contact.reserve(b * t * ContactMask::kFeet);
  const std::vector<Vec3> zero(t, Vec3::Zero());
  for (const auto& w : windows) {
    if (w.signals.frames != t || w.pose.frames() != t || w.motion.frames() != t || w.contact.frames != t) {
      throw ShapeMismatch("make_targets: windows of different length");
    }
    const GlobalMotion rel = skeleton::forward_kinematics(w.pose, tmpl, zero);
    for (std::size_t f = 0; f < t; ++f) {
      for (std::size_t k = 0; k < j; ++k) {
        const Rot6D r = rotmath::matrix_to_sixd(w.pose.at(f, k));
        theta.insert(theta.end(), r.v.begin(), r.v.end());
        for (int c = 0; c < 3; ++c) {
          local.push_back(rel.pos(f, k)[c]);
          global.push_back(w.motion.pos(f, k)[c]);
        }
      }
      const Vec3 h = w.signals.position(f, 0);
      head.insert(head.end(), {h.x(), h.y(), h.z()});
    }
    out.contact.insert(out.contact.end(), w.contact.values.begin(), w.contact.values.end());
  }
  out.theta = Tensor::constant({b, t, j, 6}, std::move(theta));
  out.local_positions = Tensor::constant({b, t, j, 3}, std::move(local));
  out.global_positions = Tensor::constant({b, t, j, 3}, std::move(global));
  out.observed_head = Tensor::constant({b, t, 3}, std::move(head));
  return out;
}

LossTerms compute(const ModelOutput& out, const WindowTargets& targets, const SkeletonTemplate& tmpl,
                  const LossWeights& w, const LossToggles& toggles) {
  const Tensor local = local_positions(out.theta, tmpl);
  const Tensor global = kinematics::head_align(local, targets.observed_head);
  const Tensor& gt = targets.global_positions;

  LossTerms terms;
  const BasicLosses basic =
      basic_losses(out.theta_init, out.theta, local, targets.theta, targets.local_positions, tmpl);
  terms.l_first = basic.l_first;
  terms.l_ori = basic.l_ori;
  terms.l_rot = basic.l_rot;
  terms.l_pos = basic.l_pos;
  if (toggles.hand) terms.l_hand = hand_alignment_loss(global, gt);
  if (toggles.vel_short) terms.l_v1 = velocity_loss(global, gt, 1);
  // Lags that do not fit in the window contribute nothing.
  const std::size_t t = global.dim(1);
  if (toggles.vel_long && t > 3) terms.l_v3 = velocity_loss(global, gt, 3);
  if (toggles.vel_long && t > 5) terms.l_v5 = velocity_loss(global, gt, 5);
  if (toggles.foot_contact) terms.l_fc = foot_contact_loss(global, targets.contact);
  if (toggles.penetration) terms.l_p = penetration_loss(global);
  if (toggles.foot_height) terms.l_fh = foot_height_loss(global, targets.contact);
  total_loss(terms, w);
  return terms;
}

}  // namespace losses
}  // namespace jlm
