#include "jlm/model.hpp"

#include <algorithm>
#include <numeric>

#include "jlm/errors.hpp"
#include "jlm/kinematics.hpp"
#include "jlm/nn/attention.hpp"
#include "jlm/nn/ops.hpp"

namespace jlm {

using nn::Tensor;

void ModelConfig::validate() const {
  if (t < 2) throw ShapeMismatch("model window length t must be at least 2");
  if (n < 1) throw ShapeMismatch("model needs at least one STB/TTB loop");
  if (d1 == 0 || d2 == 0 || mlp_ratio == 0) throw ShapeMismatch("model widths must be positive");
  if (heads == 0 || d2 % heads != 0) {
    throw ShapeMismatch("token width d2=" + std::to_string(d2) + " not divisible by heads=" +
                        std::to_string(heads));
  }
  if (mask_count > tokens::kMaskable) throw ShapeMismatch("mask_count cannot exceed 38");
}

namespace {

void add_linear(nn::ParamStore& ps, const std::string& name, std::size_t out, std::size_t in,
                std::mt19937_64& rng) {
  ps.add_uniform(name + ".weight", {out, in}, in, rng);
  ps.add_uniform(name + ".bias", {out}, in, rng);
}

void add_norm(nn::ParamStore& ps, const std::string& name, std::size_t width) {
  ps.add_constant(name + ".gamma", {width}, 1.0);
  ps.add_constant(name + ".beta", {width}, 0.0);
}

void add_transformer_layer(nn::ParamStore& ps, const std::string& prefix, std::size_t d,
                           std::size_t ratio, std::mt19937_64& rng) {
  add_norm(ps, prefix + ".ln1", d);
  for (const char* w : {"wq", "wk", "wv", "wo"}) ps.add_uniform(prefix + ".attn." + w, {d, d}, d, rng);
  add_norm(ps, prefix + ".ln2", d);
  add_linear(ps, prefix + ".mlp.fc1", ratio * d, d, rng);
  add_linear(ps, prefix + ".mlp.fc2", d, ratio * d, rng);
}

// Shifts an output bias so an untrained regressor starts near identity.
void bias_toward_identity(Tensor& bias) {
  auto b = bias.mutable_data();
  for (std::size_t i = 0; i < b.size(); i += 6) {
    b[i] += 1.0;
    b[i + 4] += 1.0;
  }
}

}  // namespace

JLMModel::JLMModel(const ModelConfig& config, SkeletonTemplate skeleton, std::uint64_t seed)
    : config_(config), skeleton_(std::move(skeleton)), head_groups_(nn::default_group_count(config.d2)) {
  config_.validate();
  skeleton_.validate();
  if (skeleton_.joint_count() != kNumJoints) throw TopologyError("model needs a 22-joint skeleton");

  std::mt19937_64 rng(seed);
  const auto d1 = config_.d1, d2 = config_.d2;
  add_linear(params_, "stage1.embed.fc1", d1, TrackingSignals::kWidth, rng);
  add_linear(params_, "stage1.embed.fc2", d1, d1, rng);
  add_linear(params_, "stage1.reg.fc1", d1, d1, rng);
  add_linear(params_, "stage1.reg.fc2", tokens::kPoseWidth, d1, rng);
  bias_toward_identity(params_.at("stage1.reg.fc2.bias"));

  add_linear(params_, "tokens.rot_embed", d2, 9, rng);
  add_linear(params_, "tokens.pos_embed", d2, 3, rng);
  add_linear(params_, "tokens.eif", d2, d1, rng);
  params_.add_normal("tokens.mask", {d2}, 0.02, rng);
  params_.add_normal("pe.spatial", {tokens::kSpatialTokens, d2}, 0.02, rng);
  params_.add_normal("pe.temporal", {config_.t, d2}, 0.02, rng);

  for (std::size_t i = 0; i < config_.n; ++i) {
    add_transformer_layer(params_, "stb." + std::to_string(i), d2, config_.mlp_ratio, rng);
    add_transformer_layer(params_, "ttb." + std::to_string(i), d2, config_.mlp_ratio, rng);
  }

  add_linear(params_, "head.fc1", d2, 2 * d2, rng);
  add_norm(params_, "head.norm", d2);
  add_linear(params_, "head.fc2", 6, d2, rng);
  bias_toward_identity(params_.at("head.fc2.bias"));
}

Stage1Output JLMModel::stage1_forward(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(2) != TrackingSignals::kWidth) {
    throw ShapeMismatch("stage1 expects (B, t, 54), got " + nn::to_string(x.shape()));
  }
  const std::size_t b = x.dim(0), t = x.dim(1);
  Tensor h = nn::linear(x, p("stage1.embed.fc1.weight"), p("stage1.embed.fc1.bias"));
  h = nn::linear(nn::gelu(h), p("stage1.embed.fc2.weight"), p("stage1.embed.fc2.bias"));
  Tensor r = nn::linear(h, p("stage1.reg.fc1.weight"), p("stage1.reg.fc1.bias"));
  r = nn::linear(nn::gelu(r), p("stage1.reg.fc2.weight"), p("stage1.reg.fc2.bias"));
  return {h, nn::reshape(r, {b, t, kNumJoints, 6})};
}

JointTokens JLMModel::assemble_tokens(const Tensor& theta_init, const Tensor& x, const Tensor& h_embed) const {
  if (theta_init.rank() != 4 || theta_init.dim(2) != kNumJoints || theta_init.dim(3) != 6) {
    throw ShapeMismatch("assemble_tokens: theta_init " + nn::to_string(theta_init.shape()));
  }
  const std::size_t b = theta_init.dim(0), t = theta_init.dim(1), n = b * t;
  if (x.shape() != nn::Shape{b, t, TrackingSignals::kWidth}) {
    throw ShapeMismatch("assemble_tokens: signals " + nn::to_string(x.shape()));
  }

  // (a) FK of the initial pose; positions head-relative, rotations global.
  const Tensor local = nn::sixd_to_matrix(nn::reshape(theta_init, {n, kNumJoints, 6}));
  const auto fk = kinematics::forward_kinematics(local, Tensor(), skeleton_);
  const Tensor pos_rel = kinematics::to_head_relative(fk.positions);

  // (b) Observed head/hand rotations and head-relative positions.
  std::vector<double> obs_rot(n * kNumJoints * 9, 0.0), obs_pos(n * kNumJoints * 3, 0.0);
  std::vector<std::uint8_t> rot_mask(obs_rot.size(), 0), pos_mask(obs_pos.size(), 0);
  const auto xd = x.data();
  for (std::size_t f = 0; f < n; ++f) {
    const double* row = xd.data() + f * TrackingSignals::kWidth;
    const double* head = row + TrackingSignals::kPosition;
    for (std::size_t d = 0; d < TrackingSignals::kDevices; ++d) {
      const auto j = static_cast<std::size_t>(joint::kTracked[d]);
      const double* dev = row + d * TrackingSignals::kDeviceWidth;
      Rot6D r6;
      std::copy_n(dev + TrackingSignals::kRotation, 6, r6.v.begin());
      const Mat3 m = rotmath::sixd_to_matrix(r6);
      for (std::size_t k = 0; k < 9; ++k) {
        const std::size_t idx = (f * kNumJoints + j) * 9 + k;
        obs_rot[idx] = m(static_cast<long>(k / 3), static_cast<long>(k % 3));
        rot_mask[idx] = 1;
      }
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t idx = (f * kNumJoints + j) * 3 + k;
        obs_pos[idx] = d == 0 ? 0.0 : dev[TrackingSignals::kPosition + k] - head[k];
        pos_mask[idx] = 1;
      }
    }
  }
  const Tensor rot = nn::where(rot_mask, fk.global_rotations,
                               Tensor::constant({n, kNumJoints, 3, 3}, std::move(obs_rot)));
  const Tensor pos = nn::where(pos_mask, pos_rel, Tensor::constant({n, kNumJoints, 3}, std::move(obs_pos)));

  // (c, d) Embed and concatenate along the joint axis.
  const Tensor h_rot = nn::linear(nn::reshape(rot, {n, kNumJoints, 9}), p("tokens.rot_embed.weight"),
                                  p("tokens.rot_embed.bias"));
  const Tensor h_pos = nn::linear(pos, p("tokens.pos_embed.weight"), p("tokens.pos_embed.bias"));
  const Tensor h_init = nn::reshape(nn::concat({h_rot, h_pos}, 1), {b, t, tokens::kJointTokens, config_.d2});

  // (e) Embedded input features token.
  const Tensor eif = nn::linear(h_embed, p("tokens.eif.weight"), p("tokens.eif.bias"));
  return {h_init, eif};
}

TokenMask JLMModel::draw_token_mask(std::size_t batch, std::mt19937_64& rng) const {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < tokens::kJointTokens; ++i) {
    if (std::find(tokens::kProtected.begin(), tokens::kProtected.end(), i) == tokens::kProtected.end()) {
      pool.push_back(i);
    }
  }
  TokenMask mask;
  mask.per_sample.resize(batch);
  for (auto& sample : mask.per_sample) {
    // Partial Fisher-Yates: mask_count distinct indices.
    std::vector<std::size_t> p = pool;
    for (std::size_t k = 0; k < config_.mask_count; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, p.size() - 1);
      std::swap(p[k], p[pick(rng)]);
    }
    sample.assign(p.begin(), p.begin() + static_cast<long>(config_.mask_count));
  }
  return mask;
}

Tensor JLMModel::apply_token_mask(const Tensor& h_init, const TokenMask& mask) const {
  const std::size_t b = h_init.dim(0), t = h_init.dim(1), nt = h_init.dim(2), d = h_init.dim(3);
  if (mask.per_sample.size() != b) throw ShapeMismatch("token mask batch does not match tokens");
  std::vector<std::uint8_t> sel(h_init.numel(), 0);
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t tok : mask.per_sample[s]) {
      if (tok >= nt) throw ShapeMismatch("token mask index out of range");
      for (std::size_t f = 0; f < t; ++f) {
        const std::size_t base = ((s * t + f) * nt + tok) * d;
        std::fill_n(sel.begin() + static_cast<long>(base), d, 1);
      }
    }
  }
  return nn::where(sel, h_init, nn::broadcast_to(p("tokens.mask"), h_init.shape()));
}

Tensor JLMModel::transformer_layer(const Tensor& x, const std::string& prefix) const {
  const Tensor a = nn::layer_norm(x, p(prefix + ".ln1.gamma"), p(prefix + ".ln1.beta"));
  const Tensor y = nn::add(x, nn::multi_head_attention(a, p(prefix + ".attn.wq"), p(prefix + ".attn.wk"),
                                                       p(prefix + ".attn.wv"), p(prefix + ".attn.wo"),
                                                       config_.heads));
  Tensor m = nn::layer_norm(y, p(prefix + ".ln2.gamma"), p(prefix + ".ln2.beta"));
  m = nn::gelu(nn::linear(m, p(prefix + ".mlp.fc1.weight"), p(prefix + ".mlp.fc1.bias")));
  m = nn::linear(m, p(prefix + ".mlp.fc2.weight"), p(prefix + ".mlp.fc2.bias"));
  return nn::add(y, m);
}

Tensor JLMModel::stb_forward(const Tensor& h, const Tensor& f, std::size_t block) const {
  if (h.rank() != 3 || h.dim(1) != tokens::kJointTokens || h.dim(2) != config_.d2 ||
      f.shape() != nn::Shape{h.dim(0), config_.d2}) {
    throw ShapeMismatch("stb_forward: tokens " + nn::to_string(h.shape()) + ", eif " + nn::to_string(f.shape()));
  }
  const std::size_t g = h.dim(0);
  Tensor s = nn::concat({h, nn::reshape(f, {g, 1, config_.d2})}, 1);
  s = nn::add(s, p("pe.spatial"));
  s = transformer_layer(s, "stb." + std::to_string(block));
  return nn::slice(s, 1, 0, tokens::kJointTokens);
}

Tensor JLMModel::ttb_forward(const Tensor& h, std::size_t block) const {
  if (h.rank() != 3 || h.dim(1) != config_.t || h.dim(2) != config_.d2) {
    throw ShapeMismatch("ttb_forward: " + nn::to_string(h.shape()));
  }
  return transformer_layer(nn::add(h, p("pe.temporal")), "ttb." + std::to_string(block));
}

Tensor JLMModel::stacked_forward(const Tensor& h_init, const Tensor& eif) const {
  const std::size_t b = h_init.dim(0), t = h_init.dim(1), nt = tokens::kJointTokens, d = config_.d2;
  if (h_init.shape() != nn::Shape{b, t, nt, d} || eif.shape() != nn::Shape{b, t, d}) {
    throw ShapeMismatch("stacked_forward: tokens " + nn::to_string(h_init.shape()) + ", eif " +
                        nn::to_string(eif.shape()));
  }
  const Tensor f = nn::reshape(eif, {b * t, d});
  Tensor h = h_init;
  for (std::size_t i = 0; i < config_.n; ++i) {
    h = nn::reshape(stb_forward(nn::reshape(h, {b * t, nt, d}), f, i), {b, t, nt, d});
    Tensor slices = nn::reshape(nn::permute(h, {0, 2, 1, 3}), {b * nt, t, d});
    slices = ttb_forward(slices, i);
    h = nn::permute(nn::reshape(slices, {b, nt, t, d}), {0, 2, 1, 3});
  }
  return h;
}

Tensor JLMModel::regress_smpl(const Tensor& h_st) const {
  if (h_st.rank() != 4 || h_st.dim(2) != tokens::kJointTokens || h_st.dim(3) != config_.d2) {
    throw ShapeMismatch("regress_smpl: " + nn::to_string(h_st.shape()));
  }
  const Tensor rot = nn::slice(h_st, 2, 0, kNumJoints);
  const Tensor pos = nn::slice(h_st, 2, kNumJoints, tokens::kJointTokens);
  Tensor y = nn::linear(nn::concat({rot, pos}, 3), p("head.fc1.weight"), p("head.fc1.bias"));
  y = nn::gelu(nn::group_norm(y, head_groups_, p("head.norm.gamma"), p("head.norm.beta")));
  return nn::linear(y, p("head.fc2.weight"), p("head.fc2.bias"));
}

ModelOutput JLMModel::full_forward(const Tensor& x, const TokenMask* mask) const {
  if (x.rank() != 3 || x.dim(1) != config_.t) {
    throw ShapeMismatch("full_forward expects (B, " + std::to_string(config_.t) + ", 54), got " +
                        nn::to_string(x.shape()));
  }
  const Stage1Output s1 = stage1_forward(x);
  JointTokens tok = assemble_tokens(s1.theta_init, x, s1.h_embed);
  if (mask) tok.h_init = apply_token_mask(tok.h_init, *mask);
  const Tensor h_st = stacked_forward(tok.h_init, tok.eif);
  return {s1.h_embed, s1.theta_init, regress_smpl(h_st)};
}

Tensor signals_tensor(const std::vector<const TrackingSignals*>& batch) {
  if (batch.empty()) throw ShapeMismatch("signals_tensor of an empty batch");
  const std::size_t t = batch.front()->frames;
  std::vector<double> v;
  v.reserve(batch.size() * t * TrackingSignals::kWidth);
  for (const auto* s : batch) {
    if (s->frames != t) throw ShapeMismatch("signals_tensor: windows of different length");
    v.insert(v.end(), s->values.begin(), s->values.end());
  }
  return Tensor::constant({batch.size(), t, TrackingSignals::kWidth}, std::move(v));
}

}  // namespace jlm
