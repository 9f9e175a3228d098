// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "jlm/checkpoint.hpp"
#include "jlm/errors.hpp"
#include "jlm/infer.hpp"
#include "jlm/losses.hpp"
#include "jlm/nn/ops.hpp"
#include "jlm/metrics.hpp"
#include "jlm/train.hpp"
#include "metric_cases.hpp"
#include "support.hpp"

using namespace jlm;
using namespace testing_support;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      detail << " | failed: " << what;
      pass = false;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. Rotation suite.
void rotations(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n(0.0, 1.0);
  double ortho = 0, det = 0, trip = 0, jac_rel = 0;
  const double h = 1e-5;
  for (int i = 0; i < 10000; ++i) {
    Rot6D r;
    for (auto& v : r.v) v = n(rng);
    const Mat3 m = rotmath::sixd_to_matrix(r);
    ortho = std::max(ortho, (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff());
    det = std::max(det, std::abs(m.determinant() - 1.0));

    // matrix -> 6D -> matrix, and 6D of a rotation -> matrix -> 6D.
    const Rot6D back = rotmath::matrix_to_sixd(m);
    trip = std::max(trip, max_abs_diff(rotmath::sixd_to_matrix(back), m));
    const Rot6D again = rotmath::matrix_to_sixd(rotmath::sixd_to_matrix(back));
    for (int k = 0; k < 6; ++k) trip = std::max(trip, std::abs(again.v[k] - back.v[k]));
    const Mat3 q = random_rotation(rng);
    trip = std::max(trip, max_abs_diff(rotmath::axis_angle_to_matrix(rotmath::matrix_to_axis_angle(q)), q));

    const SixdJacobian jac = rotmath::sixd_to_matrix_jacobian(r);
    SixdJacobian num;
    for (int k = 0; k < 6; ++k) {
      Rot6D rp = r, rm = r;
      rp.v[k] += h;
      rm.v[k] -= h;
      const Mat3 d = (rotmath::sixd_to_matrix(rp) - rotmath::sixd_to_matrix(rm)) / (2 * h);
      for (int e = 0; e < 9; ++e) num(e, k) = d(e / 3, e % 3);
    }
    jac_rel = std::max(jac_rel, (jac - num).cwiseAbs().maxCoeff() / std::max(num.cwiseAbs().maxCoeff(), 1e-12));
  }
  const double secs = seconds_since(t0);
  o.detail << "orthonormality " << ortho << ", |det-1| " << det << ", round trip " << trip << ", Jacobian rel "
           << jac_rel << ", " << secs << " s";
  o.require(ortho < 1e-6 && det < 1e-6, "orthonormality");
  o.require(trip < 1e-6, "round trip");
  o.require(jac_rel < 1e-5, "Jacobian");
  o.require(secs < 10.0, "runtime");
}

// 2. FK against the per-joint chain oracle.
void fk_oracle(Outcome& o) {
  const auto tmpl = humanoid();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double pos = 0, rot = 0, bones = 0;
  for (int trial = 0; trial < 100; ++trial) {
    LocalPose pose;
    pose.joints = kNumJoints;
    std::vector<Mat3> local;
    for (std::size_t j = 0; j < kNumJoints; ++j) local.push_back(random_rotation(rng));
    pose.rotations = local;
    const Vec3 root(u(rng), u(rng), u(rng));
    const std::vector<Vec3> roots{root};
    const GlobalMotion g = skeleton::forward_kinematics(pose, tmpl, roots);
    const NaiveFk ref = naive_fk(local, tmpl, root);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      pos = std::max(pos, (g.pos(0, j) - ref.positions[j]).norm());
      rot = std::max(rot, max_abs_diff(g.rot(0, j), ref.rotations[j]));
      if (j > 0) {
        const double len = (g.pos(0, j) - g.pos(0, tmpl.parents[j])).norm();
        bones = std::max(bones, std::abs(len - tmpl.offsets[j].norm()));
      }
    }
  }
  o.detail << "position " << pos << ", rotation " << rot << ", bone length " << bones;
  o.require(pos < 1e-6 && rot < 1e-6, "oracle agreement");
  o.require(bones < 1e-6, "bone lengths");
}

// 3. Full-model gradient check.
void gradcheck(Outcome& o) {
  const auto t0 = Clock::now();
  const auto r = model_grad_check(ModelConfig::tiny(), humanoid(), 0);
  const double secs = seconds_since(t0);
  o.detail << "max relative error " << r.max_rel_error << " at " << r.worst_parameter << "[" << r.worst_index << "], "
           << r.checked << " entries, " << secs << " s";
  o.require(r.passed && r.max_rel_error < 1e-4, "tolerance");
  o.require(secs < 120.0, "runtime");
}

// 4. Shape and mask invariants.
void shapes(Outcome& o) {
  const auto tmpl = humanoid();
  for (const ModelConfig& cfg : {ModelConfig::tiny(), ModelConfig::desk()}) {
    const JLMModel m(cfg, tmpl, 4);
    const std::size_t B = 2, t = cfg.t, d2 = cfg.d2;
    o.require(m.params().at("pe.spatial").shape() == nn::Shape{tokens::kSpatialTokens, d2}, "45 spatial tokens");
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 0.5);
    std::vector<double> xs(B * t * TrackingSignals::kWidth);
    for (auto& v : xs) v = n(rng);
    const nn::Tensor x = nn::Tensor::constant({B, t, TrackingSignals::kWidth}, xs);
    const auto s1 = m.stage1_forward(x);
    const auto tok = m.assemble_tokens(s1.theta_init, x, s1.h_embed);
    o.require(tok.h_init.shape() == nn::Shape{B, t, 44, d2}, "44 joint tokens");
    const nn::Tensor h = nn::reshape(tok.h_init, {B * t, 44, d2});
    const nn::Tensor f = nn::reshape(tok.eif, {B * t, d2});
    o.require(m.stb_forward(h, f, 0).shape() == nn::Shape{B * t, 44, d2}, "44 STB outputs");
    const ModelOutput out = m.full_forward(x);
    o.require(out.theta.shape() == nn::Shape{B, t, 22, 6}, "output shape");
    o.require(out.theta.numel() / (B * t) == tokens::kPoseWidth && tokens::kPoseWidth == 132, "output width 132");
  }

  const JLMModel m(ModelConfig::tiny(), tmpl, 6);
  std::mt19937_64 rng(7);
  const std::set<std::size_t> protect(tokens::kProtected.begin(), tokens::kProtected.end());
  o.require(protect == std::set<std::size_t>{15, 20, 21, 37, 42, 43}, "protected set");
  std::size_t touched = 0, wrong_count = 0;
  std::set<std::size_t> seen;
  for (int draw = 0; draw < 100000; ++draw) {
    const TokenMask mk = m.draw_token_mask(1, rng);
    const auto& s = mk.per_sample[0];
    if (s.size() != 2 || s[0] == s[1]) ++wrong_count;
    for (std::size_t i : s) {
      touched += protect.count(i) + (i >= 44);
      seen.insert(i);
    }
  }
  o.detail << "tokens 45/44, output width 132, 1e5 mask draws: " << touched << " protected hits, " << seen.size()
           << " distinct indices";
  o.require(touched == 0, "mask touched a protected token");
  o.require(wrong_count == 0, "mask size");
  o.require(seen.size() == tokens::kMaskable, "all maskable indices reachable");
}

// A standing body: flat feet on the floor, only the upper body moves.
MotionSequence planted_sequence(std::size_t frames) {
  const double tilt = std::atan2(0.03, 0.1);
  MotionSequence seq;
  seq.fps = 60.0;
  for (std::size_t f = 0; f < frames; ++f) {
    const double s = std::sin(0.15 * static_cast<double>(f));
    MotionFrame fr;
    fr.root_translation = Vec3(0.2, -0.1, 0.92);
    fr.local_rotations[7].r = Vec3(tilt, 0, 0);
    fr.local_rotations[8].r = Vec3(tilt, 0, 0);
    fr.local_rotations[3].r = Vec3(0.1 * s, 0.05 * s, 0);
    fr.local_rotations[12].r = Vec3(0, 0.2 * s, 0.1);
    fr.local_rotations[16].r = Vec3(0, 0, -0.6 + 0.3 * s);
    fr.local_rotations[17].r = Vec3(0.2 * s, 0, 0.6);
    fr.local_rotations[18].r = Vec3(0, 0.5 * s, 0);
    fr.local_rotations[21].r = Vec3(0.4 * s, 0, 0);
    seq.frames.push_back(fr);
  }
  return seq;
}

// 5. Loss zero-identities.
void loss_identities(Outcome& o) {
  const auto tmpl = humanoid();
  const std::size_t t = 11;

  // Prediction equal to a physically consistent ground truth.
  double worst_same = 0;
  std::size_t contact_frames = 0;
  {
    std::vector<MotionSequence> data{planted_sequence(40)};
    dataio::WindowSampler sampler(data, tmpl, t, 1);
    std::vector<dataio::Window> windows;
    for (std::size_t start : {0u, 7u, 29u}) windows.push_back(sampler.window_at(0, start));
    for (const auto& w : windows) {
      contact_frames += static_cast<std::size_t>(std::count(w.contact.values.begin(), w.contact.values.end(), 1));
    }
    const WindowTargets tg = losses::make_targets(windows, tmpl);
    const LossReport r = losses::compute({nn::Tensor(), tg.theta, tg.theta}, tg, tmpl).report();
    for (const auto& [name, v] : r.named()) worst_same = std::max(worst_same, std::abs(v));
  }
  o.require(contact_frames > 0, "ground truth has contact");

  // Constant offsets leave every velocity term at zero; lifted motion never penetrates.
  double worst_vel = 0, worst_pen = 0;
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const MotionSequence seq = random_sequence(t, rng, 0.8);
    const GlobalMotion g = skeleton::forward_kinematics(seq.local_pose(), tmpl, seq.root_translations());
    const Vec3 shift(u(rng), u(rng), u(rng));
    std::vector<double> gt, moved;
    double lowest = 1e9;
    for (const Vec3& p : g.positions) {
      gt.insert(gt.end(), {p.x(), p.y(), p.z()});
      moved.insert(moved.end(), {p.x() + shift.x(), p.y() + shift.y(), p.z() + shift.z()});
      lowest = std::min(lowest, p.z());
    }
    const nn::Tensor a = nn::Tensor::constant({1, t, 22, 3}, gt), b = nn::Tensor::constant({1, t, 22, 3}, moved);
    for (std::size_t lag : {1u, 3u, 5u}) worst_vel = std::max(worst_vel, losses::velocity_loss(b, a, lag).item());
    std::vector<double> above = gt;
    for (std::size_t i = 2; i < above.size(); i += 3) above[i] += 0.01 - lowest;
    worst_pen = std::max(worst_pen, losses::penetration_loss(nn::Tensor::constant({1, t, 22, 3}, above)).item());
  }
  o.detail << "prediction = truth: max term " << worst_same << " (" << contact_frames
           << " foot-contact flags); offset L_v max " << worst_vel << "; above-ground L_p max " << worst_pen;
  o.require(worst_same < 1e-9, "prediction = truth");
  o.require(worst_vel < 1e-9, "offset velocity");
  o.require(worst_pen < 1e-9, "penetration");
}

// 6. Metric oracles and the subset identity.
void metric_oracles(Outcome& o) {
  double worst = 0;
  std::set<std::string> covered;
  for (const auto& c : metric_cases()) {
    worst = std::max(worst, std::abs(c.value - c.expected));
    covered.insert(c.metric);
  }
  const auto tmpl = humanoid();
  std::mt19937_64 rng(66);
  double identity = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const MotionSequence a = random_sequence(10, rng), b = random_sequence(10, rng);
    const GlobalMotion ga = skeleton::forward_kinematics(a.local_pose(), tmpl, a.root_translations());
    const GlobalMotion gb = skeleton::forward_kinematics(b.local_pose(), tmpl, b.root_translations());
    identity = std::max(identity, subset_identity_error(ga, gb));
    const MetricsReport r = metrics::evaluate_pair(a, b, tmpl, a.fps);
    identity = std::max(identity, std::abs(r.mpjpe - (13 * r.u_pe + 9 * r.l_pe) / 22));
  }
  o.detail << metric_cases().size() << " constructed cases over " << covered.size() << " metrics, max error " << worst
           << "; subset identity max " << identity;
  o.require(covered.size() == 9, "all nine metrics covered");
  o.require(worst < 1e-9, "constructed cases");
  o.require(identity < 1e-9, "subset identity");
}

std::vector<MotionSequence> overfit_dataset(const SkeletonTemplate& tmpl) {
  std::vector<MotionSequence> data;
  std::uint64_t seed = 0;
  for (SynthKind k : {SynthKind::kWalkCycle, SynthKind::kIdleSway, SynthKind::kArmWave, SynthKind::kSquat}) {
    data.push_back(dataio::synth_generate(k, 10.0, 60.0, seed++, tmpl));
  }
  return data;
}

MetricsReport evaluate_model(const JLMModel& model, const std::vector<MotionSequence>& data) {
  std::vector<SequenceReport> seqs;
  for (const auto& gt : data) {
    const TrackingSignals sig = dataio::derive_tracking_signals(gt, model.skeleton());
    const MotionSequence pred = to_motion(infer_windows(model, sig), gt.fps);
    seqs.push_back({"", metrics::evaluate_pair(pred, gt, model.skeleton(), gt.fps)});
  }
  return metrics::aggregate(seqs);
}

// 7. Overfit sanity.
void overfit(Outcome& o) {
  const auto tmpl = humanoid();
  const auto data = overfit_dataset(tmpl);
  TrainConfig cfg;
  cfg.model = ModelConfig::tiny();
  cfg.batch = 64;
  cfg.iterations = 5000;
  cfg.lr_start = 1e-3;
  cfg.lr_end = 1e-4;
  cfg.lr_drop_fraction = 0.6;
  cfg.seed = 0;

  const auto t0 = Clock::now();
  Trainer trainer(cfg, data, tmpl);
  std::vector<double> losses;
  bool finite = true;
  TrainOutputs outs;
  outs.on_step = [&](const StepRecord& r) {
    losses.push_back(r.loss.total);
    finite = finite && r.loss.all_finite() && trainer.model().params().all_finite();
    if (r.step % 500 == 0) {
      std::cout << "  overfit step " << r.step << " loss " << r.loss.total << " (" << seconds_since(t0) << " s)\n"
                << std::flush;
    }
  };
  try {
    train(trainer, outs);
  } catch (const NonFiniteLoss&) {
    finite = false;
  }
  const double secs = seconds_since(t0);
  const MetricsReport m = evaluate_model(trainer.model(), data);

  const std::size_t k = std::min<std::size_t>(100, losses.size());
  const double first = median({losses.begin(), losses.begin() + static_cast<long>(k)});
  const double last = median({losses.end() - static_cast<long>(k), losses.end()});
  o.detail << losses.size() << " iterations in " << secs << " s, MPJPE " << m.mpjpe << " cm, MPJRE " << m.mpjre
           << " deg, loss median first/last 100 " << first << " / " << last;
  o.require(finite, "non-finite loss or parameter");
  o.require(losses.size() <= 5000, "iteration budget");
  o.require(m.mpjpe < 2.0, "MPJPE < 2 cm");
  o.require(m.mpjre < 5.0, "MPJRE < 5 deg");
  o.require(last < 0.5 * first, "loss trend");
}

// 8. Streaming equivalence, causality, head position.
void streaming(Outcome& o) {
  const auto tmpl = humanoid();
  double worst = 0, head = 0;
  bool causal = true;
  for (const ModelConfig& cfg : {ModelConfig::tiny(), ModelConfig::desk()}) {
    const JLMModel model(cfg, tmpl, 8);
    const auto seq = dataio::synth_generate(SynthKind::kArmWave, 1.5, 30.0, 9, tmpl);
    const TrackingSignals sig = dataio::derive_tracking_signals(seq, tmpl);
    for (std::size_t history : {std::size_t{0}, cfg.t / 2}) {
      const auto batch = infer_windows(model, sig, history, 16);
      InferenceStream stream(model, history);
      std::vector<FramePrediction> prefix;
      for (std::size_t f = 0; f < sig.frames; ++f) {
        const auto p = stream.push(std::span<const double>(sig.row(f), TrackingSignals::kWidth));
        for (std::size_t j = 0; j < kNumJoints; ++j) {
          worst = std::max(worst, (p.positions[j] - batch[f].positions[j]).cwiseAbs().maxCoeff());
          worst = std::max(worst, max_abs_diff(p.local_rotations[j], batch[f].local_rotations[j]));
        }
        head = std::max(head, (p.positions[joint::kHead] - sig.position(f, 0)).norm());
        if (f < 12) prefix.push_back(p);
      }
      // Re-stream only the first 12 frames: identical results.
      InferenceStream again(model, history);
      for (std::size_t f = 0; f < prefix.size(); ++f) {
        const auto p = again.push(std::span<const double>(sig.row(f), TrackingSignals::kWidth));
        for (std::size_t j = 0; j < kNumJoints; ++j) causal = causal && p.positions[j] == prefix[f].positions[j];
      }
    }
  }
  o.detail << "stream vs windows max " << worst << ", head offset max " << head << ", prefix "
           << (causal ? "unchanged" : "changed") << " by future frames";
  o.require(worst < 1e-6, "stream equivalence");
  o.require(causal, "causality");
  o.require(head < 1e-9, "head position");
}

// 9. Ablation toggles.
void toggles(Outcome& o) {
  const auto tmpl = humanoid();
  const auto seq = dataio::synth_generate(SynthKind::kWalkCycle, 1.0, 60.0, 2, tmpl);
  dataio::WindowSampler sampler({seq}, tmpl, 11, 3);
  const auto windows = sampler.next_batch(3);
  const WindowTargets tg = losses::make_targets(windows, tmpl);
  const JLMModel model(ModelConfig::desk(), tmpl, 3);
  std::vector<const TrackingSignals*> sig;
  for (const auto& w : windows) sig.push_back(&w.signals);
  const ModelOutput out = model.full_forward(signals_tensor(sig));
  const LossReport all = losses::compute(out, tg, tmpl).report();

  struct Group {
    const char* name;
    bool LossToggles::*flag;
    std::vector<double LossReport::*> terms;
  };
  const std::vector<Group> groups = {
      {"hand", &LossToggles::hand, {&LossReport::l_hand}},
      {"vel_short", &LossToggles::vel_short, {&LossReport::l_v1}},
      {"vel_long", &LossToggles::vel_long, {&LossReport::l_v3, &LossReport::l_v5}},
      {"foot_contact", &LossToggles::foot_contact, {&LossReport::l_fc}},
      {"penetration", &LossToggles::penetration, {&LossReport::l_p}},
      {"foot_height", &LossToggles::foot_height, {&LossReport::l_fh}},
  };
  const std::vector<double LossReport::*> every = {
      &LossReport::l_first, &LossReport::l_ori, &LossReport::l_rot, &LossReport::l_pos,
      &LossReport::l_hand,  &LossReport::l_v1,  &LossReport::l_v3,  &LossReport::l_v5,
      &LossReport::l_fc,    &LossReport::l_p,   &LossReport::l_fh};
  std::size_t nonzero_on = 0;
  for (const auto& g : groups) {
    LossToggles tog;
    tog.*(g.flag) = false;
    const LossReport r = losses::compute(out, tg, tmpl, {}, tog).report();
    for (auto term : every) {
      const bool in_group = std::find(g.terms.begin(), g.terms.end(), term) != g.terms.end();
      if (in_group) {
        o.require(r.*term == 0.0, std::string(g.name) + " term not zero");
        nonzero_on += all.*term != 0.0;
      } else {
        o.require(r.*term == all.*term, std::string(g.name) + " changed another term");
      }
    }
    o.require(r.total < all.total || all.total == r.total, std::string(g.name) + " total");
  }
  o.detail << groups.size() << " groups each removable; " << nonzero_on << " of 7 toggled terms nonzero when on";
}

// Two training runs, the same seed, byte-identical checkpoints.
std::string short_run_bytes(const std::vector<MotionSequence>& data, const SkeletonTemplate& tmpl) {
  TrainConfig cfg;
  cfg.model = ModelConfig::tiny();
  cfg.batch = 8;
  cfg.iterations = 40;
  cfg.seed = 21;
  Trainer tr(cfg, data, tmpl);
  train(tr);
  checkpoint::Manifest man;
  man.model = cfg.model;
  man.train = cfg;
  man.iteration = tr.iteration();
  man.seed = cfg.seed;
  man.skeleton = tmpl;
  return checkpoint::serialize(tr.model(), man);
}

// 10. Reproducibility.
void reproducibility(Outcome& o) {
  const auto tmpl = humanoid();
  std::vector<MotionSequence> data;
  for (std::uint64_t s : {1, 2}) data.push_back(dataio::synth_generate(SynthKind::kWalkCycle, 2.0, 60.0, s, tmpl));

  const auto dir = scratch_dir("acceptance_repro");
  std::vector<std::string> files;
  for (int run = 0; run < 2; ++run) {
    TrainConfig cfg;
    cfg.model = ModelConfig::tiny();
    cfg.batch = 8;
    cfg.iterations = 40;
    cfg.seed = 21;
    Trainer tr(cfg, data, tmpl);
    const auto res = train(tr, {dir / ("run" + std::to_string(run)), {}});
    std::ifstream in(res.checkpoint, std::ios::binary);
    files.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
  }
  o.require(!files[0].empty() && files[0] == files[1], "checkpoint files differ");
  o.require(short_run_bytes(data, tmpl) == short_run_bytes(data, tmpl), "in-memory checkpoints differ");

  const auto loaded = checkpoint::load(dir / "run0" / "checkpoint.jlmc");
  const auto reloaded = checkpoint::deserialize(checkpoint::serialize(loaded.model, loaded.manifest));
  const MetricsReport a = evaluate_model(loaded.model, data);
  const MetricsReport b = evaluate_model(reloaded.model, data);
  o.require(a == b, "metrics changed after the round trip");
  o.detail << "checkpoint " << files[0].size() << " bytes, identical across runs; metrics after round trip "
           << (a == b ? "identical" : "different") << " (MPJPE " << a.mpjpe << " cm)";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"rotation suite", rotations},
      {"FK oracle", fk_oracle},
      {"full-model gradient check", gradcheck},
      {"shape and mask invariants", shapes},
      {"loss zero-identities", loss_identities},
      {"metric oracles", metric_oracles},
      {"overfit sanity", overfit},
      {"streaming equivalence and causality", streaming},
      {"ablation toggles", toggles},
      {"reproducibility", reproducibility},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail.str()
              << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
