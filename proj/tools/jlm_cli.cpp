#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "jlm/checkpoint.hpp"
#include "jlm/dataio.hpp"
#include "jlm/errors.hpp"
#include "jlm/infer.hpp"
#include "jlm/metrics.hpp"
#include "jlm/train.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef JLM_DEFAULT_SKELETON
#define JLM_DEFAULT_SKELETON "humanoid22.json"
#endif

// Motion files under a directory (sorted), or the single file given.
std::vector<fs::path> motion_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw jlm::DataError("no motion files found");
  return out;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw jlm::DataError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_signals_document(const fs::path& p) {
  const auto doc = nlohmann::json::parse(read_text(p), nullptr, false);
  return doc.is_object() && doc.value("format", "") == "jlm-signals";
}

struct GenData {
  std::string kind;
  double seconds = 10.0;
  double fps = 60.0;
  std::uint64_t seed = 0;
  std::string out;
  bool binary = false;
};

struct Train {
  std::string config;
  std::vector<std::string> data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
};

struct Eval {
  std::string checkpoint;
  std::vector<std::string> data;
  std::string report;
  std::string pred;
  std::size_t window = 0;
};

struct Infer {
  std::string checkpoint;
  std::string input;
  std::string output;
  std::size_t window = 0;
};

struct GradCheck {
  std::string config;
  bool tiny = false;
  std::uint64_t seed = 0;
};

int run_gen_data(const GenData& o, const jlm::SkeletonTemplate& tmpl) {
  const auto kind = jlm::dataio::parse_synth_kind(o.kind);
  const auto seq = jlm::dataio::synth_generate(kind, o.seconds, o.fps, o.seed, tmpl);
  jlm::dataio::save_motion(seq, o.out, {o.binary});
  std::cout << "wrote " << seq.size() << " frames (" << o.kind << ") to " << o.out << "\n";
  return 0;
}

int run_train(const Train& o, const jlm::SkeletonTemplate& tmpl) {
  jlm::TrainConfig cfg = jlm::load_train_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.iterations) cfg.iterations = *o.iterations;
  cfg.validate();
  std::vector<jlm::MotionSequence> data;
  for (const auto& f : motion_files(o.data)) data.push_back(jlm::dataio::load_motion(f));
  jlm::Trainer trainer(cfg, std::move(data), tmpl);
  jlm::TrainOutputs outputs;
  outputs.out_dir = o.out;
  const std::size_t every = std::max<std::size_t>(1, cfg.iterations / 20);
  outputs.on_step = [&](const jlm::StepRecord& r) {
    if (r.step % every == 0 || r.step + 1 == cfg.iterations) {
      std::cout << "step " << r.step << " lr " << r.lr << " loss " << r.loss.total << "\n";
    }
  };
  const auto result = jlm::train(trainer, outputs);
  std::cout << "checkpoint " << result.checkpoint.string() << "\n";
  return 0;
}

jlm::MotionSequence predict(const jlm::JLMModel& model, const jlm::TrackingSignals& signals, std::size_t window) {
  return jlm::to_motion(jlm::infer_windows(model, signals, window), signals.fps);
}

int run_eval(const Eval& o, const jlm::SkeletonTemplate& tmpl) {
  const auto gt_files = motion_files(o.data);
  std::optional<jlm::checkpoint::Loaded> ckpt;
  if (o.pred.empty()) ckpt = jlm::checkpoint::load(o.checkpoint);
  const jlm::SkeletonTemplate& skel = ckpt ? ckpt->model.skeleton() : tmpl;

  std::vector<fs::path> pred_files;
  if (!o.pred.empty()) {
    pred_files = motion_files({o.pred});
    if (pred_files.size() != gt_files.size()) {
      throw jlm::DataError("--pred has " + std::to_string(pred_files.size()) + " files, --data has " +
                           std::to_string(gt_files.size()));
    }
  }
  jlm::EvaluationReport report;
  for (std::size_t i = 0; i < gt_files.size(); ++i) {
    const auto gt = jlm::dataio::load_motion(gt_files[i]);
    const auto pred = ckpt ? predict(ckpt->model, jlm::dataio::derive_tracking_signals(gt, skel), o.window)
                           : jlm::dataio::load_motion(pred_files[i]);
    report.sequences.push_back({gt_files[i].stem().string(), jlm::metrics::evaluate_pair(pred, gt, skel, gt.fps)});
  }
  report.aggregate = jlm::metrics::aggregate(report.sequences);
  jlm::metrics::save_report(report, o.report);
  for (const auto& [k, v] : report.aggregate.named()) std::cout << k << " " << v << "\n";
  return 0;
}

int run_infer(const Infer& o) {
  const auto ckpt = jlm::checkpoint::load(o.checkpoint);
  const fs::path input(o.input);
  const jlm::TrackingSignals signals =
      is_signals_document(input)
          ? jlm::dataio::load_signals(input)
          : jlm::dataio::derive_tracking_signals(jlm::dataio::load_motion(input), ckpt.model.skeleton());

  std::vector<jlm::FramePrediction> frames;
  std::size_t next = 0;
  jlm::SignalSource source = [&]() -> std::optional<std::vector<double>> {
    if (next >= signals.frames) return std::nullopt;
    const double* r = signals.row(next++);
    return std::vector<double>(r, r + jlm::TrackingSignals::kWidth);
  };
  jlm::infer_stream(ckpt.model, source, [&](const jlm::FramePrediction& f) { frames.push_back(f); }, o.window);
  jlm::dataio::save_motion(jlm::to_motion(frames, signals.fps), o.output);
  std::cout << "wrote " << frames.size() << " frames to " << o.output << "\n";
  return 0;
}

int run_gradcheck(const GradCheck& o, const jlm::SkeletonTemplate& tmpl) {
  const jlm::ModelConfig cfg = o.tiny ? jlm::ModelConfig::tiny() : jlm::load_train_config(o.config).model;
  const auto r = jlm::model_grad_check(cfg, tmpl, o.seed);
  std::cout << "max relative error " << r.max_rel_error << " (parameter " << r.worst_parameter << "["
            << r.worst_index << "], analytic " << r.worst_analytic << ", numeric " << r.worst_numeric << ", "
            << r.checked << " entries checked)\n";
  if (!r.passed) {
    std::cerr << "gradcheck failed: tolerance 1e-4\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint-level motion model: data generation, training, evaluation and inference"};
  app.require_subcommand(1);
  std::string skeleton = JLM_DEFAULT_SKELETON;
  app.add_option("--skeleton", skeleton, "Skeleton template file")->capture_default_str();

  GenData gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic motion file");
  gen_cmd->add_option("--kind", gen.kind, "idle_sway, walk_cycle, arm_wave or squat")->required();
  gen_cmd->add_option("--seconds", gen.seconds, "Duration")->capture_default_str();
  gen_cmd->add_option("--fps", gen.fps, "Frame rate")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output motion file")->required();
  gen_cmd->add_flag("--binary", gen.binary, "Store frames in a float32 sidecar");

  Train tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", tr.config, "Training config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--data", tr.data, "Motion files or directories")->required()->expected(1, -1);
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--seed", tr.seed, "Override the config seed");
  train_cmd->add_option("--iterations", tr.iterations, "Override the config iteration count");

  Eval ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  auto* ck_opt = eval_cmd->add_option("--checkpoint", ev.checkpoint, "Model checkpoint");
  eval_cmd->add_option("--data", ev.data, "Ground-truth motion files or directories")->required()->expected(1, -1);
  eval_cmd->add_option("--report", ev.report, "Output metrics report")->required();
  auto* pred_opt = eval_cmd->add_option("--pred", ev.pred, "Precomputed predictions instead of a checkpoint");
  eval_cmd->add_option("--window", ev.window, "Frames of history, at most the model window");
  ck_opt->excludes(pred_opt);

  Infer inf;
  auto* infer_cmd = app.add_subcommand("infer", "Stream tracking signals through a model");
  infer_cmd->add_option("--checkpoint", inf.checkpoint, "Model checkpoint")->required();
  infer_cmd->add_option("--input", inf.input, "Motion file or signals document")->required();
  infer_cmd->add_option("--output", inf.output, "Output motion file")->required();
  infer_cmd->add_option("--window", inf.window, "Frames of history, at most the model window");

  GradCheck gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model gradient");
  auto* cfg_opt = gc_cmd->add_option("--config", gc.config, "Training config file");
  auto* tiny_opt = gc_cmd->add_flag("--tiny", gc.tiny, "Use the tiny model preset");
  gc_cmd->add_option("--seed", gc.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (*eval_cmd && ev.checkpoint.empty() && ev.pred.empty()) {
      throw CLI::RequiredError("eval needs --checkpoint or --pred");
    }
    if (*gc_cmd && !*cfg_opt && !*tiny_opt) throw CLI::RequiredError("gradcheck needs --config or --tiny");
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen, jlm::SkeletonTemplate::load(skeleton));
    if (*train_cmd) return run_train(tr, jlm::SkeletonTemplate::load(skeleton));
    if (*eval_cmd) return run_eval(ev, jlm::SkeletonTemplate::load(skeleton));
    if (*infer_cmd) return run_infer(inf);
    if (*gc_cmd) return run_gradcheck(gc, jlm::SkeletonTemplate::load(skeleton));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
