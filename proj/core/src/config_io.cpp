#include <cmath>
#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "jlm/errors.hpp"

namespace jlm {

using nlohmann::json;

void TrainConfig::validate() const {
  model.validate();
  weights.validate();
  if (iterations == 0) throw SchemaError("iterations must be positive");
  if (batch == 0) throw SchemaError("batch must be at least 1");
  if (!(lr_start > 0.0) || !(lr_end > 0.0) || !std::isfinite(lr_start) || !std::isfinite(lr_end)) {
    throw SchemaError("learning rates must be positive and finite");
  }
  if (!(lr_drop_fraction >= 0.0 && lr_drop_fraction <= 1.0)) {
    throw SchemaError("lr drop fraction must lie in [0, 1]");
  }
}

double TrainConfig::lr_at(std::size_t step) const {
  return static_cast<double>(step) < lr_drop_fraction * static_cast<double>(iterations) ? lr_start : lr_end;
}

ModelConfig model_preset(const std::string& name) {
  if (name == "tiny") return ModelConfig::tiny();
  if (name == "desk") return ModelConfig::desk();
  if (name == "paper") return ModelConfig::paper();
  throw SchemaError("unknown model preset '" + name + "' (expected tiny, desk or paper)");
}

namespace detail {
namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw SchemaError(std::string("unknown key '") + k + "' in " + where);
  }
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"t", c.t},         {"d1", c.d1},
          {"d2", c.d2},       {"n", c.n},
          {"heads", c.heads}, {"mask_count", c.mask_count},
          {"mlp_ratio", c.mlp_ratio}};
}

ModelConfig model_from_json(const json& j, ModelConfig c) {
  if (!j.is_object()) throw SchemaError("model config must be an object");
  reject_unknown(j, {"t", "d1", "d2", "n", "heads", "mask_count", "mlp_ratio"}, "model");
  read(j, "t", c.t);
  read(j, "d1", c.d1);
  read(j, "d2", c.d2);
  read(j, "n", c.n);
  read(j, "heads", c.heads);
  read(j, "mask_count", c.mask_count);
  read(j, "mlp_ratio", c.mlp_ratio);
  return c;
}

json to_json(const TrainConfig& c) {
  const LossWeights& w = c.weights;
  const LossToggles& g = c.toggles;
  return {{"model", to_json(c.model)},
          {"batch", c.batch},
          {"iterations", c.iterations},
          {"lr", {{"start", c.lr_start}, {"end", c.lr_end}, {"drop_fraction", c.lr_drop_fraction}}},
          {"seed", c.seed},
          {"weights",
           {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"delta", w.delta},
            {"epsilon", w.epsilon}, {"zeta", w.zeta}}},
          {"losses",
           {{"hand", g.hand}, {"vel_short", g.vel_short}, {"vel_long", g.vel_long},
            {"foot_contact", g.foot_contact}, {"penetration", g.penetration}, {"foot_height", g.foot_height}}},
          {"masking", c.masking},
          {"log_every", c.log_every},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("train config must be an object");
  reject_unknown(j,
                 {"preset", "model", "batch", "iterations", "lr", "seed", "weights", "losses", "masking",
                  "log_every", "checkpoint_every"},
                 "train config");
  TrainConfig c;
  if (j.contains("preset")) c.model = model_preset(j.at("preset").get<std::string>());
  if (j.contains("model")) c.model = model_from_json(j.at("model"), c.model);
  read(j, "batch", c.batch);
  read(j, "iterations", c.iterations);
  read(j, "seed", c.seed);
  read(j, "masking", c.masking);
  read(j, "log_every", c.log_every);
  read(j, "checkpoint_every", c.checkpoint_every);
  if (j.contains("lr")) {
    const json& lr = j.at("lr");
    reject_unknown(lr, {"start", "end", "drop_fraction"}, "lr");
    read(lr, "start", c.lr_start);
    read(lr, "end", c.lr_end);
    read(lr, "drop_fraction", c.lr_drop_fraction);
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    reject_unknown(w, {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"}, "weights");
    read(w, "alpha", c.weights.alpha);
    read(w, "beta", c.weights.beta);
    read(w, "gamma", c.weights.gamma);
    read(w, "delta", c.weights.delta);
    read(w, "epsilon", c.weights.epsilon);
    read(w, "zeta", c.weights.zeta);
  }
  if (j.contains("losses")) {
    const json& g = j.at("losses");
    reject_unknown(g, {"hand", "vel_short", "vel_long", "foot_contact", "penetration", "foot_height"}, "losses");
    read(g, "hand", c.toggles.hand);
    read(g, "vel_short", c.toggles.vel_short);
    read(g, "vel_long", c.toggles.vel_long);
    read(g, "foot_contact", c.toggles.foot_contact);
    read(g, "penetration", c.toggles.penetration);
    read(g, "foot_height", c.toggles.foot_height);
  }
  c.validate();
  return c;
}

}  // namespace detail

std::string model_config_to_json(const ModelConfig& cfg) { return detail::to_json(cfg).dump(2) + "\n"; }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    ModelConfig c = detail::model_from_json(json::parse(text), ModelConfig{});
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model config: ") + e.what());
  }
}

std::string train_config_to_json(const TrainConfig& cfg) { return detail::to_json(cfg).dump(2) + "\n"; }

TrainConfig train_config_from_json(const std::string& text) {
  try {
    return detail::train_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("train config: ") + e.what());
  }
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return train_config_from_json(ss.str());
}

std::string step_record_to_json(const StepRecord& r) {
  json j = {{"step", r.step}, {"lr", r.lr}};
  for (const auto& [k, v] : r.loss.named()) j[k] = v;
  return j.dump();
}

}  // namespace jlm
