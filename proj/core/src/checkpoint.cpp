#include "jlm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "config_json.hpp"
#include "jlm/errors.hpp"

namespace jlm::checkpoint {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'J', 'L', 'M', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  template <typename T>
  T get(const char* what) {
    T v;
    std::memcpy(&v, take(sizeof(T), what), sizeof(T));
    return v;
  }
  std::string bytes(std::size_t n, const char* what) { return std::string(take(n, what), n); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const char* take(std::size_t n, const char* what) {
    if (n > remaining()) {
      throw SchemaError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                        std::to_string(pos_));
    }
    const char* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

json manifest_json(const Manifest& m) {
  return {{"format", "jlm-checkpoint"},
          {"version", kVersion},
          {"model", detail::to_json(m.model)},
          {"train", m.train ? detail::to_json(*m.train) : json(nullptr)},
          {"iteration", m.iteration},
          {"seed", m.seed},
          {"skeleton", json::parse(m.skeleton.to_json_text())}};
}

Manifest parse_manifest(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "jlm-checkpoint") throw SchemaError("manifest is not a jlm-checkpoint");
    Manifest m;
    m.model = detail::model_from_json(j.at("model"), ModelConfig{});
    if (!j.at("train").is_null()) m.train = detail::train_from_json(j.at("train"));
    m.iteration = j.at("iteration").get<std::uint64_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.skeleton = SkeletonTemplate::from_json_text(j.at("skeleton").dump());
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint manifest: ") + e.what());
  }
}

struct Header {
  Manifest manifest;
  std::uint32_t tensor_count = 0;
};

Header read_header(Reader& r) {
  if (r.bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw SchemaError("not a jlm checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) throw VersionError("checkpoint version " + std::to_string(version) + " is not supported");
  const auto len = r.get<std::uint64_t>("manifest length");
  if (len > r.remaining()) throw SchemaError("checkpoint truncated inside the manifest");
  Header h;
  h.manifest = parse_manifest(r.bytes(static_cast<std::size_t>(len), "manifest"));
  h.tensor_count = r.get<std::uint32_t>("tensor count");
  return h;
}

void read_tensors(Reader& r, std::uint32_t count, nn::ParamStore& params) {
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>("tensor name length");
    const std::string name = r.bytes(name_len, "tensor name");
    const auto dtype = r.get<std::uint8_t>("dtype");
    const auto rank = r.get<std::uint8_t>("rank");
    nn::Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>("extent"));
    if (!params.contains(name)) throw SchemaError("checkpoint has unknown tensor '" + name + "'");
    if (!seen.insert(name).second) throw SchemaError("checkpoint repeats tensor '" + name + "'");
    nn::Tensor& p = params.at(name);
    if (shape != p.shape()) {
      throw ShapeMismatch("tensor '" + name + "' stored as " + nn::to_string(shape) + ", model expects " +
                          nn::to_string(p.shape()));
    }
    auto dst = p.mutable_data();
    if (dtype == static_cast<std::uint8_t>(DType::kFloat64)) {
      for (auto& v : dst) v = r.get<double>("payload");
    } else if (dtype == static_cast<std::uint8_t>(DType::kFloat32)) {
      for (auto& v : dst) v = static_cast<double>(r.get<float>("payload"));
    } else {
      throw SchemaError("tensor '" + name + "' has unknown dtype " + std::to_string(dtype));
    }
  }
  if (seen.size() != params.size()) {
    for (const auto& [name, t] : params.entries()) {
      if (!seen.count(name)) throw SchemaError("checkpoint is missing tensor '" + name + "'");
    }
  }
  if (r.remaining() != 0) throw SchemaError("trailing bytes after the tensor table");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string serialize(const JLMModel& model, const Manifest& manifest, DType dtype) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  const std::string m = manifest_json(manifest).dump();
  put<std::uint64_t>(out, m.size());
  out += m;
  const auto& entries = model.params().entries();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (double v : t.data()) {
      if (dtype == DType::kFloat64) {
        put<double>(out, v);
      } else {
        put<float>(out, static_cast<float>(v));
      }
    }
  }
  return out;
}

void save(const JLMModel& model, const Manifest& manifest, const std::filesystem::path& path, DType dtype) {
  const std::string bytes = serialize(model, manifest, dtype);
  // Write then rename so a crash never leaves a half-written checkpoint.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Loaded deserialize(const std::string& bytes) {
  Reader r(bytes);
  Header h = read_header(r);
  JLMModel model(h.manifest.model, h.manifest.skeleton, h.manifest.seed);
  read_tensors(r, h.tensor_count, model.params());
  model.params().step = h.manifest.iteration;
  return {std::move(h.manifest), std::move(model)};
}

Loaded load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void load_into(JLMModel& model, const std::string& bytes) {
  Reader r(bytes);
  const Header h = read_header(r);
  if (!(h.manifest.model == model.config())) {
    throw ShapeMismatch("checkpoint model config " + detail::to_json(h.manifest.model).dump() +
                        " does not match " + detail::to_json(model.config()).dump());
  }
  read_tensors(r, h.tensor_count, model.params());
}

void load_into(JLMModel& model, const std::filesystem::path& path) { load_into(model, read_file(path)); }

}  // namespace jlm::checkpoint
