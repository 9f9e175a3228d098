#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jlm/dataio.hpp"
#include "jlm/errors.hpp"

namespace jlm {

using nlohmann::json;

LocalPose MotionSequence::local_pose() const {
  LocalPose pose;
  pose.joints = kNumJoints;
  pose.rotations.reserve(frames.size() * kNumJoints);
  for (const auto& f : frames)
    for (const auto& r : f.local_rotations) pose.rotations.push_back(rotmath::axis_angle_to_matrix(r));
  return pose;
}

std::vector<Vec3> MotionSequence::root_translations() const {
  std::vector<Vec3> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.root_translation);
  return out;
}

void MotionSequence::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw FormatError("fps must be positive");
  if (frames.size() < 2) throw FormatError("a motion needs at least 2 frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    bool ok = frames[i].root_translation.allFinite();
    for (const auto& r : frames[i].local_rotations) ok = ok && r.r.allFinite();
    if (!ok) throw FormatError("frames[" + std::to_string(i) + "]: non-finite value");
  }
}

Vec3 TrackingSignals::position(std::size_t f, std::size_t device) const {
  const double* p = row(f) + device * kDeviceWidth + kPosition;
  return {p[0], p[1], p[2]};
}

Rot6D TrackingSignals::rotation(std::size_t f, std::size_t device) const {
  const double* p = row(f) + device * kDeviceWidth + kRotation;
  Rot6D r;
  for (std::size_t k = 0; k < 6; ++k) r.v[k] = p[k];
  return r;
}

namespace dataio {
namespace {

constexpr std::size_t kFrameWidth = kNumJoints * 3 + 3;  // 69

static_assert(std::endian::native == std::endian::little, "sidecar I/O assumes a little-endian host");

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1-based line of a byte offset, for parse diagnostics.
std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << what << ": line " << line_of(text, e.byte) << ": " << e.what();
    throw FormatError(os.str());
  }
}

template <class T>
T field(const json& doc, const char* key, const char* what) {
  if (!doc.contains(key)) throw FormatError(std::string(what) + ": missing field '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": field '" + key + "': " + e.what());
  }
}

void check_version(const json& doc, const char* what) {
  const int version = field<int>(doc, "version", what);
  if (version != kMotionVersion) {
    throw VersionError(std::string(what) + ": unsupported version " + std::to_string(version));
  }
}

MotionFrame frame_from_row(const double* row) {
  MotionFrame f;
  for (std::size_t j = 0; j < kNumJoints; ++j)
    f.local_rotations[j].r = Vec3(row[3 * j], row[3 * j + 1], row[3 * j + 2]);
  f.root_translation = Vec3(row[66], row[67], row[68]);
  return f;
}

std::vector<double> frame_to_row(const MotionFrame& f) {
  std::vector<double> row(kFrameWidth);
  for (std::size_t j = 0; j < kNumJoints; ++j)
    for (int k = 0; k < 3; ++k) row[3 * j + static_cast<std::size_t>(k)] = f.local_rotations[j].r[k];
  for (int k = 0; k < 3; ++k) row[66 + static_cast<std::size_t>(k)] = f.root_translation[k];
  return row;
}

std::vector<MotionFrame> read_sidecar(const std::filesystem::path& path, std::size_t frames) {
  const std::string bytes = read_file(path);
  const std::size_t want = frames * kFrameWidth * sizeof(float);
  if (bytes.size() != want) {
    throw FormatError("sidecar " + path.string() + ": expected " + std::to_string(want) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  std::vector<MotionFrame> out;
  out.reserve(frames);
  std::vector<double> row(kFrameWidth);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t k = 0; k < kFrameWidth; ++k) {
      float v;
      std::memcpy(&v, bytes.data() + (i * kFrameWidth + k) * sizeof(float), sizeof(float));
      row[k] = v;
    }
    out.push_back(frame_from_row(row.data()));
  }
  return out;
}

}  // namespace

MotionSequence parse_motion(const std::string& text, const std::filesystem::path& base_dir) {
  constexpr const char* what = "motion document";
  const json doc = parse_document(text, what);
  if (!doc.is_object() || doc.value("format", "") != "jlm-motion") {
    throw FormatError("motion document: missing format \"jlm-motion\"");
  }
  check_version(doc, what);
  const int joints = field<int>(doc, "joint_count", what);
  if (joints != static_cast<int>(kNumJoints)) {
    throw FormatError("motion document: joint_count must be 22, got " + std::to_string(joints));
  }
  const auto rot_format = field<std::string>(doc, "rotation_format", what);
  if (rot_format != "axis_angle") {
    throw FormatError("motion document: rotation_format must be \"axis_angle\", got \"" + rot_format + "\"");
  }

  MotionSequence seq;
  seq.fps = field<double>(doc, "fps", what);

  if (doc.contains("sidecar")) {
    const json& sc = doc.at("sidecar");
    if (sc.value("dtype", "") != "float32" || sc.value("layout", "") != "row-major") {
      throw FormatError("motion document: sidecar must be row-major float32");
    }
    const auto frames = field<std::size_t>(sc, "frames", "sidecar");
    seq.frames = read_sidecar(base_dir / field<std::string>(sc, "path", "sidecar"), frames);
  } else {
    if (!doc.contains("frames") || !doc.at("frames").is_array()) {
      throw FormatError("motion document: missing array field 'frames'");
    }
    const json& frames = doc.at("frames");
    seq.frames.reserve(frames.size());
    std::vector<double> row(kFrameWidth);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const json& fr = frames[i];
      if (!fr.is_array() || fr.size() != kFrameWidth) {
        throw FormatError("motion document: frames[" + std::to_string(i) + "]: expected " +
                          std::to_string(kFrameWidth) + " numbers");
      }
      for (std::size_t k = 0; k < kFrameWidth; ++k) {
        if (!fr[k].is_number()) {
          throw FormatError("motion document: frames[" + std::to_string(i) + "][" + std::to_string(k) +
                            "]: not a number");
        }
        row[k] = fr[k].get<double>();
      }
      seq.frames.push_back(frame_from_row(row.data()));
    }
  }
  seq.validate();
  return seq;
}

std::string format_motion(const MotionSequence& seq) {
  json doc;
  doc["format"] = "jlm-motion";
  doc["version"] = kMotionVersion;
  doc["fps"] = seq.fps;
  doc["joint_count"] = kNumJoints;
  doc["rotation_format"] = "axis_angle";
  json frames = json::array();
  for (const auto& f : seq.frames) frames.push_back(frame_to_row(f));
  doc["frames"] = std::move(frames);
  return doc.dump();
}

MotionSequence load_motion(const std::filesystem::path& path) {
  return parse_motion(read_file(path), path.parent_path());
}

void save_motion(const MotionSequence& seq, const std::filesystem::path& path, const SaveOptions& opt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  if (!opt.binary_sidecar) {
    out << format_motion(seq) << '\n';
    return;
  }
  const std::filesystem::path bin = path.string() + ".bin";
  std::ofstream bout(bin, std::ios::binary);
  if (!bout) throw FormatError("cannot write " + bin.string());
  for (const auto& f : seq.frames) {
    for (double v : frame_to_row(f)) {
      const float x = static_cast<float>(v);
      bout.write(reinterpret_cast<const char*>(&x), sizeof(float));
    }
  }
  json doc;
  doc["format"] = "jlm-motion";
  doc["version"] = kMotionVersion;
  doc["fps"] = seq.fps;
  doc["joint_count"] = kNumJoints;
  doc["rotation_format"] = "axis_angle";
  doc["sidecar"] = {{"path", bin.filename().string()},
                    {"dtype", "float32"},
                    {"layout", "row-major"},
                    {"frames", seq.frames.size()},
                    {"width", kFrameWidth}};
  out << doc.dump(2) << '\n';
}

TrackingSignals load_signals(const std::filesystem::path& path) {
  constexpr const char* what = "signals document";
  const std::string text = read_file(path);
  const json doc = parse_document(text, what);
  if (!doc.is_object() || doc.value("format", "") != "jlm-signals") {
    throw FormatError("signals document: missing format \"jlm-signals\"");
  }
  check_version(doc, what);
  TrackingSignals s;
  s.fps = field<double>(doc, "fps", what);
  const auto rows = field<std::vector<std::vector<double>>>(doc, "rows", what);
  s.frames = rows.size();
  s.values.reserve(rows.size() * TrackingSignals::kWidth);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != TrackingSignals::kWidth) {
      throw FormatError("signals document: rows[" + std::to_string(i) + "]: expected 54 numbers");
    }
    s.values.insert(s.values.end(), rows[i].begin(), rows[i].end());
  }
  return s;
}

void save_signals(const TrackingSignals& signals, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "jlm-signals";
  doc["version"] = kMotionVersion;
  doc["fps"] = signals.fps;
  json rows = json::array();
  for (std::size_t f = 0; f < signals.frames; ++f)
    rows.push_back(std::vector<double>(signals.row(f), signals.row(f) + TrackingSignals::kWidth));
  doc["rows"] = std::move(rows);
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << doc.dump() << '\n';
}

}  // namespace dataio
}  // namespace jlm
