#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "jlm/model.hpp"
#include "jlm/train.hpp"

namespace jlm::checkpoint {

inline constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

struct Manifest {
  ModelConfig model;
  std::optional<TrainConfig> train;
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  SkeletonTemplate skeleton;
};

// Float64 keeps the round trip bit-exact; float32 halves the size.
std::string serialize(const JLMModel& model, const Manifest& manifest, DType dtype = DType::kFloat64);
void save(const JLMModel& model, const Manifest& manifest, const std::filesystem::path& path,
          DType dtype = DType::kFloat64);

struct Loaded {
  Manifest manifest;
  JLMModel model;
};

// Throws SchemaError on a malformed or truncated file, VersionError on an
// unknown version.
Loaded deserialize(const std::string& bytes);
Loaded load(const std::filesystem::path& path);

// Copies the tensor table into an existing model. Throws ShapeMismatch
// when the stored config or any tensor shape differs.
void load_into(JLMModel& model, const std::filesystem::path& path);
void load_into(JLMModel& model, const std::string& bytes);

}  // namespace jlm::checkpoint
