#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperrestore/model.hpp"

namespace hyperrestore {

/// Base class of every checkpoint failure.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointFormatError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class ChecksumMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class TruncatedCheckpointError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class UnsupportedVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

inline constexpr char kCheckpointMagic[8] = {'H', 'R', 'S', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr const char* kConvolutionConvention = "cross-correlation, no kernel flip, zero padding";

struct TensorEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;  // byte offset inside the payload section
};

struct EstimatorHeader {
  TaskKind task = TaskKind::noise;
  double level_offset = 0.0;
  double level_scale = 1.0;
};

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  ArchConfig arch;
  TaskKind task = TaskKind::noise;
  LevelRange range;
  std::string convolution;
  ModelMetadata metadata;
  std::optional<EstimatorHeader> estimator;
  std::vector<TensorEntry> tensors;
  std::uint64_t payload_bytes = 0;
};

/// Writes to a sibling temp file and renames it into place.
void save_checkpoint(const HyperRestoreModel& model, const std::filesystem::path& path);
HyperRestoreModel load_checkpoint(const std::filesystem::path& path);

/// Parses magic, version and header only; tensor payloads are not read.
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

/// In-memory variants used by the file functions.
std::vector<std::uint8_t> serialize_checkpoint(const HyperRestoreModel& model);
HyperRestoreModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);

std::uint32_t payload_crc32(std::span<const std::uint8_t> bytes);

}  // namespace hyperrestore
