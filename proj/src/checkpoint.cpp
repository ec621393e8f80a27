#include "hyperrestore/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <nlohmann/json.hpp>

namespace hyperrestore {

using nlohmann::json;

namespace {

constexpr std::size_t kPreambleBytes = sizeof(kCheckpointMagic) + 4 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

json arch_to_json(const ArchConfig& a) {
  return {{"channels", a.channels}, {"num_resblocks", a.num_resblocks},
          {"kernel_size", a.kernel_size}, {"upscale_internal", a.upscale_internal}};
}

ArchConfig arch_from_json(const json& j) {
  ArchConfig a;
  a.channels = j.at("channels").get<std::size_t>();
  a.num_resblocks = j.at("num_resblocks").get<std::size_t>();
  a.kernel_size = j.at("kernel_size").get<std::size_t>();
  a.upscale_internal = j.at("upscale_internal").get<std::size_t>();
  return a;
}

std::vector<ParameterView> all_parameters(const HyperRestoreModel& model) {
  auto views = model.parameters();
  if (model.estimator) {
    for (auto& v : model.estimator->parameters()) views.push_back(v);
  }
  return views;
}

std::vector<ParameterRef> all_parameters(HyperRestoreModel& model) {
  auto refs = model.parameters();
  if (model.estimator) {
    for (auto& r : model.estimator->parameters()) refs.push_back(r);
  }
  return refs;
}

/// Parses the preamble + header. `available` is the number of bytes in `data`.
CheckpointHeader parse_header(const std::uint8_t* data, std::size_t available, std::uint64_t* header_end) {
  if (available < kPreambleBytes) throw TruncatedCheckpointError("checkpoint shorter than its preamble");
  if (std::memcmp(data, kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw CheckpointFormatError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = get_u32(data + 8);
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("checkpoint format version " + std::to_string(version) +
                                  " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t header_len = get_u64(data + 12);
  if (available - kPreambleBytes < header_len) throw TruncatedCheckpointError("checkpoint header is truncated");
  *header_end = kPreambleBytes + header_len;

  json h;
  try {
    h = json::parse(data + kPreambleBytes, data + kPreambleBytes + header_len);
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  try {
    CheckpointHeader header;
    header.version = version;
    header.arch = arch_from_json(h.at("arch"));
    header.task = parse_task(h.at("task").get<std::string>());
    header.range = {h.at("level_range").at(0).get<double>(), h.at("level_range").at(1).get<double>()};
    header.convolution = h.at("convolution").get<std::string>();
    const auto& meta = h.at("metadata");
    header.metadata.steps = meta.at("steps").get<std::size_t>();
    header.metadata.seed = meta.at("seed").get<std::uint64_t>();
    header.metadata.trained_levels = meta.at("trained_levels").get<std::vector<double>>();
    if (!h.at("estimator").is_null()) {
      const auto& e = h.at("estimator");
      header.estimator = EstimatorHeader{parse_task(e.at("task").get<std::string>()),
                                         e.at("level_offset").get<double>(), e.at("level_scale").get<double>()};
    }
    for (const auto& t : h.at("tensors")) {
      header.tensors.push_back({t.at("name").get<std::string>(), t.at("shape").get<Shape>(),
                                t.at("offset").get<std::uint64_t>()});
    }
    header.payload_bytes = h.at("payload_bytes").get<std::uint64_t>();
    return header;
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("checkpoint header is missing fields: ") + e.what());
  } catch (const ContractViolation& e) {
    throw CheckpointFormatError(std::string("checkpoint header is invalid: ") + e.what());
  }
}

}  // namespace

std::uint32_t payload_crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_checkpoint(const HyperRestoreModel& model) {
  const auto views = all_parameters(model);
  std::vector<std::uint8_t> payload;
  json tensors = json::array();
  for (const auto& v : views) {
    tensors.push_back({{"name", v.name}, {"shape", v.shape}, {"offset", payload.size()}});
    for (float f : v.values) put_u32(payload, std::bit_cast<std::uint32_t>(f));
  }

  json estimator = nullptr;
  if (model.estimator) {
    estimator = {{"task", to_string(model.estimator->task)},
                 {"level_offset", model.estimator->level_offset},
                 {"level_scale", model.estimator->level_scale}};
  }
  const json header = {
      {"format", "hyperrestore-checkpoint"},
      {"arch", arch_to_json(model.arch)},
      {"task", to_string(model.task)},
      {"level_range", {model.range.min, model.range.max}},
      {"convolution", kConvolutionConvention},
      {"byte_order", "little-endian float32"},
      {"metadata",
       {{"steps", model.metadata.steps},
        {"seed", model.metadata.seed},
        {"trained_levels", model.metadata.trained_levels}}},
      {"estimator", estimator},
      {"tensors", tensors},
      {"payload_bytes", payload.size()},
  };
  const std::string text = header.dump(1);

  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  put_u32(out, payload_crc32(payload));
  return out;
}

HyperRestoreModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  std::uint64_t header_end = 0;
  const CheckpointHeader header = parse_header(bytes.data(), bytes.size(), &header_end);
  if (bytes.size() - header_end < header.payload_bytes + 4) {
    throw TruncatedCheckpointError("checkpoint payload is truncated: expected " +
                                   std::to_string(header.payload_bytes + 4) + " bytes after the header, found " +
                                   std::to_string(bytes.size() - header_end));
  }
  const auto payload = bytes.subspan(header_end, header.payload_bytes);
  const std::uint32_t stored = get_u32(bytes.data() + header_end + header.payload_bytes);
  const std::uint32_t actual = payload_crc32(payload);
  if (stored != actual) {
    throw ChecksumMismatchError("checkpoint payload checksum mismatch (stored " + std::to_string(stored) +
                                ", computed " + std::to_string(actual) + ")");
  }

  HyperRestoreModel model;
  try {
    model = HyperRestoreModel::initialize(header.arch, header.task, header.range, 0);
  } catch (const ContractViolation& e) {
    throw CheckpointFormatError(std::string("checkpoint architecture is invalid: ") + e.what());
  }
  model.metadata = header.metadata;
  if (header.estimator) {
    std::mt19937_64 rng(0);
    model.estimator = EstimatorNet::initialize(header.estimator->task, {0.0, 1.0}, rng);
    model.estimator->level_offset = header.estimator->level_offset;
    model.estimator->level_scale = header.estimator->level_scale;
  }

  std::map<std::string, const TensorEntry*> by_name;
  for (const auto& entry : header.tensors) {
    if (!by_name.emplace(entry.name, &entry).second) {
      throw CheckpointFormatError("duplicate tensor name '" + entry.name + "'");
    }
  }
  const auto refs = all_parameters(model);
  if (refs.size() != by_name.size()) {
    throw CheckpointFormatError("checkpoint holds " + std::to_string(by_name.size()) + " tensors, architecture needs " +
                                std::to_string(refs.size()));
  }
  for (const auto& ref : refs) {
    auto it = by_name.find(ref.name);
    if (it == by_name.end()) throw CheckpointFormatError("checkpoint is missing tensor '" + ref.name + "'");
    const TensorEntry& entry = *it->second;
    if (entry.shape != ref.shape) {
      throw CheckpointFormatError("tensor '" + ref.name + "' has shape " + shape_to_string(entry.shape) +
                                  ", expected " + shape_to_string(ref.shape));
    }
    const std::uint64_t nbytes = 4 * ref.values.size();
    if (entry.offset > payload.size() || payload.size() - entry.offset < nbytes) {
      throw CheckpointFormatError("tensor '" + ref.name + "' lies outside the payload");
    }
    const std::uint8_t* p = payload.data() + entry.offset;
    for (std::size_t i = 0; i < ref.values.size(); ++i) {
      ref.values[i] = std::bit_cast<float>(get_u32(p + 4 * i));
    }
  }
  return model;
}

void save_checkpoint(const HyperRestoreModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot publish checkpoint " + path.string() + ": " + ec.message());
}

HyperRestoreModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return deserialize_checkpoint(bytes);
  } catch (const ChecksumMismatchError& e) {
    throw ChecksumMismatchError(path.string() + ": " + e.what());
  } catch (const TruncatedCheckpointError& e) {
    throw TruncatedCheckpointError(path.string() + ": " + e.what());
  } catch (const UnsupportedVersionError& e) {
    throw UnsupportedVersionError(path.string() + ": " + e.what());
  } catch (const CheckpointFormatError& e) {
    throw CheckpointFormatError(path.string() + ": " + e.what());
  }
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> preamble(kPreambleBytes);
  in.read(reinterpret_cast<char*>(preamble.data()), static_cast<std::streamsize>(preamble.size()));
  preamble.resize(static_cast<std::size_t>(in.gcount()));
  std::uint64_t header_end = 0;
  if (preamble.size() < kPreambleBytes) throw TruncatedCheckpointError(path.string() + ": shorter than its preamble");
  const std::uint64_t header_len = get_u64(preamble.data() + 12);
  // Validate magic/version before trusting header_len.
  if (std::memcmp(preamble.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) == 0 &&
      get_u32(preamble.data() + 8) == kCheckpointVersion) {
    std::error_code ec;
    const auto file_bytes = std::filesystem::file_size(path, ec);
    if (ec || header_len > file_bytes - kPreambleBytes) {
      throw TruncatedCheckpointError(path.string() + ": checkpoint header is truncated");
    }
    preamble.resize(kPreambleBytes + header_len);
    in.read(reinterpret_cast<char*>(preamble.data() + kPreambleBytes), static_cast<std::streamsize>(header_len));
    preamble.resize(kPreambleBytes + static_cast<std::size_t>(in.gcount()));
  }
  return parse_header(preamble.data(), preamble.size(), &header_end);
}

}  // namespace hyperrestore
