#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperrestore/model.hpp"

namespace httplib {
class Server;
}

namespace hyperrestore {

struct ServiceOptions {
  std::size_t max_upload_bytes = 8 << 20;
  std::chrono::seconds session_timeout{15 * 60};
  std::size_t weight_cache_capacity = 32;
  std::size_t restore_cache_per_session = 64;
  std::filesystem::path static_dir;  // served at / when it exists
};

/// Conditioning value rounded to the 1e-3 cache grid, as an integer key.
std::int64_t quantize_conditioning(double c);

/// LRU cache of generated networks keyed by quantized c.
class WeightCache {
 public:
  explicit WeightCache(std::size_t capacity) : capacity_(capacity) {}

  /// The network is generated at the quantized value itself, so a key always maps to the same weights.
  std::shared_ptr<const GeneratedNetwork> get(const HyperRestoreModel& model, std::int64_t key);

  std::size_t size() const;
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  using Entry = std::pair<std::int64_t, std::shared_ptr<const GeneratedNetwork>>;
  mutable std::mutex mutex_;
  std::size_t capacity_;
  std::list<Entry> order_;  // front = most recent
  std::unordered_map<std::int64_t, std::list<Entry>::iterator> index_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// HTTP front end for interactive restoration at arbitrary levels.
///
///   POST /api/session   multipart "image" (PNG), optional "reference" (PNG, test mode)
///   GET  /api/restore?session=..&level=..
///   GET  /api/model
class TunerService {
 public:
  explicit TunerService(ServiceOptions options = {});
  ~TunerService();

  TunerService(const TunerService&) = delete;
  TunerService& operator=(const TunerService&) = delete;

  void load_model(HyperRestoreModel model);

  /// Blocks until stop(). Returns false if the socket could not be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it (or -1); call listen_after_bind() next.
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

  std::size_t session_count() const;
  const WeightCache& weight_cache() const { return weights_; }

 private:
  struct Session {
    Tensor image;
    std::optional<Tensor> reference;
    std::chrono::steady_clock::time_point last_used;
    std::list<std::int64_t> restore_order;
    std::unordered_map<std::int64_t, std::shared_ptr<const std::string>> restored;  // PNG bytes
    std::unordered_map<std::int64_t, double> restored_psnr;
    std::mutex mutex;
  };

  void install_routes();
  std::shared_ptr<Session> find_session(const std::string& id);
  void expire_sessions();
  std::string new_session_id();

  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::shared_ptr<const HyperRestoreModel> model_;
  mutable std::mutex model_mutex_;
  WeightCache weights_;
  mutable std::mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t session_counter_ = 0;
  std::uint64_t session_salt_;
};

}  // namespace hyperrestore
