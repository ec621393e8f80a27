#include "hyperrestore/tuner_service.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hyperrestore/image_io.hpp"
#include "hyperrestore/metrics.hpp"
#include "hyperrestore/seeding.hpp"

namespace hyperrestore {

using nlohmann::json;

std::int64_t quantize_conditioning(double c) {
  if (!std::isfinite(c)) throw ContractViolation("conditioning value is not finite");
  return static_cast<std::int64_t>(std::llround(c * 1000.0));
}

std::shared_ptr<const GeneratedNetwork> WeightCache::get(const HyperRestoreModel& model, std::int64_t key) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      ++hits_;
      return it->second->second;
    }
    ++misses_;
  }
  auto net = std::make_shared<const GeneratedNetwork>(generate_network(model, static_cast<double>(key) / 1000.0));
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(key); it != index_.end()) return it->second->second;
  order_.emplace_front(key, net);
  index_[key] = order_.begin();
  while (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return net;
}

std::size_t WeightCache::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

std::size_t WeightCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t WeightCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

namespace {

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

std::optional<std::string> upload_part(const httplib::Request& req, const std::string& name) {
  if (req.is_multipart_form_data()) {
    if (!req.has_file(name)) return std::nullopt;
    return req.get_file_value(name).content;
  }
  if (name == "image" && !req.body.empty()) return req.body;
  return std::nullopt;
}

std::optional<Tensor> decode_upload(const std::string& bytes) {
  try {
    return decode_png({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

TunerService::TunerService(ServiceOptions options)
    : options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()),
      weights_(options_.weight_cache_capacity),
      session_salt_(std::random_device{}()) {
  server_->set_payload_max_length(options_.max_upload_bytes);
  install_routes();
}

TunerService::~TunerService() { stop(); }

void TunerService::load_model(HyperRestoreModel model) {
  std::lock_guard lock(model_mutex_);
  model_ = std::make_shared<const HyperRestoreModel>(std::move(model));
}

bool TunerService::listen(const std::string& host, int port) { return server_->listen(host, port); }

int TunerService::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool TunerService::listen_after_bind() { return server_->listen_after_bind(); }

void TunerService::stop() {
  if (server_) server_->stop();
}

void TunerService::wait_until_ready() const { server_->wait_until_ready(); }

std::size_t TunerService::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::string TunerService::new_session_id() {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << derive_seed(session_salt_, {++session_counter_});
  return os.str();
}

void TunerService::expire_sessions() {
  const auto now = std::chrono::steady_clock::now();
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::lock_guard session_lock(it->second->mutex);
    if (now - it->second->last_used > options_.session_timeout) {
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

std::shared_ptr<TunerService::Session> TunerService::find_session(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  expire_sessions();
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  return it->second;
}

void TunerService::install_routes() {
  auto current_model = [this] {
    std::lock_guard lock(model_mutex_);
    return model_;
  };

  server_->Get("/api/model", [current_model](const httplib::Request&, httplib::Response& res) {
    const auto model = current_model();
    if (!model) return send_error(res, 503, "no checkpoint loaded");
    const auto counts = model->parameter_counts();
    json body = {{"arch",
                  {{"channels", model->arch.channels},
                   {"num_resblocks", model->arch.num_resblocks},
                   {"kernel_size", model->arch.kernel_size},
                   {"upscale_internal", model->arch.upscale_internal}}},
                 {"task", to_string(model->task)},
                 {"level_range", {model->range.min, model->range.max}},
                 {"trained_levels", model->metadata.trained_levels},
                 {"parameters",
                  {{"head", counts.head},
                   {"tail", counts.tail},
                   {"meta_blocks", counts.resblock_meta},
                   {"total", counts.total}}},
                 {"estimator", model->estimator.has_value()}};
    res.set_content(body.dump(), "application/json");
  });

  server_->Post("/api/session", [this, current_model](const httplib::Request& req, httplib::Response& res) {
    const auto model = current_model();
    if (!model) return send_error(res, 503, "no checkpoint loaded");
    const auto bytes = upload_part(req, "image");
    if (!bytes) return send_error(res, 400, "missing 'image' upload");
    if (bytes->size() > options_.max_upload_bytes) return send_error(res, 413, "image exceeds upload limit");
    auto image = decode_upload(*bytes);
    if (!image) return send_error(res, 415, "image is not a readable PNG");

    auto session = std::make_shared<Session>();
    session->image = *image;
    session->last_used = std::chrono::steady_clock::now();
    if (const auto ref = upload_part(req, "reference")) {
      auto reference = decode_upload(*ref);
      if (!reference) return send_error(res, 415, "reference is not a readable PNG");
      if (reference->shape() != image->shape()) return send_error(res, 400, "reference size differs from image");
      session->reference = *reference;
    }

    json body = {{"width", image->dim(2)}, {"height", image->dim(1)}};
    if (model->estimator && image->dim(1) >= EstimatorNet::kInputSize &&
        image->dim(2) >= EstimatorNet::kInputSize) {
      const double estimate = estimate_level(*model->estimator, *image);
      if (std::isfinite(estimate)) body["estimated_level"] = estimate;
    }
    std::string id;
    {
      std::lock_guard lock(sessions_mutex_);
      expire_sessions();
      id = new_session_id();
      sessions_[id] = session;
    }
    body["session_id"] = id;
    res.set_content(body.dump(), "application/json");
  });

  server_->Get("/api/restore", [this, current_model](const httplib::Request& req, httplib::Response& res) {
    const auto model = current_model();
    if (!model) return send_error(res, 503, "no checkpoint loaded");
    if (!req.has_param("session") || !req.has_param("level")) {
      return send_error(res, 400, "restore needs 'session' and 'level'");
    }
    double level = 0.0;
    try {
      std::size_t used = 0;
      const auto text = req.get_param_value("level");
      level = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      return send_error(res, 400, "level is not a number");
    }
    if (!std::isfinite(level)) return send_error(res, 400, "level must be finite");
    const double c = model->conditioning(level);
    if (!std::isfinite(c)) return send_error(res, 400, "level must be finite");
    const auto session = find_session(req.get_param_value("session"));
    if (!session) return send_error(res, 404, "unknown session");

    const std::int64_t key = quantize_conditioning(c);
    std::shared_ptr<const std::string> png;
    double restored_psnr = std::numeric_limits<double>::quiet_NaN();
    {
      std::lock_guard lock(session->mutex);
      session->last_used = std::chrono::steady_clock::now();
      if (auto it = session->restored.find(key); it != session->restored.end()) {
        png = it->second;
        session->restore_order.remove(key);
        session->restore_order.push_front(key);
        if (auto p = session->restored_psnr.find(key); p != session->restored_psnr.end()) restored_psnr = p->second;
      }
    }
    if (!png) {
      const auto net = weights_.get(*model, key);
      const Tensor restored = net->run(session->image);
      const auto encoded = encode_png(restored);
      auto fresh = std::make_shared<const std::string>(encoded.begin(), encoded.end());
      std::lock_guard lock(session->mutex);
      if (auto it = session->restored.find(key); it != session->restored.end()) {
        png = it->second;
      } else {
        png = fresh;
        session->restored[key] = png;
        session->restore_order.push_front(key);
        if (session->reference) {
          // Scored on the 8-bit image actually sent to the client.
          restored_psnr = psnr(*session->reference, decode_png({encoded.data(), encoded.size()}));
          session->restored_psnr[key] = restored_psnr;
        }
        while (session->restore_order.size() > options_.restore_cache_per_session) {
          session->restored.erase(session->restore_order.back());
          session->restored_psnr.erase(session->restore_order.back());
          session->restore_order.pop_back();
        }
      }
      if (auto p = session->restored_psnr.find(key); p != session->restored_psnr.end()) restored_psnr = p->second;
    }
    res.set_header("X-Restore-Level", std::to_string(level));
    res.set_header("X-Restore-C", std::to_string(static_cast<double>(key) / 1000.0));
    if (!std::isnan(restored_psnr)) {
      std::ostringstream os;
      os << std::setprecision(17) << finite_psnr(restored_psnr);
      res.set_header("X-Restore-PSNR", os.str());
    }
    res.set_content(*png, "image/png");
  });

  if (!options_.static_dir.empty() && std::filesystem::is_directory(options_.static_dir)) {
    server_->set_mount_point("/", options_.static_dir.string());
  }
}

}  // namespace hyperrestore
