#include "hyperrestore/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace hyperrestore {

namespace {

void require_images(const Tensor& a, const Tensor& b, const char* metric) {
  if (a.shape() != b.shape()) {
    throw ContractViolation(std::string(metric) + ": shape mismatch " + shape_to_string(a.shape()) +
                            " vs " + shape_to_string(b.shape()));
  }
  if (a.rank() != 3) {
    throw ContractViolation(std::string(metric) + " expects CxHxW images, got " + shape_to_string(a.shape()));
  }
}

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-(d * d) / (2.0 * kWindowSigma * kWindowSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Separable 'valid' filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t ow = w - kWindow + 1;
  const std::size_t oh = h - kWindow + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += g[t] * plane[y * w + x + t];
      rows[y * ow + x] = s;
    }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += g[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr(const Tensor& reference, const Tensor& test) {
  require_images(reference, test, "psnr");
  auto a = reference.data();
  auto b = test.data();
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    total += d * d;
  }
  const double mse = total / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& reference, const Tensor& test) {
  require_images(reference, test, "ssim");
  const std::size_t c = reference.dim(0);
  const std::size_t h = reference.dim(1);
  const std::size_t w = reference.dim(2);
  if (h < kWindow || w < kWindow) {
    throw ContractViolation("ssim: image " + shape_to_string(reference.shape()) + " smaller than the 11x11 window");
  }
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto g = gaussian_window();
  const std::size_t plane = h * w;
  auto a = reference.data();
  auto b = test.data();

  double channel_total = 0.0;
  std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) {
      x[i] = a[ch * plane + i];
      y[i] = b[ch * plane + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g);
    const auto my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g);
    const auto syy = filter_valid(yy, h, w, g);
    const auto sxy = filter_valid(xy, h, w, g);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
      const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
      total += num / den;
    }
    channel_total += total / static_cast<double>(mx.size());
  }
  return channel_total / static_cast<double>(c);
}

QualityReport QualityReport::from_images(std::vector<ImageQuality> per_image) {
  QualityReport report;
  report.per_image = std::move(per_image);
  if (report.per_image.empty()) return report;
  double p = 0.0;
  double s = 0.0;
  for (const auto& q : report.per_image) {
    p += q.psnr_db;
    s += q.ssim;
  }
  const double n = static_cast<double>(report.per_image.size());
  report.psnr_db = p / n;
  report.ssim = s / n;
  return report;
}

double finite_psnr(double psnr_db) {
  return std::isinf(psnr_db) && psnr_db > 0 ? kPsnrSentinelDb : psnr_db;
}

void write_report_lines(std::ostream& out, const QualityReport& report, const std::string& tag) {
  for (const auto& q : report.per_image) {
    nlohmann::json line = {{"record", "image"}, {"tag", tag}, {"id", q.id},
                           {"psnr_db", finite_psnr(q.psnr_db)}, {"ssim", q.ssim}};
    out << line.dump() << '\n';
  }
  nlohmann::json summary = {{"record", "summary"}, {"tag", tag}, {"images", report.per_image.size()},
                            {"psnr_db", finite_psnr(report.psnr_db)}, {"ssim", report.ssim}};
  out << summary.dump() << '\n';
}

}  // namespace hyperrestore
