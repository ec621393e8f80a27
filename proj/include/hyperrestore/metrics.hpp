#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hyperrestore/tensor.hpp"

namespace hyperrestore {

/// Value written to report files in place of +infinity dB.
inline constexpr double kPsnrSentinelDb = 1e9;

/// 10 log10(1 / MSE) over all channels and pixels, peak 1.0. Identical inputs give +infinity.
double psnr(const Tensor& reference, const Tensor& test);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 1, valid window positions only, averaged over channels.
double ssim(const Tensor& reference, const Tensor& test);

struct ImageQuality {
  std::string id;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct QualityReport {
  double psnr_db = 0.0;  // arithmetic means of per_image
  double ssim = 0.0;
  std::vector<ImageQuality> per_image;

  static QualityReport from_images(std::vector<ImageQuality> per_image);
};

/// Serialization helper: +infinity becomes kPsnrSentinelDb.
double finite_psnr(double psnr_db);

/// Line-delimited JSON: one "image" record per entry then one "summary" record.
/// `tag` is copied into every record (e.g. the degradation level).
void write_report_lines(std::ostream& out, const QualityReport& report, const std::string& tag);

}  // namespace hyperrestore
