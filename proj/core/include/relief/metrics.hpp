#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "relief/grid.hpp"
#include "relief/maps.hpp"

namespace relief {

/// Value reported in place of an infinite PSNR so tables stay numeric.
inline constexpr double kPsnrCap = 99.0;
inline constexpr double kDefaultLossAlpha = 0.1;

// Every metric takes an optional validity mask; nullptr means all pixels.

/// Mean |pred - gt| / max(gt) over valid pixels, in percent. Throws
/// UndefinedMetricError when max(gt) <= 0.
double mean_depth_error(const DepthMap& pred, const DepthMap& gt, const Mask* valid = nullptr);

/// 10 log10(peak^2 / MSE). Returns +inf when the inputs are identical.
double psnr(const Grid<double>& a, const Grid<double>& b, double peak = 255.0,
            const Mask* valid = nullptr);

/// Reports +inf as kPsnrCap; finite values pass through unchanged.
double cap_psnr(double value);

/// Mean SSIM over all 11x11 windows fully inside the image (Gaussian
/// window, sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255). With a mask, only
/// windows centred on valid pixels are averaged.
double ssim(const Grid<double>& a, const Grid<double>& b, const Mask* valid = nullptr);

/// Mean angle between corresponding normals, in degrees.
double normal_angular_error(const NormalMap& pred, const NormalMap& gt, const Mask* valid = nullptr);

/// Percentage of valid pixels whose angular error is strictly below
/// `threshold_deg`.
double angular_threshold_fraction(const NormalMap& pred, const NormalMap& gt, double threshold_deg,
                                  const Mask* valid = nullptr);

/// Mean over valid pixels of alpha * |d_pred - d_gt| - <n_pred, n_gt>, with
/// normals taken from each depth map by central differences. Equals -1 when
/// pred == gt.
double composite_loss(const DepthMap& pred, const DepthMap& gt, double alpha = kDefaultLossAlpha);

/// Per-image min-max normalization of valid depth onto [0, 255]; masked
/// pixels and constant maps map to 0.
Grid<double> normalize_depth_255(const DepthMap& depth);

/// Encoded normal channels scaled to [0, 255].
std::array<Grid<double>, 3> normal_channels_255(const NormalMap& normals);

struct MetricRow {
  std::string id;
  double eps_d = 0.0;        // percent
  double depth_psnr = 0.0;   // dB
  double depth_ssim = 0.0;
  double eps_n = 0.0;        // degrees
  double normal_psnr = 0.0;  // dB
  double normal_ssim = 0.0;
  double frac_11_25 = 0.0;   // percent
  double frac_22_5 = 0.0;    // percent
};

/// All eight metrics. Valid pixels are those valid in both maps; normals
/// come from depth_to_normal with central differences.
MetricRow evaluate_pair(const DepthMap& pred, const DepthMap& gt, std::string id = {});

/// Column means of `rows`.
MetricRow aggregate(const std::vector<MetricRow>& rows, std::string id = "__aggregate__");

enum class RankScheme {
  /// eps_d, depth PSNR, depth SSIM, eps_n, normal PSNR, normal SSIM.
  depth,
  /// eps_n, < 11.25 deg, < 22.5 deg, normal PSNR, normal SSIM.
  normal,
};

RankScheme parse_rank_scheme(std::string_view name);

/// Mean over the scheme's metrics of each method's rank (1 = best). Tied
/// values share the average of the ranks they span.
std::vector<double> mean_ranks(const std::vector<MetricRow>& methods, RankScheme scheme);

struct MethodReport {
  std::string name;
  std::vector<MetricRow> rows;
  MetricRow summary;
  double rank = 1.0;
};

/// Fills `summary` and `rank` of every report.
void finalize_reports(std::vector<MethodReport>& reports, RankScheme scheme);

/// Columns: method,id,eps_d,depth_psnr,depth_ssim,eps_n,normal_psnr,
/// normal_ssim,frac_11_25,frac_22_5,rank. Per-image rows leave rank empty;
/// the aggregate row of each method has id "__aggregate__".
void write_report_csv(std::ostream& out, const std::vector<MethodReport>& reports);
std::string report_json(const std::vector<MethodReport>& reports, RankScheme scheme);

}  // namespace relief
