#include "relief/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>

#include "relief/differential.hpp"
#include "relief/error.hpp"

namespace relief {

namespace {

constexpr int kSsimRadius = 5;
constexpr int kSsimWindow = 2 * kSsimRadius + 1;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;
constexpr double kSsimRange = 255.0;

bool is_valid(const Mask* valid, std::size_t i) { return !valid || (*valid)[i] != 0; }

void check_mask(const Mask* valid, const auto& shape, const char* what) {
  if (valid) require_same_shape(*valid, shape, what);
}

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double t = k - kSsimRadius;
    taps[k] = std::exp(-t * t / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Gaussian-weighted window means for every window fully inside the image.
/// `value(i)` yields the sample at flat index i.
template <typename Value>
Grid<double> window_means(std::size_t w, std::size_t h, Value value) {
  static const auto taps = gaussian_taps();
  const std::size_t ow = w - (kSsimWindow - 1);
  const std::size_t oh = h - (kSsimWindow - 1);
  Grid<double> horizontal(ow, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * value(y * w + x + k);
      horizontal(x, y) = s;
    }
  }
  Grid<double> out(ow, oh);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * horizontal(x, y + k);
      out(x, y) = s;
    }
  }
  return out;
}

Mask combined_mask(const DepthMap& a, const DepthMap& b) {
  Mask m(a.width(), a.height(), 1);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (a.valid(i) && b.valid(i)) ? 1 : 0;
  return m;
}

}  // namespace

double mean_depth_error(const DepthMap& pred, const DepthMap& gt, const Mask* valid) {
  require_same_shape(pred, gt, "mean_depth_error");
  check_mask(valid, gt, "mean_depth_error mask");
  double max_gt = -std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!is_valid(valid, i)) continue;
    max_gt = std::max(max_gt, gt.values()[i]);
    ++count;
  }
  if (count == 0 || !(max_gt > 0.0))
    throw UndefinedMetricError("mean_depth_error: ground-truth maximum must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (is_valid(valid, i)) sum += std::abs(pred.values()[i] - gt.values()[i]) / max_gt;
  return 100.0 * sum / static_cast<double>(count);
}

double psnr(const Grid<double>& a, const Grid<double>& b, double peak, const Mask* valid) {
  require_same_shape(a, b, "psnr");
  check_mask(valid, a, "psnr mask");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!is_valid(valid, i)) continue;
    const double d = a[i] - b[i];
    sum += d * d;
    ++count;
  }
  if (count == 0) throw UndefinedMetricError("psnr: no valid pixels");
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / (sum / static_cast<double>(count)));
}

double cap_psnr(double value) { return std::isinf(value) && value > 0 ? kPsnrCap : value; }

double ssim(const Grid<double>& a, const Grid<double>& b, const Mask* valid) {
  require_same_shape(a, b, "ssim");
  check_mask(valid, a, "ssim mask");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow)
    throw DimensionError("ssim: images must be at least 11x11");
  const std::size_t w = a.width();
  const std::size_t h = a.height();
  const Grid<double> mu_a = window_means(w, h, [&](std::size_t i) { return a[i]; });
  const Grid<double> mu_b = window_means(w, h, [&](std::size_t i) { return b[i]; });
  const Grid<double> e_aa = window_means(w, h, [&](std::size_t i) { return a[i] * a[i]; });
  const Grid<double> e_bb = window_means(w, h, [&](std::size_t i) { return b[i] * b[i]; });
  const Grid<double> e_ab = window_means(w, h, [&](std::size_t i) { return a[i] * b[i]; });

  const double c1 = (kSsimK1 * kSsimRange) * (kSsimK1 * kSsimRange);
  const double c2 = (kSsimK2 * kSsimRange) * (kSsimK2 * kSsimRange);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y < mu_a.height(); ++y) {
    for (std::size_t x = 0; x < mu_a.width(); ++x) {
      if (!is_valid(valid, (y + kSsimRadius) * w + x + kSsimRadius)) continue;
      const double ma = mu_a(x, y);
      const double mb = mu_b(x, y);
      const double saa = e_aa(x, y) - ma * ma;
      const double sbb = e_bb(x, y) - mb * mb;
      const double sab = e_ab(x, y) - ma * mb;
      sum += ((2.0 * ma * mb + c1) * (2.0 * sab + c2)) /
             ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
      ++count;
    }
  }
  if (count == 0) throw UndefinedMetricError("ssim: no valid window centres");
  return sum / static_cast<double>(count);
}

double normal_angular_error(const NormalMap& pred, const NormalMap& gt, const Mask* valid) {
  require_same_shape(pred, gt, "normal_angular_error");
  check_mask(valid, gt, "normal_angular_error mask");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.vectors().size(); ++i) {
    if (!is_valid(valid, i)) continue;
    sum += angle_between_deg(pred[i], gt[i]);
    ++count;
  }
  if (count == 0) throw UndefinedMetricError("normal_angular_error: no valid pixels");
  return sum / static_cast<double>(count);
}

double angular_threshold_fraction(const NormalMap& pred, const NormalMap& gt, double threshold_deg,
                                  const Mask* valid) {
  require_same_shape(pred, gt, "angular_threshold_fraction");
  check_mask(valid, gt, "angular_threshold_fraction mask");
  if (!(threshold_deg > 0.0)) throw ConfigError("angular threshold must be positive");
  std::size_t below = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.vectors().size(); ++i) {
    if (!is_valid(valid, i)) continue;
    if (angle_between_deg(pred[i], gt[i]) < threshold_deg) ++below;
    ++count;
  }
  if (count == 0) throw UndefinedMetricError("angular_threshold_fraction: no valid pixels");
  return 100.0 * static_cast<double>(below) / static_cast<double>(count);
}

double composite_loss(const DepthMap& pred, const DepthMap& gt, double alpha) {
  require_same_shape(pred, gt, "composite_loss");
  const NormalMap n_pred = depth_to_normal(pred);
  const NormalMap n_gt = depth_to_normal(gt);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred.valid(i) || !gt.valid(i)) continue;
    sum += alpha * std::abs(pred.values()[i] - gt.values()[i]) - cosine_between(n_pred[i], n_gt[i]);
    ++count;
  }
  if (count == 0) throw UndefinedMetricError("composite_loss: no valid pixels");
  return sum / static_cast<double>(count);
}

Grid<double> normalize_depth_255(const DepthMap& depth) {
  Grid<double> out(depth.width(), depth.height(), 0.0);
  const double lo = depth.min_value();
  const double span = depth.thickness();
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (depth.valid(i)) out[i] = (depth.values()[i] - lo) / span * 255.0;
  return out;
}

std::array<Grid<double>, 3> normal_channels_255(const NormalMap& normals) {
  const EncodedNormalMap enc = encode_normals(normals);
  std::array<Grid<double>, 3> out;
  for (auto& g : out) g = Grid<double>(normals.width(), normals.height());
  for (std::size_t i = 0; i < out[0].size(); ++i) {
    out[0][i] = enc[i].x * 255.0;
    out[1][i] = enc[i].y * 255.0;
    out[2][i] = enc[i].z * 255.0;
  }
  return out;
}

MetricRow evaluate_pair(const DepthMap& pred, const DepthMap& gt, std::string id) {
  require_same_shape(pred, gt, "evaluate_pair");
  const Mask valid = combined_mask(pred, gt);
  MetricRow row;
  row.id = std::move(id);
  row.eps_d = mean_depth_error(pred, gt, &valid);

  const Grid<double> za = normalize_depth_255(pred);
  const Grid<double> zb = normalize_depth_255(gt);
  row.depth_psnr = cap_psnr(psnr(za, zb, 255.0, &valid));
  row.depth_ssim = ssim(za, zb, &valid);

  const NormalMap na = depth_to_normal(pred);
  const NormalMap nb = depth_to_normal(gt);
  row.eps_n = normal_angular_error(na, nb, &valid);
  row.frac_11_25 = angular_threshold_fraction(na, nb, 11.25, &valid);
  row.frac_22_5 = angular_threshold_fraction(na, nb, 22.5, &valid);

  // PSNR pools the squared error of all three channels; SSIM is the mean of
  // the per-channel values.
  const auto ca = normal_channels_255(na);
  const auto cb = normal_channels_255(nb);
  double sq = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < ca[c].size(); ++i) {
      if (!valid[i]) continue;
      const double d = ca[c][i] - cb[c][i];
      sq += d * d;
      ++count;
    }
  }
  row.normal_psnr =
      sq == 0.0 ? kPsnrCap : 10.0 * std::log10(255.0 * 255.0 / (sq / static_cast<double>(count)));
  row.normal_ssim = (ssim(ca[0], cb[0], &valid) + ssim(ca[1], cb[1], &valid) +
                     ssim(ca[2], cb[2], &valid)) / 3.0;
  return row;
}

MetricRow aggregate(const std::vector<MetricRow>& rows, std::string id) {
  MetricRow out;
  out.id = std::move(id);
  if (rows.empty()) return out;
  for (const MetricRow& r : rows) {
    out.eps_d += r.eps_d;
    out.depth_psnr += r.depth_psnr;
    out.depth_ssim += r.depth_ssim;
    out.eps_n += r.eps_n;
    out.normal_psnr += r.normal_psnr;
    out.normal_ssim += r.normal_ssim;
    out.frac_11_25 += r.frac_11_25;
    out.frac_22_5 += r.frac_22_5;
  }
  const double n = static_cast<double>(rows.size());
  out.eps_d /= n;
  out.depth_psnr /= n;
  out.depth_ssim /= n;
  out.eps_n /= n;
  out.normal_psnr /= n;
  out.normal_ssim /= n;
  out.frac_11_25 /= n;
  out.frac_22_5 /= n;
  return out;
}

RankScheme parse_rank_scheme(std::string_view name) {
  if (name == "depth") return RankScheme::depth;
  if (name == "normal") return RankScheme::normal;
  throw ConfigError("unknown rank scheme '" + std::string(name) + "' (expected depth or normal)");
}

namespace {

struct RankedColumn {
  double MetricRow::*field;
  bool higher_is_better;
};

std::vector<RankedColumn> columns_for(RankScheme scheme) {
  if (scheme == RankScheme::depth) {
    return {{&MetricRow::eps_d, false},      {&MetricRow::depth_psnr, true},
            {&MetricRow::depth_ssim, true},  {&MetricRow::eps_n, false},
            {&MetricRow::normal_psnr, true}, {&MetricRow::normal_ssim, true}};
  }
  return {{&MetricRow::eps_n, false},
          {&MetricRow::frac_11_25, true},
          {&MetricRow::frac_22_5, true},
          {&MetricRow::normal_psnr, true},
          {&MetricRow::normal_ssim, true}};
}

}  // namespace

std::vector<double> mean_ranks(const std::vector<MetricRow>& methods, RankScheme scheme) {
  const std::size_t n = methods.size();
  std::vector<double> total(n, 0.0);
  const auto columns = columns_for(scheme);
  for (const RankedColumn& col : columns) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto score = [&](std::size_t i) {
      const double v = methods[i].*col.field;
      return col.higher_is_better ? -v : v;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score(a) < score(b); });
    for (std::size_t start = 0; start < n;) {
      std::size_t end = start + 1;
      while (end < n && score(order[end]) == score(order[start])) ++end;
      // Positions start..end-1 hold ranks start+1..end.
      const double shared = 0.5 * static_cast<double>(start + 1 + end);
      for (std::size_t k = start; k < end; ++k) total[order[k]] += shared;
      start = end;
    }
  }
  for (double& t : total) t /= static_cast<double>(columns.size());
  return total;
}

void finalize_reports(std::vector<MethodReport>& reports, RankScheme scheme) {
  std::vector<MetricRow> summaries;
  for (MethodReport& r : reports) {
    r.summary = aggregate(r.rows);
    summaries.push_back(r.summary);
  }
  const std::vector<double> ranks = mean_ranks(summaries, scheme);
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = ranks[i];
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row(std::ostream& out, const std::string& method, const MetricRow& r,
               const std::string& rank) {
  out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(method), csv_field(r.id),
                     r.eps_d, r.depth_psnr, r.depth_ssim, r.eps_n, r.normal_psnr, r.normal_ssim,
                     r.frac_11_25, r.frac_22_5, rank);
}

nlohmann::json row_json(const MetricRow& r) {
  return {{"id", r.id},
          {"eps_d", r.eps_d},
          {"depth_psnr", r.depth_psnr},
          {"depth_ssim", r.depth_ssim},
          {"eps_n", r.eps_n},
          {"normal_psnr", r.normal_psnr},
          {"normal_ssim", r.normal_ssim},
          {"frac_11_25", r.frac_11_25},
          {"frac_22_5", r.frac_22_5}};
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<MethodReport>& reports) {
  out << "method,id,eps_d,depth_psnr,depth_ssim,eps_n,normal_psnr,normal_ssim,frac_11_25,"
         "frac_22_5,rank\n";
  for (const MethodReport& rep : reports) {
    for (const MetricRow& row : rep.rows) write_row(out, rep.name, row, "");
    write_row(out, rep.name, rep.summary, fmt::format("{}", rep.rank));
  }
}

std::string report_json(const std::vector<MethodReport>& reports, RankScheme scheme) {
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodReport& rep : reports) {
    nlohmann::json rows = nlohmann::json::array();
    for (const MetricRow& row : rep.rows) rows.push_back(row_json(row));
    nlohmann::json summary = row_json(rep.summary);
    summary["rank"] = rep.rank;
    methods.push_back({{"name", rep.name}, {"aggregate", summary}, {"per_image", rows}});
  }
  const nlohmann::json doc = {{"rank_scheme", scheme == RankScheme::depth ? "depth" : "normal"},
                              {"methods", methods}};
  return doc.dump(2) + "\n";
}

}  // namespace relief
