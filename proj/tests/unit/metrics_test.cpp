#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "relief/differential.hpp"
#include "relief/error.hpp"
#include "relief/metrics.hpp"
#include "relief/synthetic.hpp"

namespace relief {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

DepthMap with_offset(const DepthMap& d, double c, double scale = 1.0) {
  Grid<double> g = d.values();
  for (auto& v : g.data()) v = v * scale + c;
  return DepthMap(g, d.mask());
}

NormalMap tilted_about_x(std::size_t w, std::size_t h, double deg) {
  return NormalMap(Grid<Vec3>(w, h, Vec3{0, -std::sin(deg * kDeg), std::cos(deg * kDeg)}));
}

// 16x16 fixtures with a scikit-image reference SSIM (Gaussian weights,
// sigma 1.5, population covariance, data range 255).
Grid<double> fixture_a() {
  Grid<double> g(16, 16);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) g(x, y) = static_cast<double>((x * 37 + y * 91) % 256);
  return g;
}

Grid<double> fixture_b() {
  Grid<double> g(16, 16);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) g(x, y) = static_cast<double>((x * x + 3 * y * y + 7 * x * y) % 256);
  return g;
}

TEST(MeanDepthErrorTest, IdenticalIsZero) {
  std::mt19937_64 rng(61);
  const DepthMap d = oracle::random_depth(rng, 8, 8, 1.0, 100.0);
  EXPECT_EQ(mean_depth_error(d, d), 0.0);
}

TEST(MeanDepthErrorTest, ConstantOffsetOverMaxHundred) {
  Grid<double> g(11, 11);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i % 101);
  g[0] = 100.0;
  const DepthMap gt(g);
  EXPECT_NEAR(mean_depth_error(with_offset(gt, 5.0), gt), 5.0, 1e-12);
}

TEST(MeanDepthErrorTest, NonPositiveMaximumIsUndefined) {
  const DepthMap zero(Grid<double>(4, 4, 0.0));
  EXPECT_THROW((void)mean_depth_error(zero, zero), UndefinedMetricError);
  const DepthMap neg(Grid<double>(4, 4, -3.0));
  EXPECT_THROW((void)mean_depth_error(neg, neg), UndefinedMetricError);
}

TEST(MeanDepthErrorTest, MatchesStraightLoop) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap a = oracle::random_depth(rng, 8, 8, 0.0, 50.0);
    const DepthMap b = oracle::random_depth(rng, 8, 8, 0.0, 50.0);
    EXPECT_NEAR(mean_depth_error(a, b), oracle::mean_depth_error(a, b), 1e-10);
  }
}

TEST(MeanDepthErrorTest, MaskRestrictsPixels) {
  Grid<double> gt(2, 2, std::vector<double>{10, 10, 10, 1000});
  Grid<double> pr(2, 2, std::vector<double>{11, 11, 11, 0});
  const Mask m(2, 2, std::vector<std::uint8_t>{1, 1, 1, 0});
  EXPECT_DOUBLE_EQ(mean_depth_error(DepthMap(pr), DepthMap(gt), &m), 10.0);
}

TEST(MeanDepthErrorProperty, InvariantUnderCommonScaling) {
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> s(0.01, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap a = oracle::random_depth(rng, 8, 8, 0.0, 50.0);
    const DepthMap b = oracle::random_depth(rng, 8, 8, 0.0, 50.0);
    const double k = s(rng);
    EXPECT_NEAR(mean_depth_error(with_offset(a, 0, k), with_offset(b, 0, k)), mean_depth_error(a, b),
                1e-12 * mean_depth_error(a, b));
  }
}

TEST(PsnrTest, IdenticalIsInfiniteAndCapped) {
  const Grid<double> a = fixture_a();
  const double v = psnr(a, a);
  EXPECT_TRUE(std::isinf(v));
  EXPECT_EQ(cap_psnr(v), 99.0);
  EXPECT_EQ(cap_psnr(42.5), 42.5);
}

TEST(PsnrTest, UniformDifferenceOfSixteen) {
  const Grid<double> a = fixture_a();
  Grid<double> b = a;
  for (auto& v : b.data()) v += 16.0;
  const double expected = 10.0 * std::log10(255.0 * 255.0 / 256.0);
  EXPECT_NEAR(psnr(a, b), expected, 1e-12);
  EXPECT_NEAR(psnr(a, b), 24.048, 5e-4);
}

TEST(PsnrTest, TinyDifferenceIsFiniteNotCapped) {
  const Grid<double> a = fixture_a();
  Grid<double> b = a;
  b[5] = std::nextafter(b[5], 1e9);
  EXPECT_TRUE(std::isfinite(psnr(a, b)));
  EXPECT_GT(cap_psnr(psnr(a, b)), 99.0);
}

TEST(PsnrTest, MatchesStraightLoop) {
  std::mt19937_64 rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_grid(rng, 16, 16, 0, 255);
    const auto b = oracle::random_grid(rng, 16, 16, 0, 255);
    EXPECT_NEAR(psnr(a, b), oracle::psnr(a, b, 255.0), 1e-10);
  }
}

TEST(SsimTest, IdenticalIsOne) {
  const Grid<double> a = fixture_a();
  EXPECT_DOUBLE_EQ(ssim(a, a), 1.0);
}

TEST(SsimTest, InvertedBinaryImageIsNegative) {
  std::mt19937_64 rng(65);
  std::bernoulli_distribution coin(0.5);
  Grid<double> a(16, 16), b(16, 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = coin(rng) ? 255.0 : 0.0;
    b[i] = 255.0 - a[i];
  }
  EXPECT_LT(ssim(a, b), 0.0);
}

TEST(SsimTest, RegressionAgainstReferenceImplementation) {
  const Grid<double> a = fixture_a();
  const Grid<double> b = fixture_b();
  EXPECT_NEAR(ssim(a, b), -0.019870726623856312, 1e-12);
  Grid<double> c = a;
  for (auto& v : c.data()) v = 0.5 * v + 40.0;
  EXPECT_NEAR(ssim(a, c), 0.7884240982251814, 1e-12);
}

TEST(SsimTest, MatchesDirectWindowSums) {
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = oracle::random_grid(rng, 16, 16, 0, 255);
    const auto b = oracle::random_grid(rng, 16, 16, 0, 255);
    EXPECT_NEAR(ssim(a, b), oracle::ssim(a, b), 1e-6);
  }
}

TEST(SsimTest, Symmetric) {
  EXPECT_NEAR(ssim(fixture_a(), fixture_b()), ssim(fixture_b(), fixture_a()), 1e-14);
}

TEST(SsimTest, TooSmallForWindowThrows) {
  EXPECT_THROW((void)ssim(Grid<double>(10, 20), Grid<double>(10, 20)), DimensionError);
}

TEST(SsimTest, MaskSelectsWindowCentres) {
  const Grid<double> a = fixture_a();
  Grid<double> b = a;
  b(0, 0) = 200.0;  // only windows touching the top-left corner see this
  Mask centres(16, 16, 0);
  centres(10, 10) = 1;
  EXPECT_DOUBLE_EQ(ssim(a, b, &centres), 1.0);
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(AngularErrorTest, IdenticalIsExactlyZero) {
  std::mt19937_64 rng(67);
  const NormalMap n = oracle::random_normals(rng, 16, 16);
  EXPECT_EQ(normal_angular_error(n, n), 0.0);
}

TEST(AngularErrorTest, ThirtyDegreeTilt) {
  const NormalMap up(Grid<Vec3>(8, 8, Vec3{0, 0, 1}));
  EXPECT_NEAR(normal_angular_error(tilted_about_x(8, 8, 30.0), up), 30.0, 1e-9);
}

TEST(AngularErrorTest, MatchesStraightLoopAndIsSymmetric) {
  std::mt19937_64 rng(68);
  for (int trial = 0; trial < 20; ++trial) {
    const NormalMap a = oracle::random_normals(rng, 16, 16);
    const NormalMap b = oracle::random_normals(rng, 16, 16);
    EXPECT_NEAR(normal_angular_error(a, b), oracle::angular_error_deg(a, b), 1e-10);
    EXPECT_EQ(normal_angular_error(a, b), normal_angular_error(b, a));
  }
}

TEST(ThresholdFractionTest, IdenticalIsHundred) {
  std::mt19937_64 rng(69);
  const NormalMap n = oracle::random_normals(rng, 8, 8);
  for (double t : {0.001, 11.25, 22.5, 90.0}) EXPECT_EQ(angular_threshold_fraction(n, n, t), 100.0);
}

TEST(ThresholdFractionTest, UniformTiltAboveThreshold) {
  const NormalMap up(Grid<Vec3>(8, 8, Vec3{0, 0, 1}));
  EXPECT_EQ(angular_threshold_fraction(tilted_about_x(8, 8, 30.0), up, 22.5), 0.0);
}

TEST(ThresholdFractionTest, HalfSplit) {
  Grid<Vec3> g(8, 8, Vec3{0, 0, 1});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 8; ++x) g(x, y) = tilted_about_x(2, 2, 15.0)(0, 0);
  const NormalMap up(Grid<Vec3>(8, 8, Vec3{0, 0, 1}));
  EXPECT_EQ(angular_threshold_fraction(NormalMap(g), up, 11.25), 50.0);
}

TEST(ThresholdFractionTest, MatchesStraightLoop) {
  std::mt19937_64 rng(70);
  for (int trial = 0; trial < 20; ++trial) {
    const NormalMap a = oracle::random_normals(rng, 16, 16, 0.6);
    const NormalMap b = oracle::random_normals(rng, 16, 16, 0.6);
    for (double t : {11.25, 22.5})
      EXPECT_NEAR(angular_threshold_fraction(a, b, t), oracle::threshold_fraction(a, b, t), 1e-10);
  }
}

TEST(CompositeLossTest, PerfectPredictionIsExactlyMinusOne) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const DepthMap d = oracle::random_depth(rng, 12, 9, -30.0, 30.0);
    EXPECT_EQ(composite_loss(d, d), -1.0);
    EXPECT_EQ(composite_loss(d, d, 0.0), -1.0);
  }
}

TEST(CompositeLossTest, FlatVersusTiltedPlane) {
  const double slope = 0.75;
  const DepthMap flat(Grid<double>(9, 9, 3.0));
  const DepthMap tilted = synthetic::plane(9, 9, slope, 0.0, 3.0);
  EXPECT_NEAR(composite_loss(flat, tilted, 0.0), -1.0 / std::sqrt(1 + slope * slope), 1e-14);
}

TEST(CompositeLossTest, DefaultAlpha) {
  EXPECT_EQ(kDefaultLossAlpha, 0.1);
  const DepthMap a(Grid<double>(4, 4, 0.0));
  const DepthMap b(Grid<double>(4, 4, 2.0));
  EXPECT_DOUBLE_EQ(composite_loss(a, b), 0.1 * 2.0 - 1.0);
}

TEST(CompositeLossTest, MatchesStraightLoop) {
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap a = oracle::random_depth(rng, 16, 16, 0.0, 20.0);
    const DepthMap b = oracle::random_depth(rng, 16, 16, 0.0, 20.0);
    EXPECT_NEAR(composite_loss(a, b, 0.1), oracle::composite_loss(a, b, 0.1), 1e-10);
  }
}

TEST(EvaluatePairTest, PerfectRow) {
  std::mt19937_64 rng(73);
  const DepthMap gt = oracle::random_smooth_depth(rng, 32, 32, 50.0);
  const MetricRow r = evaluate_pair(gt, gt, "x");
  EXPECT_EQ(r.id, "x");
  EXPECT_EQ(r.eps_d, 0.0);
  EXPECT_EQ(r.depth_psnr, 99.0);
  EXPECT_EQ(r.depth_ssim, 1.0);
  EXPECT_EQ(r.eps_n, 0.0);
  EXPECT_EQ(r.normal_psnr, 99.0);
  EXPECT_EQ(r.normal_ssim, 1.0);
  EXPECT_EQ(r.frac_11_25, 100.0);
  EXPECT_EQ(r.frac_22_5, 100.0);
}

TEST(EvaluatePairTest, ComponentsMatchOracles) {
  std::mt19937_64 rng(74);
  const DepthMap gt = oracle::random_smooth_depth(rng, 24, 20, 50.0);
  const DepthMap pred = with_offset(oracle::random_smooth_depth(rng, 24, 20, 40.0), 2.0);
  const MetricRow r = evaluate_pair(pred, gt);
  const auto np = depth_to_normal(pred);
  const auto ng = depth_to_normal(gt);
  EXPECT_NEAR(r.eps_d, oracle::mean_depth_error(pred, gt), 1e-10);
  EXPECT_NEAR(r.eps_n, oracle::angular_error_deg(np, ng), 1e-10);
  EXPECT_NEAR(r.frac_22_5, oracle::threshold_fraction(np, ng, 22.5), 1e-10);
  EXPECT_NEAR(r.depth_psnr, oracle::psnr(normalize_depth_255(pred), normalize_depth_255(gt), 255), 1e-10);
  EXPECT_NEAR(r.depth_ssim, oracle::ssim(normalize_depth_255(pred), normalize_depth_255(gt)), 1e-6);
  const auto cp = normal_channels_255(np);
  const auto cg = normal_channels_255(ng);
  double ssim_sum = 0;
  for (int c = 0; c < 3; ++c) ssim_sum += oracle::ssim(cp[c], cg[c]);
  EXPECT_NEAR(r.normal_ssim, ssim_sum / 3, 1e-6);
  // Pooled over channels: mean of the three per-channel MSEs.
  double mse = 0;
  for (int c = 0; c < 3; ++c) mse += std::pow(10.0, -oracle::psnr(cp[c], cg[c], 255) / 10) * 255 * 255;
  EXPECT_NEAR(r.normal_psnr, 10 * std::log10(255.0 * 255.0 / (mse / 3)), 1e-9);
}

TEST(EvaluatePairTest, ShapeMismatchThrows) {
  EXPECT_THROW((void)evaluate_pair(DepthMap(Grid<double>(16, 16, 1.0)), DepthMap(Grid<double>(16, 15, 1.0))),
               DimensionError);
}

TEST(NormalizeDepthTest, MinMaxOntoByteRange) {
  const DepthMap d(Grid<double>(2, 2, std::vector<double>{10, 20, 15, 12.5}));
  const auto n = normalize_depth_255(d);
  EXPECT_EQ(n[0], 0.0);
  EXPECT_EQ(n[1], 255.0);
  EXPECT_DOUBLE_EQ(n[2], 127.5);
  EXPECT_DOUBLE_EQ(n[3], 63.75);
  const auto flat = normalize_depth_255(DepthMap(Grid<double>(2, 2, 5.0)));
  for (double v : flat.data()) EXPECT_EQ(v, 0.0);
}

TEST(AggregateTest, ColumnMeans) {
  MetricRow a{"a", 1, 2, 0.5, 4, 5, 0.25, 10, 20};
  MetricRow b{"b", 3, 4, 0.7, 8, 7, 0.75, 30, 60};
  const MetricRow m = aggregate({a, b});
  EXPECT_EQ(m.id, "__aggregate__");
  EXPECT_DOUBLE_EQ(m.eps_d, 2);
  EXPECT_DOUBLE_EQ(m.depth_psnr, 3);
  EXPECT_DOUBLE_EQ(m.depth_ssim, 0.6);
  EXPECT_DOUBLE_EQ(m.eps_n, 6);
  EXPECT_DOUBLE_EQ(m.normal_psnr, 6);
  EXPECT_DOUBLE_EQ(m.normal_ssim, 0.5);
  EXPECT_DOUBLE_EQ(m.frac_11_25, 20);
  EXPECT_DOUBLE_EQ(m.frac_22_5, 40);
}

std::vector<MetricRow> three_methods() {
  return {
      {"A", 1, 30, 0.9, 5, 25, 0.8, 50, 80},
      {"B", 2, 20, 0.9, 10, 30, 0.7, 40, 80},
      {"C", 3, 10, 0.5, 1, 20, 0.6, 60, 90},
  };
}

TEST(MeanRanksTest, HandComputedDepthScheme) {
  // eps_d 1,2,3 | psnr 1,2,3 | ssim 1.5,1.5,3 | eps_n 2,3,1 | npsnr 2,1,3 | nssim 1,2,3
  const auto r = mean_ranks(three_methods(), RankScheme::depth);
  EXPECT_NEAR(r[0], 8.5 / 6, 1e-15);
  EXPECT_NEAR(r[1], 11.5 / 6, 1e-15);
  EXPECT_NEAR(r[2], 16.0 / 6, 1e-15);
}

TEST(MeanRanksTest, HandComputedNormalScheme) {
  // eps_n 2,3,1 | <11.25 2,3,1 | <22.5 2.5,2.5,1 | npsnr 2,1,3 | nssim 1,2,3
  const auto r = mean_ranks(three_methods(), RankScheme::normal);
  EXPECT_NEAR(r[0], 9.5 / 5, 1e-15);
  EXPECT_NEAR(r[1], 11.5 / 5, 1e-15);
  EXPECT_NEAR(r[2], 9.0 / 5, 1e-15);
}

TEST(MeanRanksProperty, InvariantUnderMonotoneColumnTransforms) {
  std::mt19937_64 rng(75);
  std::uniform_real_distribution<double> u(0.1, 100.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<MetricRow> rows(5);
    for (auto& r : rows) r = {"", u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const auto base = mean_ranks(rows, RankScheme::depth);
    auto t = rows;
    for (auto& r : t) {
      r.eps_d = std::log(r.eps_d) * 3 + 7;
      r.depth_ssim = std::exp(r.depth_ssim / 50);
      r.normal_psnr = r.normal_psnr * r.normal_psnr * r.normal_psnr;
    }
    EXPECT_EQ(mean_ranks(t, RankScheme::depth), base);
  }
}

TEST(MeanRanksProperty, RanksSumToTriangularNumber) {
  std::mt19937_64 rng(76);
  std::uniform_int_distribution<int> u(0, 3);  // frequent ties
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<MetricRow> rows(6);
    for (auto& r : rows) r = {"", double(u(rng)), double(u(rng)), double(u(rng)), double(u(rng)), double(u(rng)),
                              double(u(rng)), double(u(rng)), double(u(rng))};
    for (RankScheme s : {RankScheme::depth, RankScheme::normal}) {
      double sum = 0;
      for (double v : mean_ranks(rows, s)) sum += v;
      EXPECT_NEAR(sum, 21.0, 1e-12);
    }
  }
}

TEST(MeanRanksTest, DepthTableRanks) {
  const std::vector<MetricRow> rows = {
      {"da_v2", 16.415, 14.575, 0.715, 15.654, 21.855, 0.798, 0, 0},
      {"depth_pro", 73.558, 11.378, 0.625, 23.674, 21.149, 0.733, 0, 0},
      {"moge_v2", 68.961, 12.823, 0.693, 16.604, 21.344, 0.766, 0, 0},
      {"v1", 21.766, 14.840, 0.712, 16.213, 21.548, 0.783, 0, 0},
      {"initial", 19.766, 16.256, 0.742, 14.441, 22.582, 0.820, 0, 0},
      {"final", 14.025, 17.739, 0.789, 14.327, 22.602, 0.821, 0, 0},
  };
  const auto r = mean_ranks(rows, RankScheme::depth);
  EXPECT_NEAR(r[1], 6.0, 1e-12);
  EXPECT_NEAR(r[2], 5.0, 1e-12);
  EXPECT_NEAR(r[3], 3.833, 5e-4);
  EXPECT_NEAR(r[5], 1.0, 1e-12);
  // The listed values put da_v2 second on eps_d; ranks follow the values.
  EXPECT_NEAR(r[0], 3.0, 1e-12);
  EXPECT_NEAR(r[4], 13.0 / 6, 1e-12);
}

TEST(MeanRanksTest, NormalTableRanks) {
  const std::vector<MetricRow> rows = {
      {"genpercept", 0, 0, 0, 29.033, 20.583, 0.788, 9.831, 31.961},
      {"dsine", 0, 0, 0, 22.919, 18.387, 0.779, 17.545, 58.818},
      {"lotus", 0, 0, 0, 27.374, 20.221, 0.793, 11.987, 39.636},
      {"stable_normal", 0, 0, 0, 21.145, 20.147, 0.767, 30.116, 76.129},
      {"marigold_e2e", 0, 0, 0, 17.685, 19.532, 0.788, 38.363, 76.909},
      {"v1_normal", 0, 0, 0, 17.510, 20.816, 0.773, 41.181, 73.792},
      {"initial", 0, 0, 0, 14.441, 22.582, 0.820, 51.064, 86.532},
      {"final", 0, 0, 0, 14.327, 22.602, 0.821, 52.207, 85.714},
  };
  const auto r = mean_ranks(rows, RankScheme::normal);
  EXPECT_NEAR(r[1], 6.4, 1e-12);
  EXPECT_NEAR(r[2], 5.8, 1e-12);
  EXPECT_NEAR(r[3], 5.6, 1e-12);
  EXPECT_NEAR(r[5], 4.2, 1e-12);
  EXPECT_NEAR(r[6], 1.8, 1e-12);
  EXPECT_NEAR(r[7], 1.2, 1e-12);
  // The 0.788 SSIM tie shares rank 3.5 between these two.
  EXPECT_NEAR(r[0], 6.5, 1e-12);
  EXPECT_NEAR(r[4], 4.5, 1e-12);
}

TEST(RankSchemeTest, Parse) {
  EXPECT_EQ(parse_rank_scheme("depth"), RankScheme::depth);
  EXPECT_EQ(parse_rank_scheme("normal"), RankScheme::normal);
  EXPECT_THROW((void)parse_rank_scheme("both"), ConfigError);
}

TEST(ReportTest, CsvLayout) {
  std::vector<MethodReport> reports(2);
  reports[0].name = "m1";
  reports[0].rows = {{"img", 1, 2, 0.5, 4, 5, 0.25, 10, 20}};
  reports[1].name = "m2";
  reports[1].rows = {{"img", 2, 1, 0.25, 5, 4, 0.125, 5, 10}};
  finalize_reports(reports, RankScheme::depth);
  EXPECT_EQ(reports[0].rank, 1.0);
  EXPECT_EQ(reports[1].rank, 2.0);
  std::ostringstream os;
  write_report_csv(os, reports);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "method,id,eps_d,depth_psnr,depth_ssim,eps_n,normal_psnr,normal_ssim,frac_11_25,frac_22_5,rank");
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].rfind("m1,img,", 0), 0u);
  EXPECT_EQ(lines[0].back(), ',');
  EXPECT_EQ(lines[1].rfind("m1,__aggregate__,", 0), 0u);
  EXPECT_EQ(lines[1].substr(lines[1].rfind(',') + 1), "1");

  const auto j = nlohmann::json::parse(report_json(reports, RankScheme::depth));
  ASSERT_TRUE(j.contains("methods"));
  EXPECT_EQ(j["methods"].size(), 2u);
}

}  // namespace
}  // namespace relief
