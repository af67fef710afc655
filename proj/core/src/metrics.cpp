#include "tomo/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tomo/error.hpp"

namespace tomo {

namespace {

void check_shapes(const GrayImage& a, const GrayImage& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("image shapes differ: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

double power(double base, double exponent) {
  if (exponent == 0.0) return 1.0;
  if (exponent == 1.0) return base;
  return std::pow(base, exponent);
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const int half = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& x : w) x /= total;
  return w;
}

// Weighted window sums over every fully contained window, separably.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t rows, std::size_t cols,
                                 const std::vector<double>& w) {
  const std::size_t n = w.size();
  const std::size_t out_rows = rows - n + 1, out_cols = cols - n + 1;
  std::vector<double> horizontal(rows * out_cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * src[r * cols + c + k];
      horizontal[r * out_cols + c] = acc;
    }
  }
  std::vector<double> out(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * horizontal[(r + k) * out_cols + c];
      out[r * out_cols + c] = acc;
    }
  }
  return out;
}

}  // namespace

SsimParams SsimParams::defaults(double peak) {
  SsimParams p;
  p.m1 = (0.01 * peak) * (0.01 * peak);
  p.m2 = (0.03 * peak) * (0.03 * peak);
  p.m3 = p.m2 / 2.0;
  return p;
}

void SsimParams::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) throw ConfigError("SSIM exponents must be >= 0");
  if (!(m1 > 0.0) || !(m2 > 0.0) || !(m3 > 0.0)) throw ConfigError("SSIM constants must be positive");
  if (window < 1 || window % 2 == 0) throw ConfigError("SSIM window must be a positive odd size");
  if (!(window_sigma > 0.0)) throw ConfigError("SSIM window sigma must be positive");
}

bool MetricReport::psnr_infinite() const { return std::isinf(psnr); }

double mse(const GrayImage& truth, const GrayImage& estimate) {
  check_shapes(truth, estimate);
  if (truth.size() == 0) return 0.0;
  const auto a = truth.pixels();
  const auto b = estimate.pixels();
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total / static_cast<double>(a.size());
}

double rmse(const GrayImage& truth, const GrayImage& estimate) { return std::sqrt(mse(truth, estimate)); }

double ssim(const GrayImage& truth, const GrayImage& estimate, const SsimParams& params) {
  check_shapes(truth, estimate);
  params.validate();
  const auto n = static_cast<std::size_t>(params.window);
  const std::size_t rows = truth.rows(), cols = truth.cols();
  if (rows < n || cols < n) {
    throw ShapeError("image " + std::to_string(rows) + "x" + std::to_string(cols) + " is smaller than the " +
                     std::to_string(n) + "x" + std::to_string(n) + " SSIM window");
  }

  const auto w = gaussian_kernel(params.window, params.window_sigma);
  const auto a = truth.pixels();
  const auto b = estimate.pixels();
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = filter_valid(x, rows, cols, w);
  const auto mu_y = filter_valid(y, rows, cols, w);
  const auto e_xx = filter_valid(xx, rows, cols, w);
  const auto e_yy = filter_valid(yy, rows, cols, w);
  const auto e_xy = filter_valid(xy, rows, cols, w);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double var_x = std::max(0.0, e_xx[i] - mu_x[i] * mu_x[i]);
    const double var_y = std::max(0.0, e_yy[i] - mu_y[i] * mu_y[i]);
    const double cov = e_xy[i] - mu_x[i] * mu_y[i];
    const double sd_x = std::sqrt(var_x), sd_y = std::sqrt(var_y);

    const double l = (2.0 * mu_x[i] * mu_y[i] + params.m1) / (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + params.m1);
    const double p = (2.0 * sd_x * sd_y + params.m2) / (var_x + var_y + params.m2);
    const double s = (cov + params.m3) / (sd_x * sd_y + params.m3);
    total += power(l, params.alpha) * power(p, params.beta) * power(s, params.gamma);
  }
  return total / static_cast<double>(mu_x.size());
}

double psnr(const GrayImage& truth, const GrayImage& estimate, double peakval) {
  if (!(peakval > 0.0)) throw ConfigError("peakval must be positive");
  const double m = mse(truth, estimate);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peakval * peakval / m);
}

MetricReport evaluate(const GrayImage& truth, const GrayImage& estimate, double peakval) {
  MetricReport report;
  report.peakval = peakval;
  report.rmse = rmse(truth, estimate);
  report.ssim = ssim(truth, estimate, SsimParams::defaults(peakval));
  report.psnr = psnr(truth, estimate, peakval);
  return report;
}

}  // namespace tomo
