#pragma once

#include "tomo/image.hpp"

namespace tomo {

/// Exponents, stabilising constants and Gaussian window for SSIM.
struct SsimParams {
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 1.0;
  double m1 = 1e-4;
  double m2 = 9e-4;
  double m3 = 4.5e-4;
  int window = 11;
  double window_sigma = 1.5;

  /// m1 = (0.01 peak)^2, m2 = (0.03 peak)^2, m3 = m2 / 2.
  static SsimParams defaults(double peak = 1.0);
  /// Throws ConfigError for negative exponents, non-positive constants or a
  /// window that is even or non-positive.
  void validate() const;
};

struct MetricReport {
  double rmse = 0.0;
  double ssim = 1.0;
  /// +infinity when the images are identical.
  double psnr = 0.0;
  double peakval = 1.0;

  bool psnr_infinite() const;
};

/// Throw ShapeError when the shapes differ.
double rmse(const GrayImage& truth, const GrayImage& estimate);
double mse(const GrayImage& truth, const GrayImage& estimate);

/// Mean over all fully contained windows of l^alpha p^beta s^gamma, where
/// l, p and s compare the windowed means, standard deviations and
/// covariance. Throws ShapeError when the image is smaller than the window.
double ssim(const GrayImage& truth, const GrayImage& estimate, const SsimParams& params = {});

/// 10 log10(peakval^2 / MSE); +infinity for identical images.
double psnr(const GrayImage& truth, const GrayImage& estimate, double peakval = 1.0);

MetricReport evaluate(const GrayImage& truth, const GrayImage& estimate, double peakval = 1.0);

}  // namespace tomo
