#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "tomo/mesh.hpp"

namespace tomo {

inline constexpr std::size_t kImageSize = 256;

/// Row-major grayscale image; row 0 is the top. Values are nominally in [0, 1].
class GrayImage {
 public:
  GrayImage() : GrayImage(kImageSize, kImageSize) {}
  GrayImage(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), pixels_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return pixels_.size(); }

  double& operator()(std::size_t row, std::size_t col) { return pixels_[row * cols_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return pixels_[row * cols_ + col]; }

  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  bool same_shape(const GrayImage& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> pixels_;
};

/// Centre of pixel (row, col) in disc coordinates: the image spans
/// [-1, 1] x [-1, 1] with +y pointing up.
inline Point pixel_center(std::size_t row, std::size_t col, std::size_t rows = kImageSize,
                          std::size_t cols = kImageSize) {
  return {-1.0 + (2.0 * static_cast<double>(col) + 1.0) / static_cast<double>(cols),
          1.0 - (2.0 * static_cast<double>(row) + 1.0) / static_cast<double>(rows)};
}

/// 8-bit grayscale PNG, pixel = round(255 * clamp(value, 0, 1)).
std::vector<std::byte> encode_png(const GrayImage& image);
GrayImage decode_png(std::span<const std::byte> bytes);
void write_png(const GrayImage& image, const std::filesystem::path& path);
/// Reads an 8-bit grayscale PNG as value = byte / 255. Other colour types
/// are converted to gray by libpng.
GrayImage read_png(const std::filesystem::path& path);

/// The value an image takes after a PNG round trip.
GrayImage quantize(const GrayImage& image);

}  // namespace tomo
