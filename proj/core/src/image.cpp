#include "tomo/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <string>

#include <png.h>

#include "binary_io.hpp"
#include "tomo/error.hpp"

namespace tomo {

namespace {

std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;  // NaN maps to 0
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(255.0 * v));
}

[[noreturn]] void png_fail(png_structp png, png_const_charp message) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  *what = message;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

struct ReadCursor {
  std::span<const std::byte> bytes;
  std::size_t pos = 0;
};

void read_bytes(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->bytes.size() - cur->pos < n) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, cur->bytes.data() + cur->pos, n);
  cur->pos += n;
}

void write_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::byte>*>(png_get_io_ptr(png));
  const auto* p = reinterpret_cast<const std::byte*>(data);
  out->insert(out->end(), p, p + n);
}

void flush_bytes(png_structp) {}

}  // namespace

std::vector<std::byte> encode_png(const GrayImage& image) {
  std::vector<std::uint8_t> rows(image.size());
  std::transform(image.pixels().begin(), image.pixels().end(), rows.begin(), to_byte);
  std::vector<png_bytep> row_ptrs(image.rows());
  for (std::size_t r = 0; r < image.rows(); ++r) row_ptrs[r] = rows.data() + r * image.cols();

  std::vector<std::byte> out;
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (png == nullptr) throw IoError("png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png encode: " + error);
  }
  png_set_write_fn(png, &out, write_bytes, flush_bytes);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols()), static_cast<png_uint_32>(image.rows()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_set_rows(png, info, row_ptrs.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

GrayImage decode_png(std::span<const std::byte> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw IoError("not a PNG file");
  }
  ReadCursor cursor{bytes, 0};
  std::string error;
  // Declared before setjmp so a longjmp never skips their destructors.
  std::vector<std::uint8_t> data;
  std::vector<png_bytep> row_ptrs;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (png == nullptr) throw IoError("png: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png decode: " + error);
  }
  png_set_read_fn(png, &cursor, read_bytes);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != width) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png decode: unsupported pixel layout");
  }
  data.resize(static_cast<std::size_t>(width) * height);
  row_ptrs.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) row_ptrs[r] = data.data() + static_cast<std::size_t>(r) * width;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  GrayImage image(height, width);
  std::transform(data.begin(), data.end(), image.pixels().begin(), [](std::uint8_t b) { return b / 255.0; });
  return image;
}

void write_png(const GrayImage& image, const std::filesystem::path& path) {
  detail::write_file(path, encode_png(image));
}

GrayImage read_png(const std::filesystem::path& path) {
  try {
    return decode_png(detail::read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

GrayImage quantize(const GrayImage& image) {
  GrayImage out(image.rows(), image.cols());
  std::transform(image.pixels().begin(), image.pixels().end(), out.pixels().begin(),
                 [](double v) { return to_byte(v) / 255.0; });
  return out;
}

}  // namespace tomo
