#pragma once

// Little-endian encoding helpers shared by the mesh, frame and matrix files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tomo::detail {

class ByteWriter {
 public:
  void magic(std::string_view tag);
  void u32(std::uint32_t value);
  void f64(double value);

  const std::vector<std::byte>& bytes() const { return bytes_; }

 private:
  std::vector<std::byte> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::byte> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  /// Throws IoError unless the next four bytes equal `tag`.
  void expect_magic(std::string_view tag);
  std::uint32_t u32();
  double f64();

  std::size_t remaining() const { return bytes_.size() - pos_; }
  /// Throws IoError if any unread bytes are left.
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace tomo::detail
