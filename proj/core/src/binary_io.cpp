#include "binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "tomo/error.hpp"

namespace tomo::detail {

void ByteWriter::magic(std::string_view tag) {
  for (char c : tag) bytes_.push_back(static_cast<std::byte>(c));
}

void ByteWriter::u32(std::uint32_t value) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xffu));
}

void ByteWriter::f64(double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xffu));
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw IoError(what_ + ": truncated file (needed " + std::to_string(n) + " more bytes at offset " +
                  std::to_string(pos_) + ")");
  }
}

void ByteReader::expect_magic(std::string_view tag) {
  need(tag.size());
  for (std::size_t i = 0; i < tag.size(); ++i) {
    if (static_cast<char>(bytes_[pos_ + i]) != tag[i]) {
      throw IoError(what_ + ": bad magic, expected \"" + std::string(tag) + "\"");
    }
  }
  pos_ += tag.size();
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

double ByteReader::f64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::to_integer<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return std::bit_cast<double>(v);
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw IoError(what_ + ": " + std::to_string(remaining()) + " trailing bytes");
  }
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<std::byte>(raw[i]);
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace tomo::detail
