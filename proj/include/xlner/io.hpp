#ifndef XLNER_IO_HPP_
#define XLNER_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace xlner {

// Little-endian binary encoding used by all model files.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.append(s.data(), s.size());
  }
  void magic(std::string_view m) { bytes_.append(m.data(), m.size()); }
  void f64s(const double* values, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) f64(values[i]);
  }

  const std::string& bytes() const { return bytes_; }

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string bytes_;
};

// Throws ErrorKind::kData on truncation or bad magic.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get<std::uint32_t>()); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string str();
  void expect_magic(std::string_view m);
  bool done() const { return pos_ == bytes_.size(); }
  // Guards count fields read from untrusted files.
  void require(std::size_t bytes) const;

 private:
  template <typename T>
  T get() {
    require(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// FNV-1a over the bytes; used as a model file checksum.
std::uint64_t checksum(std::string_view bytes);

// Splits [0, count) into `threads` contiguous chunks and runs
// fn(chunk_index, begin, end) for each, in parallel when threads > 1.
void parallel_chunks(std::size_t count, int threads,
                     const std::function<void(int chunk, std::size_t begin, std::size_t end)>& fn);

}  // namespace xlner

#endif  // XLNER_IO_HPP_
