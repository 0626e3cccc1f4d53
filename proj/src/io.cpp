#include "xlner/io.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <thread>
#include <unistd.h>

#include "xlner/error.hpp"

namespace xlner {

std::uint8_t BinaryReader::u8() {
  require(1);
  return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::string BinaryReader::str() {
  const std::uint32_t n = u32();
  require(n);
  std::string s(bytes_.substr(pos_, n));
  pos_ += n;
  return s;
}

void BinaryReader::expect_magic(std::string_view m) {
  require(m.size());
  if (bytes_.substr(pos_, m.size()) != m) fail(ErrorKind::kData, "not a model file of the expected kind");
  pos_ += m.size();
}

void BinaryReader::require(std::size_t bytes) const {
  if (bytes > bytes_.size() - pos_) fail(ErrorKind::kData, "model file is truncated or corrupted");
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kUsage, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorKind::kUsage, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::kUsage, "cannot rename into " + path.string());
  }
}

std::uint64_t checksum(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

void parallel_chunks(std::size_t count, int threads,
                     const std::function<void(int, std::size_t, std::size_t)>& fn) {
  const int chunks = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(count, 1))));
  if (chunks == 1) {
    fn(0, 0, count);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  for (int c = 0; c < chunks; ++c) {
    const std::size_t begin = count * static_cast<std::size_t>(c) / static_cast<std::size_t>(chunks);
    const std::size_t end = count * static_cast<std::size_t>(c + 1) / static_cast<std::size_t>(chunks);
    workers.emplace_back([&, c, begin, end] {
      try {
        fn(c, begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace xlner
