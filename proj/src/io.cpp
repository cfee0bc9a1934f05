#include "drifts/io.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <system_error>

#include <unistd.h>
#include <zlib.h>

#include "drifts/error.hpp"

namespace drifts {

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  return tmp;
}

void write_plain(const std::filesystem::path& path,
                 std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_gzip(const std::filesystem::path& path,
                std::span<const unsigned char> bytes) {
  gzFile gz = gzopen(path.c_str(), "wb6");
  if (gz == nullptr) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::size_t done = 0;
  while (done < bytes.size()) {
    const unsigned chunk =
        static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    const int n = gzwrite(gz, bytes.data() + done, chunk);
    if (n <= 0) {
      gzclose(gz);
      throw Error(ErrorCode::IoError, "gzip write failed: " + path.string());
    }
    done += static_cast<std::size_t>(n);
  }
  if (gzclose(gz) != Z_OK) {
    throw Error(ErrorCode::IoError, "gzip close failed: " + path.string());
  }
}

}  // namespace

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "no such file: " + path.string());
  }
  gzFile gz = gzopen(path.c_str(), "rb");
  if (gz == nullptr) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  gzbuffer(gz, 1u << 17);
  std::vector<unsigned char> out;
  std::vector<unsigned char> chunk(1u << 20);
  for (;;) {
    const int n = gzread(gz, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int err = 0;
      const std::string msg = gzerror(gz, &err);
      gzclose(gz);
      throw Error(ErrorCode::IoError, "read failed: " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(gz);
  return out;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const unsigned char> bytes, bool compress) {
  const auto tmp = temp_sibling(path);
  try {
    if (compress) {
      write_gzip(tmp, bytes);
    } else {
      write_plain(tmp, bytes);
    }
    std::filesystem::rename(tmp, path);
  } catch (const std::filesystem::filesystem_error& e) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error(ErrorCode::IoError, e.what());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(
      path,
      std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()),
      false);
}

}  // namespace drifts
