#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace drifts {

/// Whole-file read; gzip streams are inflated transparently.
std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// failure never leaves a partial file behind. With `compress` the payload
/// is gzip-encoded.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const unsigned char> bytes, bool compress);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace drifts
