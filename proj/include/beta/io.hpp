#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace beta::io {

std::string read_text_file(const std::filesystem::path& path);

// All writers are atomic: content goes to a temp file in the same directory
// which is then renamed over the target.
void atomic_write_text(const std::filesystem::path& path, std::string_view text);
void atomic_write_bytes(const std::filesystem::path& path, const void* data,
                        std::size_t size);

// Raw little-endian float64 blobs (model parameters, embedding sidecars).
void atomic_write_f64_blob(const std::filesystem::path& path,
                           std::span<const double> values);
std::vector<double> read_f64_blob(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace beta::io
