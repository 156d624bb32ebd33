#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace wlf::io {

static_assert(std::endian::native == std::endian::little,
              "binary bundle arrays are little-endian; big-endian hosts are not supported");

// Raw little-endian flat arrays. A negative `expected_count` accepts any
// file whose size is a multiple of sizeof(T).
template <typename T>
std::vector<T> read_array(const std::filesystem::path& path, std::ptrdiff_t expected_count = -1);

template <typename T>
void write_array(const std::filesystem::path& path, std::span<const T> values);

extern template std::vector<float> read_array<float>(const std::filesystem::path&, std::ptrdiff_t);
extern template std::vector<std::uint16_t> read_array<std::uint16_t>(const std::filesystem::path&,
                                                                     std::ptrdiff_t);
extern template std::vector<std::int32_t> read_array<std::int32_t>(const std::filesystem::path&,
                                                                   std::ptrdiff_t);
extern template std::vector<std::uint32_t> read_array<std::uint32_t>(const std::filesystem::path&,
                                                                     std::ptrdiff_t);
extern template std::vector<std::int8_t> read_array<std::int8_t>(const std::filesystem::path&,
                                                                 std::ptrdiff_t);
extern template void write_array<float>(const std::filesystem::path&, std::span<const float>);
extern template void write_array<std::uint16_t>(const std::filesystem::path&,
                                                std::span<const std::uint16_t>);
extern template void write_array<std::int32_t>(const std::filesystem::path&,
                                               std::span<const std::int32_t>);
extern template void write_array<std::uint32_t>(const std::filesystem::path&,
                                                std::span<const std::uint32_t>);
extern template void write_array<std::int8_t>(const std::filesystem::path&,
                                              std::span<const std::int8_t>);

// Writes `text` to `path`, replacing any existing file.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace wlf::io
