#include "wlf/binary_io.hpp"

#include <fstream>
#include <sstream>

#include "wlf/error.hpp"

namespace wlf::io {

template <typename T>
std::vector<T> read_array(const std::filesystem::path& path, std::ptrdiff_t expected_count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(T) != 0) {
    throw InputError(path.string() + ": size " + std::to_string(bytes) +
                     " is not a multiple of the element size");
  }
  const std::size_t count = bytes / sizeof(T);
  if (expected_count >= 0 && count != static_cast<std::size_t>(expected_count)) {
    throw InputError(path.string() + ": expected " + std::to_string(expected_count) +
                     " elements, found " + std::to_string(count));
  }
  std::vector<T> values(count);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in) {
    throw InputError("short read on " + path.string());
  }
  return values;
}

template <typename T>
void write_array(const std::filesystem::path& path, std::span<const T> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out) {
    throw InputError("short write on " + path.string());
  }
}

template std::vector<float> read_array<float>(const std::filesystem::path&, std::ptrdiff_t);
template std::vector<std::uint16_t> read_array<std::uint16_t>(const std::filesystem::path&,
                                                              std::ptrdiff_t);
template std::vector<std::int32_t> read_array<std::int32_t>(const std::filesystem::path&,
                                                            std::ptrdiff_t);
template std::vector<std::uint32_t> read_array<std::uint32_t>(const std::filesystem::path&,
                                                              std::ptrdiff_t);
template std::vector<std::int8_t> read_array<std::int8_t>(const std::filesystem::path&,
                                                          std::ptrdiff_t);
template void write_array<float>(const std::filesystem::path&, std::span<const float>);
template void write_array<std::uint16_t>(const std::filesystem::path&,
                                         std::span<const std::uint16_t>);
template void write_array<std::int32_t>(const std::filesystem::path&,
                                        std::span<const std::int32_t>);
template void write_array<std::uint32_t>(const std::filesystem::path&,
                                         std::span<const std::uint32_t>);
template void write_array<std::int8_t>(const std::filesystem::path&, std::span<const std::int8_t>);

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace wlf::io
