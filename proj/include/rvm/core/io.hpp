#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rvm {

using json = nlohmann::json;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
  return json::parse(read_text_file(path));
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// Little-endian float32 blobs. Byte order is made explicit so files are
// portable regardless of host endianness.
inline void write_f32_blob(const std::filesystem::path& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write blob: " + path.string());
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &values[i], 4);
    bytes[4 * i + 0] = static_cast<unsigned char>(u & 0xff);
    bytes[4 * i + 1] = static_cast<unsigned char>((u >> 8) & 0xff);
    bytes[4 * i + 2] = static_cast<unsigned char>((u >> 16) & 0xff);
    bytes[4 * i + 3] = static_cast<unsigned char>((u >> 24) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::vector<float> read_f32_blob(const std::filesystem::path& path, std::size_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open blob: " + path.string());
  std::vector<unsigned char> bytes(expected_count * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    throw std::runtime_error("blob too short: " + path.string());
  std::vector<float> values(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(bytes[4 * i + 0]) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    std::memcpy(&values[i], &u, 4);
  }
  return values;
}

}  // namespace rvm
