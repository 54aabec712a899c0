#include "polyattack/io_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyattack/errors.hpp"

namespace polyattack::io {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("short write to " + path);
}

void write_pgm(const std::string& path, const Vector& values, int height, int width) {
  if (static_cast<std::size_t>(height) * static_cast<std::size_t>(width) != values.size()) {
    throw DimensionMismatch("write_pgm: shape does not match value count");
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + values.size());
  for (double v : values) {
    const double scaled = std::lround(std::min(1.0, std::max(0.0, v)) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(scaled)));
  }
  write_file(path, out);
}

std::vector<std::uint8_t> read_pgm(const std::string& path, int& height, int& width) {
  const std::string raw = read_file(path);
  std::istringstream in(raw);
  std::string magic;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || maxval != 255) throw BadMagic("read_pgm: not a maxval-255 P5 file");
  in.get();  // single whitespace after header
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) {
    throw TruncatedFile("read_pgm: short pixel data in " + path);
  }
  return px;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw DataError("cannot create directory " + path + ": " + ec.message());
}

}  // namespace polyattack::io
