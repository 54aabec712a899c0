#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyattack/linalg.hpp"

namespace polyattack::io {

// Shortest decimal string that round-trips to the same double (std::to_chars).
// Keeps CSV/JSON output byte-deterministic and lossless.
std::string format_double(double v);

std::string read_file(const std::string& path);   // throws DataError if unreadable
void write_file(const std::string& path, const std::string& content);

// Binary P5 PGM, maxval 255.  Values are expected in [0,1] and are rounded;
// anything outside is clamped.
void write_pgm(const std::string& path, const Vector& values, int height, int width);

// Minimal PGM reader for round-trip tests: returns pixel bytes.
std::vector<std::uint8_t> read_pgm(const std::string& path, int& height, int& width);

void ensure_dir(const std::string& path);

}  // namespace polyattack::io
