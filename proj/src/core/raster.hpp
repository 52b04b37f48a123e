#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace stemseg {

/// Per-pixel class probabilities on a regular grid. Pixel (col, row) covers
/// [col, col+1) x [row, row+1) in continuous pixel coordinates; its world
/// position is origin + pixel * gsd.
struct ProbabilityRaster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  double gsd = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<float> values;  // row-major, top row first

  float at(std::uint32_t col, std::uint32_t row) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  float& at(std::uint32_t col, std::uint32_t row) {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

struct BinaryMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bits;

  bool at(std::uint32_t col, std::uint32_t row) const {
    return bits[static_cast<std::size_t>(row) * width + col] != 0;
  }
  std::size_t count() const;
};

/// Raised for malformed PRB1 input; `offset` is the byte position of the fault.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Throws std::invalid_argument when the raster violates its invariants.
void validate(const ProbabilityRaster& raster);

ProbabilityRaster read_raster(std::istream& in);
void write_raster(const ProbabilityRaster& raster, std::ostream& out);

ProbabilityRaster load_raster(const std::filesystem::path& path);
void save_raster(const ProbabilityRaster& raster, const std::filesystem::path& path);

/// Foreground iff value >= q.
BinaryMask threshold_mask(const ProbabilityRaster& raster, double q);

}  // namespace stemseg
