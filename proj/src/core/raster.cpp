#include "raster.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace stemseg {

static_assert(std::endian::native == std::endian::little,
              "PRB1 payload is little-endian; big-endian hosts need a byte swap");

namespace {

constexpr std::string_view kMagic = "PRB1";

struct HeaderReader {
  std::istream& in;
  std::uint64_t offset = 0;

  std::string line() {
    const std::uint64_t start = offset;
    std::string s;
    if (!std::getline(in, s)) throw FormatError("unexpected end of header", start);
    offset += s.size() + 1;
    return s;
  }

  template <typename T>
  T field(std::string_view key) {
    const std::uint64_t start = offset;
    const std::string s = line();
    const std::string prefix = std::string(key) + "=";
    if (s.rfind(prefix, 0) != 0) {
      throw FormatError("expected '" + prefix + "' header line", start);
    }
    const char* first = s.data() + prefix.size();
    const char* last = s.data() + s.size();
    T value{};
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw FormatError("malformed value for '" + std::string(key) + "'",
                        start + prefix.size());
    }
    return value;
  }
};

template <typename T>
std::string shortest(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void validate(const ProbabilityRaster& r) {
  if (r.width < 1 || r.height < 1) throw std::invalid_argument("raster must be at least 1x1");
  if (!(r.gsd > 0.0) || !std::isfinite(r.gsd)) throw std::invalid_argument("gsd must be > 0");
  if (!std::isfinite(r.origin_x) || !std::isfinite(r.origin_y)) {
    throw std::invalid_argument("origin must be finite");
  }
  if (r.values.size() != static_cast<std::size_t>(r.width) * r.height) {
    throw std::invalid_argument("value count does not match width*height");
  }
  for (float v : r.values) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("value out of range");
  }
}

ProbabilityRaster read_raster(std::istream& in) {
  HeaderReader hdr{in};
  if (hdr.line() != kMagic) throw FormatError("missing PRB1 magic", 0);

  ProbabilityRaster r;
  std::uint64_t at = hdr.offset;
  r.width = hdr.field<std::uint32_t>("width");
  if (r.width == 0) throw FormatError("width must be >= 1", at);
  at = hdr.offset;
  r.height = hdr.field<std::uint32_t>("height");
  if (r.height == 0) throw FormatError("height must be >= 1", at);
  at = hdr.offset;
  r.gsd = hdr.field<double>("gsd");
  if (!(r.gsd > 0.0) || !std::isfinite(r.gsd)) throw FormatError("gsd must be > 0", at);
  r.origin_x = hdr.field<double>("origin_x");
  r.origin_y = hdr.field<double>("origin_y");
  at = hdr.offset;
  if (!hdr.line().empty()) throw FormatError("expected empty line after header", at);

  const std::uint64_t payload = hdr.offset;
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  r.values.resize(n);
  in.read(reinterpret_cast<char*>(r.values.data()), static_cast<std::streamsize>(n * 4));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != n * 4) {
    throw FormatError("value count " + std::to_string(got / 4) + " != width*height " +
                          std::to_string(n),
                      payload + got);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing data after " + std::to_string(n) + " values", payload + n * 4);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const float v = r.values[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw FormatError("value out of range", payload + i * 4);
    }
  }
  return r;
}

void write_raster(const ProbabilityRaster& r, std::ostream& out) {
  validate(r);
  out << kMagic << '\n'
      << "width=" << r.width << '\n'
      << "height=" << r.height << '\n'
      << "gsd=" << shortest(r.gsd) << '\n'
      << "origin_x=" << shortest(r.origin_x) << '\n'
      << "origin_y=" << shortest(r.origin_y) << '\n'
      << '\n';
  out.write(reinterpret_cast<const char*>(r.values.data()),
            static_cast<std::streamsize>(r.values.size() * 4));
}

ProbabilityRaster load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open raster '" + path.string() + "'");
  return read_raster(in);
}

void save_raster(const ProbabilityRaster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write raster '" + path.string() + "'");
  write_raster(raster, out);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

BinaryMask threshold_mask(const ProbabilityRaster& raster, double q) {
  BinaryMask m{raster.width, raster.height, {}};
  m.bits.resize(raster.values.size());
  std::transform(raster.values.begin(), raster.values.end(), m.bits.begin(),
                 [q](float v) { return static_cast<std::uint8_t>(v >= q ? 1 : 0); });
  return m;
}

}  // namespace stemseg
