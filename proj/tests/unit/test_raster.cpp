#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "raster.hpp"

using namespace stemseg;

namespace {

ProbabilityRaster constant(std::uint32_t w, std::uint32_t h, float v) {
  ProbabilityRaster r;
  r.width = w;
  r.height = h;
  r.gsd = 0.1;
  r.values.assign(static_cast<std::size_t>(w) * h, v);
  return r;
}

std::string prb_bytes(const std::string& header, const std::vector<float>& values) {
  std::string s = header;
  for (float v : values) {
    char b[4];
    std::memcpy(b, &v, 4);
    s.append(b, 4);
  }
  return s;
}

}  // namespace

TEST_SUITE("raster_io") {
  TEST_CASE("minimal 2x1 file loads") {
    std::istringstream in(prb_bytes(
        "PRB1\nwidth=2\nheight=1\ngsd=0.1\norigin_x=0\norigin_y=0\n\n", {0.0f, 1.0f}));
    const ProbabilityRaster r = read_raster(in);
    CHECK(r.width == 2);
    CHECK(r.height == 1);
    CHECK(r.values == std::vector<float>{0.0f, 1.0f});
  }

  TEST_CASE("out-of-range value is rejected with its byte offset") {
    const std::string header = "PRB1\nwidth=2\nheight=1\ngsd=0.1\norigin_x=0\norigin_y=0\n\n";
    std::istringstream in(prb_bytes(header, {0.0f, 1.5f}));
    try {
      (void)read_raster(in);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("value out of range") != std::string::npos);
      CHECK(e.offset() == header.size() + 4);
    }
  }

  TEST_CASE("NaN, truncated payload, trailing bytes and bad magic are rejected") {
    const std::string header = "PRB1\nwidth=2\nheight=1\ngsd=0.1\norigin_x=0\norigin_y=0\n\n";
    std::istringstream nan_in(prb_bytes(header, {0.0f, std::nanf("")}));
    CHECK_THROWS_AS((void)read_raster(nan_in), FormatError);
    std::istringstream short_in(prb_bytes(header, {0.0f}));
    CHECK_THROWS_AS((void)read_raster(short_in), FormatError);
    std::istringstream long_in(prb_bytes(header, {0.0f, 0.0f, 0.0f}));
    CHECK_THROWS_AS((void)read_raster(long_in), FormatError);
    std::istringstream magic_in(prb_bytes("PRB2\n" + header.substr(5), {0.0f, 0.0f}));
    CHECK_THROWS_AS((void)read_raster(magic_in), FormatError);
    std::istringstream gsd_in(prb_bytes(
        "PRB1\nwidth=2\nheight=1\ngsd=0\norigin_x=0\norigin_y=0\n\n", {0.0f, 0.0f}));
    CHECK_THROWS_AS((void)read_raster(gsd_in), FormatError);
  }

  TEST_CASE("save then load is bit-exact for random rasters") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int trial = 0; trial < 5; ++trial) {
      ProbabilityRaster r = constant(64, 64, 0.0f);
      r.gsd = 0.1 + 0.01 * trial;
      r.origin_x = 4500000.123456789;
      r.origin_y = -12.5;
      for (float& v : r.values) v = u(rng);
      std::stringstream ss;
      write_raster(r, ss);
      const ProbabilityRaster back = read_raster(ss);
      CHECK(back.width == r.width);
      CHECK(back.height == r.height);
      CHECK(back.gsd == r.gsd);
      CHECK(back.origin_x == r.origin_x);
      CHECK(back.origin_y == r.origin_y);
      CHECK(std::memcmp(back.values.data(), r.values.data(), r.values.size() * 4) == 0);
    }
  }

  TEST_CASE("threshold is inclusive") {
    CHECK(threshold_mask(constant(4, 3, 0.4f), 0.5).count() == 0);
    CHECK(threshold_mask(constant(4, 3, 0.5f), 0.5).count() == 12);
  }

  TEST_CASE("checkerboard thresholds to checkerboard") {
    ProbabilityRaster r = constant(5, 4, 0.0f);
    for (std::uint32_t y = 0; y < 4; ++y)
      for (std::uint32_t x = 0; x < 5; ++x) r.at(x, y) = (x + y) % 2 == 0 ? 0.9f : 0.1f;
    const BinaryMask m = threshold_mask(r, 0.5);
    for (std::uint32_t y = 0; y < 4; ++y)
      for (std::uint32_t x = 0; x < 5; ++x) CHECK(m.at(x, y) == ((x + y) % 2 == 0));
  }

  TEST_CASE("foreground count is non-increasing in q") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    ProbabilityRaster r = constant(32, 32, 0.0f);
    for (float& v : r.values) v = u(rng);
    std::size_t prev = r.values.size() + 1;
    for (double q = 0.0; q <= 1.0; q += 0.05) {
      const std::size_t c = threshold_mask(r, q).count();
      CHECK(c <= prev);
      prev = c;
    }
  }

  TEST_CASE("validate rejects broken rasters") {
    ProbabilityRaster r = constant(2, 2, 0.5f);
    CHECK_NOTHROW(validate(r));
    r.values[1] = 1.5f;
    CHECK_THROWS_AS(validate(r), std::invalid_argument);
    r = constant(2, 2, 0.5f);
    r.values.pop_back();
    CHECK_THROWS_AS(validate(r), std::invalid_argument);
  }
}
