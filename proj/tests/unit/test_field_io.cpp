#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "ec/field_io.hpp"

using namespace ec;

namespace {

GridField random_field(int d, std::uint64_t seed) {
  Grid g(1.5, 6, 4, 3, 0.5, 0.25);
  GridField f(g, FarField(1.2, {0.3, -0.1, d == 3 ? 0.2 : 0.0}, 0.4), ThermoParams(1.4, d));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (State& s : f.data()) {
    s.rho = 1.0 + 0.5 * u(rng);
    for (int k = 0; k < d; ++k) s.mom[k] = u(rng);
    s.S = u(rng);
  }
  return f;
}

FieldIoErrorCode code_of(const std::string& bytes) {
  try {
    decode_field(bytes);
  } catch (const FieldIoError& e) {
    return e.code();
  }
  FAIL("decode_field accepted corrupted bytes");
  return FieldIoErrorCode::io;
}

void put_u32(std::string& b, std::size_t at, std::uint32_t v) { std::memcpy(b.data() + at, &v, 4); }

}  // namespace

TEST_CASE("round trip is bit exact") {
  for (int d : {2, 3}) {
    const GridField f = random_field(d, 42 + d);
    const auto path = std::filesystem::temp_directory_path() / ("ec_io_" + std::to_string(d) + ".cefld");
    save_field(f, path);
    const GridField g = load_field(path);
    CHECK(g.grid() == f.grid());
    CHECK(g.far() == f.far());
    CHECK(g.params() == f.params());
    REQUIRE(std::memcmp(g.data().data(), f.data().data(), f.data().size_bytes()) == 0);
    CHECK(encode_field(g) == encode_field(f));
    std::filesystem::remove(path);
  }
}

TEST_CASE("header layout") {
  const std::string b = encode_field(random_field(2, 1));
  CHECK(b.substr(0, 8) == std::string("CEFLD1\0\0", 8));
  std::uint32_t words[5];
  std::memcpy(words, b.data() + 8, sizeof(words));
  CHECK(words[0] == 1u);
  CHECK(words[1] == 2u);
  CHECK(words[2] == 6u);
  CHECK(words[3] == 4u);
  CHECK(words[4] == 3u);
  // header: 8 + 20 + 8 * (6 + d) bytes, then 3 * 6 * 4 records of 2 + d doubles
  CHECK(b.size() == 8 + 20 + 8 * 8 + 72 * 4 * 8);
}

TEST_CASE("corruption is reported with distinct codes") {
  const std::string good = encode_field(random_field(2, 3));

  std::string magic = good;
  magic[0] = 'X';
  CHECK(code_of(magic) == FieldIoErrorCode::bad_magic);

  std::string endian = good;
  put_u32(endian, 8, 0x01000000u);
  CHECK(code_of(endian) == FieldIoErrorCode::endianness);

  std::string version = good;
  put_u32(version, 8, 2u);
  CHECK(code_of(version) == FieldIoErrorCode::bad_version);

  std::string dim = good;
  put_u32(dim, 12, 7u);
  CHECK(code_of(dim) == FieldIoErrorCode::bad_header);

  CHECK(code_of(good.substr(0, good.size() - 5)) == FieldIoErrorCode::truncated);
  CHECK(code_of(good.substr(0, 10)) == FieldIoErrorCode::truncated);
  CHECK(code_of(good + "x") == FieldIoErrorCode::trailing_data);

  std::string nan = good;
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 8, &q, 8);
  CHECK(code_of(nan) == FieldIoErrorCode::non_finite);
}

TEST_CASE("missing file is an io error") {
  try {
    load_field("/nonexistent/dir/field.cefld");
    FAIL("expected an error");
  } catch (const FieldIoError& e) {
    CHECK(e.code() == FieldIoErrorCode::io);
  }
}
