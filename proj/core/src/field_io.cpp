#include "ec/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

namespace ec {

const char* to_string(FieldIoErrorCode code) {
  switch (code) {
    case FieldIoErrorCode::io:
      return "io error";
    case FieldIoErrorCode::bad_magic:
      return "bad magic";
    case FieldIoErrorCode::endianness:
      return "endianness mismatch";
    case FieldIoErrorCode::bad_version:
      return "unsupported version";
    case FieldIoErrorCode::bad_header:
      return "invalid header";
    case FieldIoErrorCode::truncated:
      return "truncated file";
    case FieldIoErrorCode::non_finite:
      return "non-finite payload";
    case FieldIoErrorCode::trailing_data:
      return "trailing data";
  }
  return "unknown";
}

namespace {

constexpr char kMagic[8] = {'C', 'E', 'F', 'L', 'D', '1', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  void u32(std::uint32_t v) { put(to_little(v)); }
  void f64(double v) { put(to_little(v)); }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.append(b, sizeof(T));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  std::uint32_t u32() { return to_little(get<std::uint32_t>()); }
  double f64() {
    double v = to_little(get<double>());
    if (!std::isfinite(v)) throw FieldIoError(FieldIoErrorCode::non_finite, at());
    return v;
  }
  void raw(char* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FieldIoError(FieldIoErrorCode::truncated, at());
  }
  std::string at() const { return "at byte offset " + std::to_string(pos_); }

  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_field(const GridField& field) {
  const Grid& g = field.grid();
  const int d = field.params().dim();
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(g.nx));
  w.u32(static_cast<std::uint32_t>(g.ny));
  w.u32(static_cast<std::uint32_t>(g.nt));
  w.f64(g.L);
  w.f64(g.T);
  w.f64(g.buffer);
  w.f64(field.params().gamma());
  w.f64(field.far().rho_inf);
  for (int k = 0; k < d; ++k) w.f64(field.far().mom_inf[k]);
  w.f64(field.far().S_inf);
  for (const State& s : field.data()) {
    w.f64(s.rho);
    for (int k = 0; k < d; ++k) w.f64(s.mom[k]);
    w.f64(s.S);
  }
  return w.take();
}

GridField decode_field(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  try {
    r.raw(magic, sizeof(magic));
  } catch (const FieldIoError&) {
    throw FieldIoError(FieldIoErrorCode::bad_magic, "file shorter than the magic");
  }
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FieldIoError(FieldIoErrorCode::bad_magic, "expected CEFLD1");

  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    if (version == 0x01000000u)
      throw FieldIoError(FieldIoErrorCode::endianness, "version word is byte-swapped");
    throw FieldIoError(FieldIoErrorCode::bad_version, "version " + std::to_string(version));
  }
  const std::uint32_t d = r.u32();
  const std::uint32_t nx = r.u32();
  const std::uint32_t ny = r.u32();
  const std::uint32_t nt = r.u32();
  if (d != 2 && d != 3) throw FieldIoError(FieldIoErrorCode::bad_header, "d must be 2 or 3");
  const double L = r.f64();
  const double T = r.f64();
  const double buffer = r.f64();
  const double gamma = r.f64();
  const double rho_inf = r.f64();
  Vec3 mom_inf{};
  for (std::uint32_t k = 0; k < d; ++k) mom_inf[k] = r.f64();
  const double S_inf = r.f64();

  std::optional<Grid> grid;
  std::optional<ThermoParams> params;
  std::optional<FarField> far;
  try {
    grid.emplace(L, static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nt), T, buffer);
    params.emplace(gamma, static_cast<int>(d));
    far.emplace(rho_inf, mom_inf, S_inf);
  } catch (const std::exception& e) {
    throw FieldIoError(FieldIoErrorCode::bad_header, e.what());
  }

  const std::size_t record_bytes = (d + 2) * sizeof(double);
  if ((bytes.size() - (8 + 5 * 4 + (6 + d) * 8)) / record_bytes < grid->size())
    throw FieldIoError(FieldIoErrorCode::truncated, "payload shorter than nt*nx*ny records");

  std::vector<State> data(grid->size());
  for (auto& s : data) {
    s.rho = r.f64();
    for (std::uint32_t k = 0; k < d; ++k) s.mom[k] = r.f64();
    s.S = r.f64();
  }
  if (!r.done()) throw FieldIoError(FieldIoErrorCode::trailing_data, "bytes after the payload");
  return GridField(*grid, *far, *params, std::move(data));
}

void save_field(const GridField& field, const std::filesystem::path& path) {
  std::string bytes = encode_field(field);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FieldIoError(FieldIoErrorCode::io, "cannot open " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FieldIoError(FieldIoErrorCode::io, "write failed for " + path.string());
}

GridField load_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FieldIoError(FieldIoErrorCode::io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_field(bytes);
}

}  // namespace ec
