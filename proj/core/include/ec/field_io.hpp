#pragma once

// CEFLD1 binary field files.
//
//   bytes 0..7   magic "CEFLD1\0\0"
//   u32 LE       version (= 1), d, nx, ny, nt
//   f64 LE       L, T, buffer, gamma, rho_inf, mom_inf[d], S_inf
//   f64 LE       nt * ny * nx records (rho, mom[d], S), t-major, x fastest
//
// There is no separate byte-order field: a big-endian writer produces the
// version word 0x01000000, which the reader reports as an endianness error.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "ec/fields.hpp"

namespace ec {

enum class FieldIoErrorCode {
  io,          // cannot open, read or write the file
  bad_magic,   // not a CEFLD1 file
  endianness,  // written by a big-endian writer
  bad_version,
  bad_header,  // header values violate the Grid / ThermoParams invariants
  truncated,
  non_finite,
  trailing_data,
};

const char* to_string(FieldIoErrorCode code);

class FieldIoError : public std::runtime_error {
 public:
  FieldIoError(FieldIoErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  FieldIoErrorCode code() const { return code_; }

 private:
  FieldIoErrorCode code_;
};

void save_field(const GridField& field, const std::filesystem::path& path);
GridField load_field(const std::filesystem::path& path);

/// Serialized bytes of a field (what save_field writes).
std::string encode_field(const GridField& field);
GridField decode_field(const std::string& bytes);

}  // namespace ec
