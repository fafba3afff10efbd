// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/bigint.hpp"

#include <stdexcept>

namespace tapfed {

std::string to_hex(const mpz_class& v) {
  if (sgn(v) < 0) throw std::invalid_argument("to_hex: negative value");
  return v.get_str(16);
}

mpz_class from_hex(const std::string& hex) {
  if (hex.empty()) throw std::invalid_argument("from_hex: empty string");
  mpz_class v;
  if (v.set_str(hex, 16) != 0) throw std::invalid_argument("from_hex: bad digit");
  return v;
}

std::string to_bytes(const mpz_class& v) {
  if (sgn(v) < 0) throw std::invalid_argument("to_bytes: negative value");
  if (v == 0) return {};
  std::size_t count = 0;
  std::string out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8, '\0');
  mpz_export(out.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(count);
  return out;
}

std::string to_bytes_padded(const mpz_class& v, std::size_t width) {
  std::string min = to_bytes(v);
  if (min.size() > width) throw std::invalid_argument("to_bytes_padded: value wider than field");
  return std::string(width - min.size(), '\0') + min;
}

mpz_class from_bytes(const std::string& bytes) {
  mpz_class v;
  if (!bytes.empty()) {
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return v;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace tapfed
