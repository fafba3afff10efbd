// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace tapfed {

// Scalars live in Z_p (the exponent group), elements in the order-p
// subgroup of Z_q*. Both are arbitrary-precision integers.
using Scalar = mpz_class;
using Element = mpz_class;

// Lowercase hex, big-endian, no leading zeros ("0" for zero).
std::string to_hex(const mpz_class& v);
mpz_class from_hex(const std::string& hex);

// Big-endian magnitude bytes. Minimal form drops leading zero bytes
// (empty string for zero); padded form is exactly `width` bytes.
std::string to_bytes(const mpz_class& v);
std::string to_bytes_padded(const mpz_class& v, std::size_t width);
mpz_class from_bytes(const std::string& bytes);

inline std::uint64_t to_u64(const mpz_class& v) {
  mpz_class lo = v & mpz_class(0xffffffffu);
  mpz_class hi = (v >> 32) & mpz_class(0xffffffffu);
  return (static_cast<std::uint64_t>(hi.get_ui()) << 32) | lo.get_ui();
}

inline mpz_class from_u64(std::uint64_t v) {
  mpz_class hi(static_cast<unsigned long>(v >> 32));
  mpz_class lo(static_cast<unsigned long>(v & 0xffffffffu));
  return (hi << 32) | lo;
}

inline mpz_class from_i64(std::int64_t v) {
  return v < 0 ? -from_u64(static_cast<std::uint64_t>(-(v + 1)) + 1) : from_u64(v);
}

// Mixes a seed with a tag; used to derive independent sub-seeds from one
// experiment master seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace tapfed
