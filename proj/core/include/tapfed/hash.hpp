// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <string>
#include <string_view>

#include "tapfed/group.hpp"

namespace tapfed {

// Identifier recorded in public parameters so peers can detect a hash
// mismatch before anything decrypts to garbage.
inline constexpr const char* kLabelHashId = "sha256-zp-v1";

// Full-domain hash of a label into [1, p-1]. Deterministic and stable
// across builds: SHA-256 expanded over numbered blocks, reduced mod p-1,
// shifted by one. Empty labels are rejected.
mpz_class hash_to_scalar(std::string_view label, const GroupParams& params);

}  // namespace tapfed
