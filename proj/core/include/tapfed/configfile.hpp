// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace tapfed::configfile {

// Flat key-value config with [section] headers; keys flatten to
// "section.key". '#' and ';' start comments.
using KvMap = std::map<std::string, std::string>;

KvMap parse_text(const std::string& text);
KvMap parse_file(const std::string& path);

// Applies one "section.key=value" override (the CLI's --set flag).
void apply_override(KvMap& kv, const std::string& assignment);

// Typed lookups; the *_or forms fall back to a default, the required
// forms throw Errc::config_error when the key is absent or malformed.
std::string get_string(const KvMap& kv, const std::string& key);
std::string get_string_or(const KvMap& kv, const std::string& key, const std::string& fallback);
std::uint64_t get_u64(const KvMap& kv, const std::string& key);
std::uint64_t get_u64_or(const KvMap& kv, const std::string& key, std::uint64_t fallback);
double get_double(const KvMap& kv, const std::string& key);
double get_double_or(const KvMap& kv, const std::string& key, double fallback);
bool get_bool_or(const KvMap& kv, const std::string& key, bool fallback);
bool has_key(const KvMap& kv, const std::string& key);

}  // namespace tapfed::configfile
