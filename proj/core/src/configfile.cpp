// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/configfile.hpp"

#include <fstream>
#include <sstream>

#include "tapfed/error.hpp"

namespace tapfed::configfile {

namespace {

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  std::size_t end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' || line[i] == ';') return line.substr(0, i);
  }
  return line;
}

}  // namespace

KvMap parse_text(const std::string& text) {
  KvMap kv;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        fail(Errc::parse_error, "bad section header at line " + std::to_string(line_no));
      }
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      fail(Errc::parse_error, "expected key=value at line " + std::to_string(line_no));
    }
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) fail(Errc::parse_error, "empty key at line " + std::to_string(line_no));
    kv[section.empty() ? key : section + "." + key] = value;
  }
  return kv;
}

KvMap parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config_error, "cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

void apply_override(KvMap& kv, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(Errc::config_error, "override must look like section.key=value: " + assignment);
  }
  kv[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

bool has_key(const KvMap& kv, const std::string& key) { return kv.count(key) != 0; }

std::string get_string(const KvMap& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) fail(Errc::config_error, "missing config key: " + key);
  return it->second;
}

std::string get_string_or(const KvMap& kv, const std::string& key, const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::uint64_t get_u64(const KvMap& kv, const std::string& key) {
  const std::string raw = get_string(kv, key);
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    fail(Errc::config_error, "expected unsigned integer for " + key + ": " + raw);
  }
}

std::uint64_t get_u64_or(const KvMap& kv, const std::string& key, std::uint64_t fallback) {
  return has_key(kv, key) ? get_u64(kv, key) : fallback;
}

double get_double(const KvMap& kv, const std::string& key) {
  const std::string raw = get_string(kv, key);
  try {
    std::size_t used = 0;
    double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    fail(Errc::config_error, "expected number for " + key + ": " + raw);
  }
}

double get_double_or(const KvMap& kv, const std::string& key, double fallback) {
  return has_key(kv, key) ? get_double(kv, key) : fallback;
}

bool get_bool_or(const KvMap& kv, const std::string& key, bool fallback) {
  if (!has_key(kv, key)) return fallback;
  const std::string raw = get_string(kv, key);
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  fail(Errc::config_error, "expected boolean for " + key + ": " + raw);
}

}  // namespace tapfed::configfile
