// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <stdexcept>
#include <string>

namespace tapfed {

// Error kinds are part of the contract: several of them are load-bearing
// signals for callers (e.g. dlog_out_of_bound marks label mismatch or
// tampering, not a programming error).
enum class Errc {
  generation_timeout,
  invalid_label,
  threshold_exceeds_shares,
  invalid_index,
  dlog_out_of_bound,
  arity_mismatch,
  index_out_of_range,
  label_mismatch,
  incomplete_input,
  key_mismatch,
  insufficient_shares,
  tamper_detected,
  result_out_of_range,
  encoding_range,
  degenerate_weights,
  label_reuse,
  no_peer_channel,
  config_error,
  parse_error,
  unknown_scenario,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::generation_timeout: return "generation-timeout";
    case Errc::invalid_label: return "invalid-label";
    case Errc::threshold_exceeds_shares: return "threshold-exceeds-shares";
    case Errc::invalid_index: return "invalid-index";
    case Errc::dlog_out_of_bound: return "dlog-out-of-bound";
    case Errc::arity_mismatch: return "arity-mismatch";
    case Errc::index_out_of_range: return "index-out-of-range";
    case Errc::label_mismatch: return "label-mismatch";
    case Errc::incomplete_input: return "incomplete-input";
    case Errc::key_mismatch: return "key-mismatch";
    case Errc::insufficient_shares: return "insufficient-shares";
    case Errc::tamper_detected: return "tamper-detected";
    case Errc::result_out_of_range: return "result-out-of-range";
    case Errc::encoding_range: return "encoding-range";
    case Errc::degenerate_weights: return "degenerate-weights";
    case Errc::label_reuse: return "label-reuse";
    case Errc::no_peer_channel: return "no-peer-channel";
    case Errc::config_error: return "config-error";
    case Errc::parse_error: return "parse-error";
    case Errc::unknown_scenario: return "unknown-scenario";
  }
  return "unknown-error";
}

}  // namespace tapfed
