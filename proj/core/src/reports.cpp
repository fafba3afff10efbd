// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tapfed/error.hpp"
#include "tapfed/harness.hpp"

namespace tapfed::harness {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.10g", v);
  return buffer;
}

std::string join_events(const std::vector<std::string>& events) {
  std::string out;
  for (const std::string& event : events) {
    if (!out.empty()) out += '|';
    for (char c : event) out += c == ',' ? ';' : c;
  }
  return out;
}

std::string json_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::config_error, "cannot write: " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void write_rounds_csv(const std::string& path, const ExperimentResult& result,
                      unsigned n_parties) {
  std::ostringstream out;
  out << "round,completed,train_loss_mean";
  for (unsigned i = 0; i < n_parties; ++i) out << ",loss_p" << (i + 1);
  out << ",test_accuracy,max_deviation,ciphertext_bytes_per_party,dk_bytes,partial_bytes,"
         "total_bytes,events\n";
  for (const RoundRecord& rec : result.rounds) {
    out << rec.round_index << ',' << (rec.completed ? 1 : 0) << ','
        << format_double(rec.train_loss_mean);
    for (unsigned i = 0; i < n_parties; ++i) out << ',' << format_double(rec.party_losses[i]);
    out << ',' << format_double(rec.test_accuracy) << ',' << format_double(rec.max_deviation)
        << ',' << rec.ciphertext_bytes_per_party << ',' << rec.dk_bytes_total << ','
        << rec.partial_bytes_total << ',' << rec.total_bytes << ',' << join_events(rec.events)
        << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_timings_csv(const std::string& path, const ExperimentResult& result) {
  std::ostringstream out;
  out << "round,train_ms,protect_ms,aggregate_ms,recover_ms\n";
  for (const RoundRecord& rec : result.rounds) {
    out << rec.round_index << ',' << format_double(rec.times.train_ms) << ','
        << format_double(rec.times.protect_ms) << ',' << format_double(rec.times.aggregate_ms)
        << ',' << format_double(rec.times.recover_ms) << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_payload_csv(const std::string& path, const ExperimentResult& result,
                       const ExperimentConfig& cfg) {
  // Element width for a lambda-bit order p: q = 2p + 1 is one bit wider.
  const std::size_t element_bytes = (cfg.lambda_bits + 1 + 7) / 8;
  const std::size_t eta = cfg.trainer.features + 1;
  const std::size_t label_len = wire::round_label_size(0, false);
  const std::size_t expected =
      wire::protected_update_wire_size(eta, label_len, 2, element_bytes);

  std::ostringstream out;
  out << "round,eta,element_bytes,ciphertext_bytes_per_party,expected_ciphertext_bytes,"
         "dk_bytes,partial_bytes\n";
  for (const RoundRecord& rec : result.rounds) {
    out << rec.round_index << ',' << eta << ',' << element_bytes << ','
        << rec.ciphertext_bytes_per_party << ',' << expected << ',' << rec.dk_bytes_total << ','
        << rec.partial_bytes_total << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_summary_json(const std::string& path, const ExperimentResult& result,
                        const ExperimentConfig& cfg, double plaintext_accuracy) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"parties\": " << cfg.n_parties << ",\n";
  out << "  \"aggregators\": " << cfg.s_aggregators << ",\n";
  out << "  \"threshold\": " << cfg.threshold_t << ",\n";
  out << "  \"rounds\": " << cfg.max_rounds_q << ",\n";
  out << "  \"rounds_completed\": " << result.rounds_completed << ",\n";
  out << "  \"lambda_bits\": " << cfg.lambda_bits << ",\n";
  out << "  \"fusion\": \"" << json_escape(std::string(codec::fusion_mode_name(cfg.fusion_mode)))
      << "\",\n";
  out << "  \"pr\": " << cfg.pr << ",\n";
  out << "  \"prw\": " << cfg.prw << ",\n";
  out << "  \"final_accuracy\": " << format_double(result.final_accuracy) << ",\n";
  out << "  \"final_loss\": " << format_double(result.final_loss) << ",\n";
  out << "  \"plaintext_accuracy\": " << format_double(plaintext_accuracy) << ",\n";
  out << "  \"total_bytes\": " << result.total_bytes << ",\n";
  out << "  \"total_seconds\": " << format_double(result.total_seconds) << "\n";
  out << "}\n";
  write_text_atomic(path, out.str());
}

}  // namespace tapfed::harness
