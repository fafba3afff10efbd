// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tapfed/codec.hpp"
#include "tapfed/tmcfe.hpp"

namespace tapfed::tdsa {

// Threshold decentralized secure aggregation: parties protect model
// updates, independent aggregators share-decrypt under compliance-gated
// functional keys, parties recover from any t partials. Aggregators never
// talk to each other; the compliance ledger is the only shared state.
//
// A model vector of length L runs as L per-coordinate inner-product
// instances (total length n each) that share one label, one FusionSpec and
// one master key: the party encrypts the whole vector once (L + 1 group
// elements), key shares and partials are per coordinate.

struct RoundLabel {
  std::uint64_t round_index = 0;          // >= 1
  std::optional<std::string> scope;       // personalized FL: owning party

  // Canonical injective encoding over (round_index, scope).
  std::string bytes() const;

  static RoundLabel for_round(std::uint64_t k);
  static RoundLabel personalized(std::uint64_t k, std::string scope);

  bool operator==(const RoundLabel&) const = default;
};

struct DkRequest {
  std::string aggregator_id;
  codec::FusionSpec fusion;
  RoundLabel label;
};

struct ProtectedUpdate {
  std::string party_id;
  RoundLabel label;
  tmcfe::Ciphertext ciphertext;
  std::uint64_t sample_count = 0;  // feeds fedavg weights
  bool dp_applied = false;
};

// DK grant for one aggregator: its share of the functional key for every
// coordinate of the model, all cut from one polynomial sampling per label.
struct KeyGrant {
  std::string aggregator_id;
  RoundLabel label;
  codec::FusionSpec fusion;
  std::vector<tmcfe::FunctionalKeyShare> coordinate_shares;  // length L
};

// One aggregator's share-decrypt output over the whole model.
struct ModelPartial {
  std::string aggregator_id;
  unsigned share_index = 0;
  RoundLabel label;
  codec::FusionSpec fusion;
  std::vector<tmcfe::PartialDecryption> coords;  // length L
};

struct DpConfig {
  enum class Mechanism { Gaussian, Laplace };
  Mechanism mechanism = Mechanism::Gaussian;
  double scale = 0.0;  // sigma (Gaussian) or b (Laplace); calibration is the caller's concern
};

struct Decision {
  enum class Status { Granted, Pending, Rejected };
  Status status = Status::Pending;
  std::string reason;
  std::vector<tmcfe::FunctionalKeyShare> coordinate_shares;  // set iff Granted
};

struct ComplianceState {
  unsigned trust_threshold = 0;
  std::map<std::string, std::vector<DkRequest>> pending;   // label bytes -> requests
  std::map<std::string, codec::FusionSpec> issued;         // one-key-per-label ledger
};

// Trusted dealer plus DK compliance service. Owns the master secret;
// releases a key share only when >= trust_threshold mutually equal
// (fusion, label) requests exist, and never issues a second spec for the
// same label.
class CryptoInfrastructure {
 public:
  CryptoInfrastructure(const GroupParams& group, std::vector<std::string> party_ids,
                       std::vector<std::string> aggregator_ids, unsigned model_dim,
                       unsigned threshold_t, unsigned trust_threshold, std::uint64_t seed);
  CryptoInfrastructure(unsigned lambda_bits, std::vector<std::string> party_ids,
                       std::vector<std::string> aggregator_ids, unsigned model_dim,
                       unsigned threshold_t, unsigned trust_threshold, std::uint64_t seed);

  const tmcfe::PublicParams& master_params() const { return pp_; }
  unsigned model_dim() const { return model_dim_; }
  const std::vector<std::string>& party_ids() const { return party_ids_; }
  const std::vector<std::string>& aggregator_ids() const { return aggregator_ids_; }
  std::set<std::string> aggregator_id_set() const;

  unsigned party_client_index(const std::string& party_id) const;  // 1-based
  unsigned aggregator_share_index(const std::string& aggregator_id) const;  // 1-based

  tmcfe::PartySecretKey party_key(const std::string& party_id) const;

  // Per-coordinate view parameters for an active set of the given size.
  tmcfe::PublicParams view_params(unsigned active_count) const;

  Decision compliance_submit(const DkRequest& request,
                             const std::set<std::string>& all_expected);

  const ComplianceState& compliance() const { return compliance_; }

 private:
  std::vector<std::vector<tmcfe::FunctionalKeyShare>> generate_label_shares(
      const codec::FusionSpec& fusion, const std::string& label_bytes);

  tmcfe::PublicParams pp_;
  tmcfe::MasterSecretKey msk_;
  std::vector<std::string> party_ids_;
  std::vector<std::string> aggregator_ids_;
  unsigned model_dim_ = 0;
  Rng rng_;
  ComplianceState compliance_;
  // label bytes -> [coordinate][share_index-1] shares
  std::map<std::string, std::vector<std::vector<tmcfe::FunctionalKeyShare>>> share_cache_;
  mutable std::mutex mutex_;
};

struct PartyState {
  std::string id;
  tmcfe::PartySecretKey sk;
  codec::EncodingConfig enc;
  std::uint64_t sample_count = 0;
  std::set<std::string> used_labels;
};

struct AggregatorState {
  std::string id;
  unsigned share_index = 0;
  codec::FusionMode mode = codec::FusionMode::IterAvg;
  codec::EncodingConfig enc;
  std::map<std::string, double> personalized_weights;
};

struct AggregateOutcome {
  enum class Status { Produced, Pending, Denied };
  Status status = Status::Denied;
  std::optional<ModelPartial> partial;
  std::string reason;
};

// Encrypts one model update under a fresh round label. DP noise, when
// configured, is added at full scale divided by n before encoding, exactly
// where the protocol puts it.
ProtectedUpdate tdsa_protect(PartyState& party, std::span<const double> model_update,
                             const RoundLabel& label,
                             const std::optional<DpConfig>& dp = std::nullopt,
                             std::optional<std::uint64_t> seed = std::nullopt);

// Builds the dropout-aware FusionSpec from the received updates and wraps
// it as this aggregator's DK request. Throws on mixed labels (replayed
// updates) and duplicate senders.
DkRequest prepare_dk_request(const AggregatorState& aggregator,
                             const std::vector<ProtectedUpdate>& updates, const RoundLabel& label,
                             const CryptoInfrastructure& infra);

// Share-decrypts every coordinate under a granted key. Throws
// Errc::label_mismatch when any ciphertext label disagrees with the grant.
ModelPartial produce_partial(const AggregatorState& aggregator,
                             const std::vector<ProtectedUpdate>& updates, const KeyGrant& grant,
                             const CryptoInfrastructure& infra);

// prepare -> compliance_submit -> produce, in one call. Denied mirrors the
// protocol's "return none"; Pending means the quorum has not formed yet
// and the call can be retried (the same cached share comes back).
AggregateOutcome tdsa_aggregate(const AggregatorState& aggregator,
                                const std::vector<ProtectedUpdate>& updates,
                                const RoundLabel& label, CryptoInfrastructure& infra,
                                const std::set<std::string>& expected_aggregators);

// Combines >= t partials per coordinate and rescales back to floats.
std::vector<double> tdsa_recover(const PartyState& party,
                                 const std::vector<ModelPartial>& partials,
                                 const codec::EncodingConfig& enc);

}  // namespace tapfed::tdsa
