#pragma once

// Byzantine behavior and the analytic attack bounds.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mneme/crypto.hpp"
#include "mneme/ledger.hpp"
#include "mneme/netsim.hpp"
#include "mneme/poc.hpp"

namespace mneme::adversary {

enum class Strategy { none, silent, double_spend, wormhole, poe_collusion, fake_poc };
const char* to_string(Strategy s);
/// Throws ConfigError on an unknown name.
Strategy parse_strategy(const std::string& name);

struct AdversaryConfig {
  double fraction = 0.0;  // f = |M| / |N|
  Strategy strategy = Strategy::none;
  std::vector<std::pair<netsim::NodeId, netsim::NodeId>> wormhole_links;
  std::optional<PublicKey> target;

  bool forges_blocks() const {
    return strategy == Strategy::fake_poc || strategy == Strategy::double_spend ||
           strategy == Strategy::wormhole;
  }
  /// Throws DomainError when f is outside [0, 1), a link endpoint is out of
  /// range, or a forging strategy has fewer than mRS colluders.
  void validate(std::size_t population, std::size_t mRS) const;
};

/// round(f * N) nodes drawn uniformly; wormhole endpoints are always included.
std::vector<std::uint8_t> choose_malicious(const AdversaryConfig& config, std::size_t population,
                                           std::uint64_t seed);

/// What a node does differently from the protocol.
struct Behavior {
  bool relays_honest_traffic = true;
  bool receives = true;
  bool uses_wormholes = false;
  bool issues_double_spend = false;
  bool forges_context = false;
  bool signs_colluding_regenesis = false;
};

Behavior apply_strategy(const AdversaryConfig& config, bool malicious);

/// Malicious nodes hold and receive but do not relay.
netsim::RelayPolicy silent_policy(std::vector<std::uint8_t> malicious);

/// Two transfers spending the same inputs, one to each victim.
std::pair<ledger::Transaction, ledger::Transaction> make_double_spend(
    const PublicKey& attacker, const std::vector<Hash256>& inputs, const PublicKey& victim_a,
    const PublicKey& victim_b, Credits amount, Slot now);

/// A context proof for a spoofed location, attested only by colluders who
/// claim to stand next to it.
poc::ContextProof forge_context_proof(const crypto::KeyPair& attacker, Point spoofed,
                                      const std::vector<const crypto::KeyPair*>& colluders,
                                      const PrfKey& prf_key, double radius, Slot now,
                                      const poc::ReputationTable& reputations);

/// Colluders pool their keys and sign a block at once, each with a proof
/// for an assigned spoofed location. The verification is attached when the
/// forged signer set meets the thresholds.
ledger::Block forge_block(const std::vector<const crypto::KeyPair*>& colluders,
                          const std::vector<Point>& spoofed_locations,
                          std::vector<ledger::Transaction> txs, std::vector<Hash256> parents,
                          const poc::PocParams& params, const PrfKey& prf_key, Slot now,
                          const poc::ReputationTable& reputations);

/// An honest regenesis proposal with `stolen` credits moved from `victim` to
/// `beneficiary`, signed by the colluding committee members.
ledger::RegenesisBlock collude_regenesis(ledger::RegenesisBlock honest,
                                         const std::vector<const crypto::KeyPair*>& colluders,
                                         const PublicKey& victim, const PublicKey& beneficiary,
                                         Credits stolen);

/// 1 / N_a^2. Throws DomainError for N_a < 2.
double p_double_spend_bound(double active);

struct CollusionBound {
  double printed_log2 = 0.0;  // log2 of C(N, K) / 2^M
  double approx_log2 = 0.0;   // log2 of K! / (2^M N^K)
  double exact_tail = 0.0;    // P[X >= floor(K/2) + 1], X hypergeometric
  double exact_log2 = 0.0;    // -inf when the tail is 0
};

/// Throws DomainError unless 1 <= K <= N and 0 <= M <= N.
CollusionBound p_credit_stealing_bound(std::uint64_t N, std::uint64_t K, std::uint64_t M);

/// log2 of P[X >= k] for X ~ Hypergeometric(population N, M marked, K drawn).
double hypergeometric_tail_log2(std::uint64_t N, std::uint64_t M, std::uint64_t K, std::uint64_t k);

struct AttackReport {
  Strategy strategy = Strategy::none;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  Slot delta = -1;              // acceptance wait, -1 where it does not apply
  std::string delta_source = "none";  // network, fixed or none
  std::size_t attempts = 0;
  std::size_t successes = 0;
  std::size_t violations = 0;  // honest acceptances of conflicting transfers

  static std::string header();
  std::string row() const;
};

}  // namespace mneme::adversary
