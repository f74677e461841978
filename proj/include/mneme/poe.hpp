#pragma once

// Proof-of-Equivalence: committee selection, epoch netting through the
// virtual user, equivalence proofs and the regenesis round.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mneme/crypto.hpp"
#include "mneme/ledger.hpp"
#include "mneme/types.hpp"

namespace mneme::poe {

using ReputationTable = std::map<PublicKey, double>;

struct EpochConfig {
  Slot T = 500;
  std::size_t K = 10;
  std::size_t K_m = 7;
  std::optional<Credits> minted;  // defaults to 3 * K
  double phi_d = 0.5;
  std::size_t B = 4;
  double epsilon = 1.0;  // reputation smoothing, in credits
  Credits deposit = 10;  // conditional self deposit burned on divergence

  Credits xi() const { return minted ? *minted : 3 * static_cast<Credits>(K); }
  std::size_t initiator_count() const { return (K + 3) / 4; }
  /// Throws DomainError when an invariant does not hold.
  void validate() const;
};

/// K distinct keys, weighted by reputation, without replacement. Every node
/// computes the same committee from the same inputs. Sorted by key.
/// Throws InsufficientPopulation when fewer than K keys have positive weight.
std::vector<PublicKey> select_committee(const ReputationTable& reputations, std::size_t K,
                                        std::uint64_t randomness);

/// Members allowed to initiate: the `count` lowest hashes of (key, randomness).
std::vector<PublicKey> select_initiators(const std::vector<PublicKey>& committee,
                                         std::uint64_t randomness, std::size_t count);

/// Blocks sorted by (created_at, hash).
std::vector<ledger::Block> canonical_order(std::vector<ledger::Block> blocks);

/// Sum of balance deltas. Throws ConflictingEpoch if two transactions spend
/// the same input.
std::map<PublicKey, Credits> net_deltas(const std::vector<ledger::Block>& blocks);

/// Equal shares; the remainder goes one credit each to the first keys.
std::map<PublicKey, Credits> split_equally(Credits total, const std::vector<PublicKey>& among);

/// Netting blocks: each account whose delta plus allocation is negative pays
/// the virtual user, the virtual user pays each positive one. Blocks hold
/// max(B, ceil(n / |blocks|)) transactions so the count never grows.
std::vector<ledger::Block> summarize_epoch(const std::vector<ledger::Block>& blocks,
                                           const std::map<PublicKey, Credits>& allocation,
                                           std::size_t B, std::uint64_t epoch = 0);

/// `fees` split equally across the committee.
std::vector<ledger::Block> summarize_epoch(const std::vector<ledger::Block>& blocks,
                                           const std::vector<PublicKey>& committee, Credits fees,
                                           std::size_t B, std::uint64_t epoch = 0);

struct EquivalenceProof {
  std::vector<Hash256> epoch_blocks;  // sorted
  std::vector<ledger::Block> summary_blocks;
  std::map<PublicKey, Credits> allocation;
  PublicKey producer;
  Signature signature;

  Hash256 digest() const;
};

EquivalenceProof produce_equivalence_proof(const crypto::KeyPair& producer,
                                           const std::vector<ledger::Block>& blocks,
                                           const std::map<PublicKey, Credits>& allocation,
                                           std::size_t B, std::uint64_t epoch = 0);

/// Recomputes both sides independently: deltas of the epoch blocks plus the
/// allocation must equal the deltas of the summary, account by account.
bool verify_equivalence_proof(const EquivalenceProof& proof,
                              const std::vector<ledger::Block>& epoch_blocks);

/// Exact binomial upper tail when every theta is equal (a single theta means
/// homogeneous), normal approximation with continuity correction otherwise.
double poe_termination_probability(const std::vector<double>& theta, std::size_t K,
                                   std::size_t K_m);

/// Fee credits received in the given blocks.
std::map<PublicKey, Credits> collected_fees(const std::vector<ledger::Block>& blocks);

/// r_i = (fees_i + eps) / sum(fees_j + eps) over the active accounts.
ReputationTable update_reputations(const std::vector<PublicKey>& active,
                                   const std::map<PublicKey, Credits>& fees, double epsilon);

struct MemberState {
  crypto::KeyPair keys;
  std::vector<ledger::Block> view;  // epoch blocks this member holds
  /// Slot at which this member's answer reaches the initiator.
  Slot reachable_at = 0;
  /// Members with an incomplete view sign their own proposal when true and
  /// abstain otherwise.
  bool signs_own_view = false;
};

struct RoundInput {
  std::uint64_t epoch = 0;
  Hash256 prev_regenesis;
  std::uint64_t randomness = 0;
  Slot deadline = 0;  // epoch end
  EpochConfig config;
  std::vector<PublicKey> committee;  // sorted
  std::vector<MemberState> members;  // committee members, any order
  std::vector<ledger::Block> scope;  // blocks the round must summarize
  std::vector<PublicKey> active;
  std::vector<PublicKey> deletion_forwarders;
};

struct RoundOutcome {
  bool success = false;
  std::optional<ledger::RegenesisBlock> block;
  std::optional<PublicKey> initiator;
  std::size_t signatures = 0;
  std::vector<PublicKey> divergent;
  /// On failure: the epoch blocks the next round must also cover.
  std::vector<ledger::Block> carried_over;
};

/// Runs one round: the first initiator holding the whole scope builds the canonical
/// proposal, members holding the same view sign it, members that sign a
/// different proposal are excluded and their deposits burned. Succeeds when
/// at least K_m signatures arrive by the deadline.
RoundOutcome run_regenesis_round(const RoundInput& in);

/// The regenesis block a member would propose from its own view.
ledger::RegenesisBlock build_proposal(const RoundInput& in, const std::vector<ledger::Block>& view,
                                      const std::vector<PublicKey>& burned);

enum class PoeMessageKind : std::uint8_t { proposal = 0, signature = 1, final_block = 2 };
const char* to_string(PoeMessageKind k);

struct PoeMessage {
  PoeMessageKind kind = PoeMessageKind::proposal;
  std::uint64_t epoch = 0;
  Bytes body;
  friend bool operator==(const PoeMessage&, const PoeMessage&) = default;
};

PoeMessage make_proposal(const ledger::RegenesisBlock& rb);
PoeMessage make_signature(std::uint64_t epoch, const ledger::CommitteeSignature& sig);
PoeMessage make_final(const ledger::RegenesisBlock& rb);
Bytes encode(const PoeMessage& m);
PoeMessage decode_poe_message(ByteView bytes);
ledger::CommitteeSignature decode_committee_signature(ByteView bytes);

}  // namespace mneme::poe
