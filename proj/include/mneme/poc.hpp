#pragma once

// Proof-of-Context: location proofs, transaction acceptance and the
// per-node block state machine (propose, sign and forward, verify and add).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "mneme/context_proof.hpp"
#include "mneme/crypto.hpp"
#include "mneme/ledger.hpp"
#include "mneme/types.hpp"

namespace mneme::poc {

struct PocParams {
  std::size_t B = 4;
  std::size_t mRS = 3;
  double mD = 0.0;
  std::size_t mTr = 3;
  Slot delta = 5;
  double min_context_weight = 0.3;
  double radius = 50.0;  // neighbor-claim threshold, meters
  double phi_c = 0.5;
  Slot backoff = 2;
  std::size_t trusted_set_size = 0;  // 0 means 4 * mTr

  std::size_t trusted_size() const { return trusted_set_size ? trusted_set_size : 4 * mTr; }
  /// Throws DomainError when an invariant does not hold.
  void validate() const;
};

using ReputationTable = std::map<PublicKey, double>;

/// Mean euclidean distance over unordered pairs. Throws TooFewPoints below two.
double average_pairwise_distance(const std::vector<Point>& points);

/// Sum of the reputations of yes-answering listed neighbors over the size of
/// the claimed neighbor set. Answers from unlisted verifiers, answers bound to
/// another commitment and repeated answers are not counted.
double context_weight(const crypto::Commitment& comm,
                      const std::vector<crypto::Attestation>& attestations,
                      const ReputationTable& reputations);

/// Throws NoNeighbors when the commitment lists no neighbors.
ContextProof build_context_proof(const crypto::Commitment& comm,
                                 std::vector<crypto::Attestation> replies,
                                 const ReputationTable& reputations);

/// Commitment, every attestation and the stored weight are checked; the
/// weight must also reach min_context_weight.
bool verify_context_proof(const ContextProof& proof, const ReputationTable& reputations,
                          const PocParams& params, const PrfKey& prf_key);

/// One neighbor of a node assembling its proof.
struct Witness {
  const crypto::KeyPair* keys = nullptr;
  Point location;
};

/// Commit to (location, neighbors, now) and collect every neighbor's answer.
ContextProof prove_location(const crypto::KeyPair& self, Point location,
                            const std::vector<Witness>& neighbors, const PrfKey& prf_key,
                            double radius, Slot now, const ReputationTable& reputations);

/// Counts messages received per peer; the trusted set is the most frequent
/// peers, ties broken by key order.
class TrustTracker {
 public:
  void record(const PublicKey& from, std::uint64_t times = 1);
  std::vector<PublicKey> trusted(std::size_t size) const;
  std::uint64_t count(const PublicKey& pk) const;
  /// Pins the trusted set, overriding the contact counts.
  void pin(std::vector<PublicKey> members) { pinned_ = std::move(members); }

 private:
  std::map<PublicKey, std::uint64_t> counts_;
  std::optional<std::vector<PublicKey>> pinned_;
};

enum class TxDecision { accepted, pending, rejected };
const char* to_string(TxDecision d);

enum class BlockAction { sign_and_forward, forward_only, verify_and_add, ignore };
const char* to_string(BlockAction a);

/// Result of handling a block proposal. `block` is the version to forward or
/// the verified block; `forward_at` is later than now after a back-off.
struct BlockOutcome {
  BlockAction action = BlockAction::ignore;
  ledger::Block block;
  Slot forward_at = 0;
};

/// Memo for signature-heavy checks shared by simulated nodes. Verification is
/// a pure function of the proof and table, so sharing does not change results.
struct VerificationCache {
  std::set<Hash256> valid_proofs;
  std::set<Hash256> invalid_proofs;
};

/// One corroborator: identity, ledger view, pending pool and protocol memory.
class Corroborator {
 public:
  Corroborator(crypto::KeyPair keys, const ledger::Genesis& genesis, PocParams params);

  const PublicKey& id() const { return keys_.public_key; }
  const crypto::KeyPair& keys() const { return keys_; }
  const PocParams& params() const { return params_; }
  const PrfKey& prf_key() const { return prf_key_; }
  ledger::LedgerView& view() { return view_; }
  const ledger::LedgerView& view() const { return view_; }
  TrustTracker& trust() { return trust_; }
  const TrustTracker& trust() const { return trust_; }
  const ReputationTable& reputations() const { return view_.reputations(); }

  void set_location(Point p) { location_ = p; }
  Point location() const { return location_; }
  /// Proof attached when this node signs a block; refreshed by the driver.
  void set_context_proof(ContextProof proof) { proof_ = std::move(proof); }
  const std::optional<ContextProof>& context_proof() const { return proof_; }
  void set_cache(VerificationCache* cache) { cache_ = cache; }

  /// Records the first sighting, the forwarder keys on this copy and any
  /// spend of the same input by a different transaction.
  void observe_transaction(const ledger::Transaction& tx, Slot now);
  Slot first_seen(const Hash256& tx_id) const;
  bool conflict_seen(const Hash256& tx_id) const { return conflicted_.count(tx_id) != 0; }
  std::size_t trusted_signers(const Hash256& tx_id) const;

  /// Adds a valid, non-conflicting transaction to the pending pool. Returns
  /// false if it was not acknowledged.
  bool acknowledge(const ledger::Transaction& tx, Slot now);

  bool blacklisted(const Hash256& block) const { return blacklist_.count(block) != 0; }
  void blacklist(const Hash256& block) { blacklist_.insert(block); }

  bool proof_valid(const ContextProof& proof) const;
  /// Structural checks on a block received from the network.
  bool block_well_formed(const ledger::Block& b) const;
  bool meets_thresholds(const ledger::Block& b) const;
  ledger::BlockVerification make_verification(const ledger::Block& b, Slot now) const;
  bool verification_valid(const ledger::Block& b) const;

 private:
  crypto::KeyPair keys_;
  PocParams params_;
  PrfKey prf_key_;
  ledger::LedgerView view_;
  TrustTracker trust_;
  Point location_;
  std::optional<ContextProof> proof_;
  VerificationCache* cache_ = nullptr;

  std::map<Hash256, Slot> first_seen_;
  std::map<Hash256, std::set<PublicKey>> signers_;
  std::map<Hash256, std::set<Hash256>> spends_;  // input -> tx ids seen spending it
  std::set<Hash256> conflicted_;
  std::set<Hash256> blacklist_;
};

/// Receiver-side acceptance: at least mTr trusted forwarders, delta slots
/// since first sighting and no conflicting spend seen meanwhile. Records the
/// acceptance in the view when accepted.
TxDecision accept_transaction(Corroborator& receiver, const ledger::Transaction& tx, Slot now);

/// Packs the B highest-fee pending transactions (earlier sighting wins among
/// conflicts) into a block signed by the creator. Throws InsufficientTransactions.
ledger::Block propose_block(Corroborator& node, Slot now);

ledger::Block sign_block(const Corroborator& node, ledger::Block b);

BlockOutcome on_block_received(Corroborator& node, const ledger::Block& block, Slot now);

enum class VerifiedOutcome { added, replaced, kept_existing, ignored };

/// Handles a BLOCK_VERIFIED message. Between two verified blocks with
/// conflicting spends, the one with more signers wins, then the lower hash.
VerifiedOutcome on_verified_block(Corroborator& node, const ledger::Block& block);

/// True iff `a` is preferred over `b` by the conflict rule above.
bool preferred(const ledger::Block& a, const ledger::Block& b);

// Wire format.
enum class MessageKind : std::uint8_t { tx = 0, tx_ack = 1, block_proposal = 2, block_verified = 3 };
const char* to_string(MessageKind k);

struct TxAck {
  Hash256 tx_id;
  PublicKey acknowledger;
  std::optional<Hash256> conflicting;  // set when the acknowledger saw a double spend
  Signature signature;

  Bytes signed_bytes() const;
  friend bool operator==(const TxAck&, const TxAck&) = default;
};

TxAck make_tx_ack(const crypto::KeyPair& keys, const Hash256& tx_id,
                  std::optional<Hash256> conflicting = std::nullopt);
bool verify_tx_ack(const TxAck& ack);

struct WireMessage {
  MessageKind kind = MessageKind::tx;
  Slot origin_slot = 0;
  PublicKey sender;
  Bytes body;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

WireMessage make_message(const ledger::Transaction& tx, Slot origin_slot, const PublicKey& sender);
WireMessage make_message(const TxAck& ack, Slot origin_slot, const PublicKey& sender);
WireMessage make_message(const ledger::Block& b, bool verified, Slot origin_slot,
                         const PublicKey& sender);

Bytes encode(const WireMessage& m);
WireMessage decode_message(ByteView bytes);
TxAck decode_tx_ack(ByteView bytes);

}  // namespace mneme::poc
