#pragma once

// The DAG ledger: records, one corroborator's view of them, balances and
// pruning against regenesis checkpoints.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mneme/context_proof.hpp"
#include "mneme/crypto.hpp"
#include "mneme/types.hpp"

namespace mneme::ledger {

enum class TxKind : std::uint8_t {
  normal = 0,
  conditional_self = 1,  // deposit that is burned on misbehavior
  summary = 2,           // netting transfer emitted by an equivalence proof
};

struct ForwarderSignature {
  PublicKey forwarder;
  Signature signature;
  friend bool operator==(const ForwarderSignature&, const ForwarderSignature&) = default;
};

struct Transaction {
  PublicKey sender;
  PublicKey receiver;
  Credits amount = 0;
  Credits tx_fee = 0;
  Credits block_fee = 0;
  std::vector<Hash256> inputs;  // sorted, unique
  std::vector<ForwarderSignature> forwarder_signatures;
  Slot created_at = 0;
  TxKind kind = TxKind::normal;
  std::uint64_t nonce = 0;

  /// Identity of the transfer; forwarder signatures are not covered.
  Hash256 id() const;
  Credits debit() const { return amount + tx_fee + block_fee; }
  friend bool operator==(const Transaction&, const Transaction&) = default;
};

/// Throws DomainError when a structural invariant does not hold.
void check_well_formed(const Transaction& tx);

/// A sender's claim on the credit one input block gave it. Two transactions
/// conflict when they share a spend key.
Hash256 spend_key(const Hash256& input, const PublicKey& spender);
std::vector<Hash256> spend_keys(const Transaction& tx);

/// Each forwarder signs (tx id, previous signature), so the chain order is
/// verifiable.
void append_forwarder(Transaction& tx, const SecretKey& sk);
bool verify_forwarder_chain(const Transaction& tx);

struct FeeCredit {
  PublicKey account;
  Credits amount = 0;
  friend bool operator==(const FeeCredit&, const FeeCredit&) = default;
};

struct SignerEntry {
  PublicKey signer;
  poc::ContextProof proof;
  Signature signature;  // over the block hash
  friend bool operator==(const SignerEntry&, const SignerEntry&) = default;
};

/// The verifying node's attestation that the signer set met the thresholds.
struct BlockVerification {
  PublicKey verifier;
  Slot verified_at = 0;
  std::uint32_t signer_count = 0;
  std::vector<FeeCredit> fee_credits;
  Signature signature;
  friend bool operator==(const BlockVerification&, const BlockVerification&) = default;
};

enum class BlockKind : std::uint8_t { conventional = 0, genesis = 1, summary = 2 };

struct Block {
  BlockKind kind = BlockKind::conventional;
  std::vector<Transaction> transactions;
  std::vector<Hash256> parents;  // sorted
  std::vector<SignerEntry> signers;
  double avg_signer_distance = 0.0;
  PublicKey creator;
  Slot created_at = 0;
  std::vector<PublicKey> forwarders;
  std::optional<BlockVerification> verification;

  /// Header digest: kind, creator, slot, parents and transaction ids. Stable
  /// while signers are appended along the forwarding path.
  Hash256 hash() const;
  std::vector<Point> signer_locations() const;
  bool has_signer(const PublicKey& pk) const;
  /// Genesis and summary blocks are settled by construction.
  bool settled() const { return kind != BlockKind::conventional || verification.has_value(); }
  friend bool operator==(const Block&, const Block&) = default;
};

Bytes verification_bytes(const Hash256& block_hash, const BlockVerification& v);

/// Net change per account caused by one block: senders pay amount plus fees,
/// receivers get the amount and the verification credits the fee shares.
std::map<PublicKey, Credits> balance_deltas(const Block& b);

/// True iff no two transactions share a spend key.
bool conflict_free(const std::vector<Transaction>& txs);

/// Fee credits paid when a block is verified. Transaction fees go in equal
/// shares to the distinct forwarders of that transaction (block creator if
/// none), earlier forwarders taking the remainder. Block fees: floor(phi_c
/// share) to block forwarders the same way, the rest in equal shares to the
/// signer set with the remainder to the block creator.
std::vector<FeeCredit> compute_fee_credits(const Block& b, double phi_c);

struct Genesis {
  PrfKey prf_key;
  std::uint64_t randomness = 0;
  std::map<PublicKey, double> reputations;
  std::vector<FeeCredit> allocations;

  Block block() const;
  Hash256 hash() const { return block().hash(); }
};

/// Uniform initial reputation 1.0 and `credits_each` for every key.
Genesis make_genesis(std::uint64_t seed, const std::vector<PublicKey>& accounts,
                     Credits credits_each);

struct CommitteeSignature {
  PublicKey member;
  Signature signature;
  friend bool operator==(const CommitteeSignature&, const CommitteeSignature&) = default;
};

struct RegenesisBlock {
  std::uint64_t epoch = 0;
  Hash256 prev_regenesis;
  std::vector<Hash256> summarized_headers;  // sorted
  std::vector<Block> summary_blocks;
  std::map<PublicKey, double> reputation_table;
  Credits minted = 0;
  std::vector<PublicKey> committee;  // sorted
  std::uint64_t randomness = 0;
  std::vector<PublicKey> burned;
  std::vector<CommitteeSignature> committee_signatures;

  /// Digest of everything except the committee signatures.
  Hash256 digest() const;
  friend bool operator==(const RegenesisBlock&, const RegenesisBlock&) = default;
};

/// Counts distinct committee members with a valid signature over digest().
std::size_t valid_committee_signatures(const RegenesisBlock& rb);

class LedgerView {
 public:
  enum class AddResult { added, orphaned, duplicate, rejected };

  LedgerView(PublicKey owner, const Genesis& genesis);

  const PublicKey& owner() const { return owner_; }
  const Hash256& genesis_hash() const { return genesis_hash_; }

  /// Buffers blocks whose parents are unknown and attaches them once the
  /// parents arrive. Rejects blocks whose transactions conflict internally.
  AddResult add_block(Block b);
  /// Replaces a stored conventional block that has no children.
  bool replace_block(const Hash256& old_hash, Block b);

  bool contains(const Hash256& h) const { return blocks_.count(h) != 0; }
  bool is_summarized(const Hash256& h) const { return archived_.count(h) != 0; }
  const Block* find(const Hash256& h) const;
  const std::map<Hash256, Block>& blocks() const { return blocks_; }
  std::size_t orphan_count() const { return orphans_.size(); }
  bool has_children(const Hash256& h) const;

  /// Credits the given block assigns to `who`; nullopt if the hash is unknown.
  std::optional<Credits> credited_by(const Hash256& block, const PublicKey& who) const;

  // Transaction acceptance. Spend key -> accepted transaction id.
  const std::map<Hash256, Hash256>& accepted_tx_index() const { return accepted_index_; }
  void record_acceptance(const Transaction& tx);
  bool is_accepted(const Hash256& tx_id) const;

  // P_i(t): acknowledged transactions awaiting a block.
  void add_pending(const Transaction& tx, Slot seen_at);
  bool in_pending(const Hash256& tx_id) const { return pending_.count(tx_id) != 0; }
  void remove_pending(const Hash256& tx_id);
  const std::map<Hash256, Transaction>& pending_pool() const { return pending_; }
  Slot pending_seen_at(const Hash256& tx_id) const;

  const std::vector<Hash256>& regenesis_chain() const { return regenesis_chain_; }
  const std::map<PublicKey, double>& reputations() const { return reputations_; }

  /// Balance of every account touched by settled blocks, reserved accounts included.
  std::map<PublicKey, Credits> balances() const;
  /// Approximate storage cost: bytes of canonical encodings of stored blocks.
  std::size_t storage_bytes() const;
  bool is_acyclic() const;

  /// Removes summarized blocks, installs the summary blocks and adopts the
  /// new reputation table. Called by prune().
  std::size_t apply_regenesis(const RegenesisBlock& rb);

 private:
  void attach(Block b);
  void attach_ready_orphans();
  bool parents_known(const Block& b) const;

  PublicKey owner_;
  Hash256 genesis_hash_;
  std::map<Hash256, Block> blocks_;
  std::map<Hash256, std::set<Hash256>> children_;
  std::map<Hash256, Block> orphans_;
  std::map<Hash256, std::map<PublicKey, Credits>> archived_;
  std::map<Hash256, Hash256> accepted_index_;
  std::set<Hash256> accepted_;
  std::map<Hash256, Transaction> pending_;
  std::map<Hash256, Slot> pending_seen_;
  std::vector<Hash256> regenesis_chain_;
  std::map<PublicKey, double> reputations_;
};

std::vector<Hash256> tips(const LedgerView& view);

/// True iff every input is known, the inputs credit the sender with at least
/// amount plus fees and no input is already spent by another accepted
/// transaction. Throws UnknownInput when an input is not in the view.
bool validate_ownership(const Transaction& tx, const LedgerView& view);

/// True iff some input is already spent by a different accepted transaction.
bool detect_conflict(const Transaction& tx, const LedgerView& view);

Credits balance(const LedgerView& view, const PublicKey& who);

/// Sum over non-reserved accounts.
Credits total_supply(const std::map<PublicKey, Credits>& balances);

/// Applies a regenesis block with at least `quorum` committee signatures.
/// Throws UnverifiedRegenesis otherwise. Returns the number of deleted blocks.
std::size_t prune(LedgerView& view, const RegenesisBlock& rb, std::size_t quorum);

/// Debug dump: blocks, edges and balances as a JSON document.
std::string export_snapshot(const LedgerView& view);

// Canonical encodings.
Bytes encode(const Transaction& tx);
Transaction decode_transaction(ByteView bytes);
Bytes encode(const Block& b);
Block decode_block(ByteView bytes);
Bytes encode(const RegenesisBlock& rb);
RegenesisBlock decode_regenesis(ByteView bytes);

}  // namespace mneme::ledger
