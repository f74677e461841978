#include "mneme/poc.hpp"

#include <algorithm>
#include <cmath>

#include "mneme/codec.hpp"
#include "mneme/error.hpp"

namespace mneme::poc {

void PocParams::validate() const {
  if (B < 1) throw DomainError("B must be at least 1");
  if (mRS < 1) throw DomainError("mRS must be at least 1");
  if (!(mD >= 0.0)) throw DomainError("mD must be non-negative");
  if (delta < 0) throw DomainError("delta must be non-negative");
  if (!(radius > 0.0)) throw DomainError("radius must be positive");
  if (!(phi_c >= 0.0 && phi_c <= 1.0)) throw DomainError("phi_c must lie in [0, 1]");
  if (!(min_context_weight >= 0.0 && min_context_weight <= 1.0))
    throw DomainError("min_context_weight must lie in [0, 1]");
  if (backoff < 0) throw DomainError("backoff must be non-negative");
}

double average_pairwise_distance(const std::vector<Point>& points) {
  if (points.size() < 2) throw TooFewPoints("need at least two points");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) sum += distance(points[i], points[j]);
  double pairs = 0.5 * static_cast<double>(points.size()) * static_cast<double>(points.size() - 1);
  return sum / pairs;
}

double context_weight(const crypto::Commitment& comm,
                      const std::vector<crypto::Attestation>& attestations,
                      const ReputationTable& reputations) {
  auto m = comm.message();
  if (m.neighbor_ids.empty()) return 0.0;
  auto h = comm.hash();
  std::set<PublicKey> counted;
  double sum = 0.0;
  for (const auto& a : attestations) {
    if (!a.yes || !(a.commitment_hash == h) || !m.lists(a.verifier)) continue;
    if (!counted.insert(a.verifier).second) continue;
    auto it = reputations.find(a.verifier);
    if (it != reputations.end()) sum += it->second;
  }
  return sum / static_cast<double>(m.neighbor_ids.size());
}

ContextProof build_context_proof(const crypto::Commitment& comm,
                                 std::vector<crypto::Attestation> replies,
                                 const ReputationTable& reputations) {
  if (comm.message().neighbor_ids.empty()) throw NoNeighbors("empty neighbor set");
  std::sort(replies.begin(), replies.end(),
            [](const auto& a, const auto& b) { return a.verifier < b.verifier; });
  ContextProof p{comm, std::move(replies), 0.0};
  p.weight = context_weight(p.commitment, p.attestations, reputations);
  return p;
}

namespace {

bool signatures_valid(const ContextProof& proof, const PocParams& params, const PrfKey& key) {
  if (!crypto::verify_commitment(key, proof.commitment)) return false;
  auto m = proof.commitment.message();
  auto h = proof.commitment.hash();
  for (const auto& a : proof.attestations) {
    if (!(a.commitment_hash == h) || !crypto::verify_attestation(a)) return false;
    if (a.yes && (!m.lists(a.verifier) || distance(a.verifier_location, m.location) >= params.radius))
      return false;
  }
  return true;
}

Hash256 proof_digest(const ContextProof& proof) {
  ByteWriter w;
  w.fixed(proof.commitment.hash());
  for (const auto& a : proof.attestations) w.raw(a.signed_bytes()), w.fixed(a.signature);
  return crypto::sha256(w.bytes());
}

bool weight_ok(const ContextProof& proof, const ReputationTable& reputations,
               const PocParams& params) {
  auto w = context_weight(proof.commitment, proof.attestations, reputations);
  return std::abs(w - proof.weight) <= 1e-9 && proof.weight >= params.min_context_weight;
}

}  // namespace

bool verify_context_proof(const ContextProof& proof, const ReputationTable& reputations,
                          const PocParams& params, const PrfKey& prf_key) {
  return weight_ok(proof, reputations, params) && signatures_valid(proof, params, prf_key);
}

ContextProof prove_location(const crypto::KeyPair& self, Point location,
                            const std::vector<Witness>& neighbors, const PrfKey& prf_key,
                            double radius, Slot now, const ReputationTable& reputations) {
  std::vector<PublicKey> ids;
  ids.reserve(neighbors.size());
  for (const auto& n : neighbors) ids.push_back(n.keys->public_key);
  auto m = crypto::make_location_message(location, std::move(ids), now);
  auto comm = crypto::commit(self.secret_key, prf_key, m, crypto::produce_tag(prf_key, m));
  std::vector<crypto::Attestation> replies;
  replies.reserve(neighbors.size());
  for (const auto& n : neighbors)
    replies.push_back(crypto::verify_neighbor_claim(n.keys->secret_key, n.location, prf_key, comm, radius));
  return build_context_proof(comm, std::move(replies), reputations);
}

// ---------------------------------------------------------------------------

void TrustTracker::record(const PublicKey& from, std::uint64_t times) { counts_[from] += times; }

std::uint64_t TrustTracker::count(const PublicKey& pk) const {
  auto it = counts_.find(pk);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<PublicKey> TrustTracker::trusted(std::size_t size) const {
  if (pinned_) return *pinned_;
  std::vector<std::pair<std::uint64_t, PublicKey>> ranked;
  ranked.reserve(counts_.size());
  for (const auto& [pk, c] : counts_) ranked.emplace_back(c, pk);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<PublicKey> out;
  for (std::size_t i = 0; i < ranked.size() && i < size; ++i) out.push_back(ranked[i].second);
  return out;
}

const char* to_string(TxDecision d) {
  switch (d) {
    case TxDecision::accepted: return "accepted";
    case TxDecision::pending: return "pending";
    case TxDecision::rejected: return "rejected";
  }
  return "?";
}

const char* to_string(BlockAction a) {
  switch (a) {
    case BlockAction::sign_and_forward: return "sign_and_forward";
    case BlockAction::forward_only: return "forward_only";
    case BlockAction::verify_and_add: return "verify_and_add";
    case BlockAction::ignore: return "ignore";
  }
  return "?";
}

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::tx: return "TX";
    case MessageKind::tx_ack: return "TX_ACK";
    case MessageKind::block_proposal: return "BLOCK_PROPOSAL";
    case MessageKind::block_verified: return "BLOCK_VERIFIED";
  }
  return "?";
}

// ---------------------------------------------------------------------------

Corroborator::Corroborator(crypto::KeyPair keys, const ledger::Genesis& genesis, PocParams params)
    : keys_(std::move(keys)),
      params_(params),
      prf_key_(genesis.prf_key),
      view_(keys_.public_key, genesis) {
  params_.validate();
}

void Corroborator::observe_transaction(const ledger::Transaction& tx, Slot now) {
  auto id = tx.id();
  first_seen_.emplace(id, now);
  auto& signers = signers_[id];
  if (ledger::verify_forwarder_chain(tx))
    for (const auto& f : tx.forwarder_signatures) signers.insert(f.forwarder);
  for (const auto& in : ledger::spend_keys(tx)) {
    auto& spenders = spends_[in];
    spenders.insert(id);
    if (spenders.size() > 1)
      for (const auto& s : spenders) conflicted_.insert(s);
  }
}

Slot Corroborator::first_seen(const Hash256& tx_id) const {
  auto it = first_seen_.find(tx_id);
  return it == first_seen_.end() ? kNeverSlot : it->second;
}

std::size_t Corroborator::trusted_signers(const Hash256& tx_id) const {
  auto it = signers_.find(tx_id);
  if (it == signers_.end()) return 0;
  std::size_t n = 0;
  for (const auto& pk : trust_.trusted(params_.trusted_size()))
    if (it->second.count(pk)) ++n;
  return n;
}

bool Corroborator::acknowledge(const ledger::Transaction& tx, Slot now) {
  auto id = tx.id();
  if (view_.in_pending(id) || view_.is_accepted(id)) return true;
  if (conflicted_.count(id) || !ledger::verify_forwarder_chain(tx)) return false;
  try {
    ledger::check_well_formed(tx);
    if (!ledger::validate_ownership(tx, view_)) return false;
  } catch (const UnknownInput&) {
    return false;
  } catch (const DomainError&) {
    return false;
  }
  view_.add_pending(tx, now);
  return true;
}

bool Corroborator::proof_valid(const ContextProof& proof) const {
  if (!weight_ok(proof, reputations(), params_)) return false;
  if (!cache_) return signatures_valid(proof, params_, prf_key_);
  auto d = proof_digest(proof);
  if (cache_->valid_proofs.count(d)) return true;
  if (cache_->invalid_proofs.count(d)) return false;
  bool ok = signatures_valid(proof, params_, prf_key_);
  (ok ? cache_->valid_proofs : cache_->invalid_proofs).insert(d);
  return ok;
}

bool Corroborator::block_well_formed(const ledger::Block& b) const {
  if (b.kind != ledger::BlockKind::conventional) return false;
  if (b.transactions.size() != params_.B || b.signers.empty()) return false;
  auto h = b.hash();
  std::set<PublicKey> seen;
  for (const auto& s : b.signers) {
    if (!seen.insert(s.signer).second) return false;
    if (!(s.proof.commitment.committer == s.signer)) return false;
    if (!crypto::verify(s.signer, h.view(), s.signature)) return false;
    if (!proof_valid(s.proof)) return false;
  }
  if (!(b.signers.front().signer == b.creator)) return false;
  double expected = b.signers.size() < 2 ? 0.0 : average_pairwise_distance(b.signer_locations());
  return std::abs(expected - b.avg_signer_distance) <= 1e-6;
}

bool Corroborator::meets_thresholds(const ledger::Block& b) const {
  if (b.signers.size() < params_.mRS) return false;
  double avg = b.signers.size() < 2 ? 0.0 : average_pairwise_distance(b.signer_locations());
  return avg >= params_.mD;
}

ledger::BlockVerification Corroborator::make_verification(const ledger::Block& b, Slot now) const {
  ledger::BlockVerification v;
  v.verifier = id();
  v.verified_at = now;
  v.signer_count = static_cast<std::uint32_t>(b.signers.size());
  v.fee_credits = ledger::compute_fee_credits(b, params_.phi_c);
  v.signature = crypto::sign(keys_.secret_key, ledger::verification_bytes(b.hash(), v));
  return v;
}

bool Corroborator::verification_valid(const ledger::Block& b) const {
  if (!b.verification) return false;
  const auto& v = *b.verification;
  if (v.signer_count != b.signers.size()) return false;
  if (v.fee_credits != ledger::compute_fee_credits(b, params_.phi_c)) return false;
  if (!crypto::verify(v.verifier, ledger::verification_bytes(b.hash(), v), v.signature)) return false;
  return block_well_formed(b) && meets_thresholds(b);
}

// ---------------------------------------------------------------------------

TxDecision accept_transaction(Corroborator& receiver, const ledger::Transaction& tx, Slot now) {
  auto id = tx.id();
  auto& view = receiver.view();
  if (view.is_accepted(id)) return TxDecision::accepted;
  receiver.observe_transaction(tx, now);
  if (receiver.conflict_seen(id) || ledger::detect_conflict(tx, view)) return TxDecision::rejected;
  if (receiver.trusted_signers(id) < receiver.params().mTr) return TxDecision::pending;
  if (now - receiver.first_seen(id) < receiver.params().delta) return TxDecision::pending;
  view.record_acceptance(tx);
  return TxDecision::accepted;
}

ledger::Block sign_block(const Corroborator& node, ledger::Block b) {
  if (!node.context_proof()) throw NoNeighbors("no context proof available");
  ledger::SignerEntry e;
  e.signer = node.id();
  e.proof = *node.context_proof();
  e.signature = crypto::sign(node.keys().secret_key, b.hash().view());
  b.signers.push_back(std::move(e));
  b.avg_signer_distance =
      b.signers.size() < 2 ? 0.0 : average_pairwise_distance(b.signer_locations());
  return b;
}

ledger::Block propose_block(Corroborator& node, Slot now) {
  const auto& pool = node.view().pending_pool();
  const auto B = node.params().B;
  if (pool.size() < B)
    throw InsufficientTransactions(std::to_string(pool.size()) + " pending, need " +
                                   std::to_string(B));

  std::vector<const ledger::Transaction*> order;
  for (const auto& [id, tx] : pool) order.push_back(&tx);
  // Earlier sightings first so the conflict filter keeps the first-seen spend.
  std::stable_sort(order.begin(), order.end(), [&](const auto* a, const auto* b) {
    return node.view().pending_seen_at(a->id()) < node.view().pending_seen_at(b->id());
  });
  std::set<Hash256> spent;
  std::vector<const ledger::Transaction*> candidates;
  for (const auto* tx : order) {
    auto keys = ledger::spend_keys(*tx);
    bool clash = std::any_of(keys.begin(), keys.end(),
                             [&](const Hash256& in) { return spent.count(in) != 0; });
    if (clash) continue;
    spent.insert(keys.begin(), keys.end());
    candidates.push_back(tx);
  }
  if (candidates.size() < B)
    throw InsufficientTransactions(std::to_string(candidates.size()) +
                                   " non-conflicting pending, need " + std::to_string(B));
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto* a, const auto* b) {
    return a->tx_fee + a->block_fee > b->tx_fee + b->block_fee;
  });

  ledger::Block b;
  b.kind = ledger::BlockKind::conventional;
  for (std::size_t i = 0; i < B; ++i) b.transactions.push_back(*candidates[i]);
  b.parents = ledger::tips(node.view());
  b.creator = node.id();
  b.created_at = now;
  b.avg_signer_distance = 0.0;
  return sign_block(node, std::move(b));
}

namespace {

bool knows_all(const Corroborator& node, const ledger::Block& b) {
  return std::all_of(b.transactions.begin(), b.transactions.end(), [&](const auto& tx) {
    return node.view().in_pending(tx.id());
  });
}

bool conflicts_with_view(const Corroborator& node, const ledger::Block& b) {
  if (!ledger::conflict_free(b.transactions)) return true;
  return std::any_of(b.transactions.begin(), b.transactions.end(), [&](const auto& tx) {
    return ledger::detect_conflict(tx, node.view());
  });
}

BlockOutcome verify_and_add(Corroborator& node, ledger::Block b, Slot now) {
  b.verification = node.make_verification(b, now);
  auto r = node.view().add_block(b);
  if (r == ledger::LedgerView::AddResult::rejected) return {BlockAction::ignore, std::move(b), now};
  return {BlockAction::verify_and_add, std::move(b), now};
}

}  // namespace

BlockOutcome on_block_received(Corroborator& node, const ledger::Block& block, Slot now) {
  auto h = block.hash();
  if (node.blacklisted(h) || node.view().contains(h)) return {BlockAction::ignore, block, now};
  if (!node.block_well_formed(block)) return {BlockAction::ignore, block, now};
  if (conflicts_with_view(node, block)) {
    node.blacklist(h);
    return {BlockAction::ignore, block, now};
  }

  if (!block.has_signer(node.id()) && knows_all(node, block) && node.context_proof()) {
    auto signed_block = sign_block(node, block);
    if (node.meets_thresholds(signed_block)) return verify_and_add(node, std::move(signed_block), now);
    return {BlockAction::sign_and_forward, std::move(signed_block), now};
  }
  if (node.meets_thresholds(block)) return verify_and_add(node, block, now);

  auto out = block;
  Slot at = now;
  if (!block.has_signer(node.id())) {
    if (std::find(out.forwarders.begin(), out.forwarders.end(), node.id()) == out.forwarders.end())
      out.forwarders.push_back(node.id());
    if (!knows_all(node, block)) at = now + node.params().backoff;
  }
  return {BlockAction::forward_only, std::move(out), at};
}

bool preferred(const ledger::Block& a, const ledger::Block& b) {
  auto sa = a.verification ? a.verification->signer_count : 0;
  auto sb = b.verification ? b.verification->signer_count : 0;
  if (sa != sb) return sa > sb;
  return a.hash() < b.hash();
}

VerifiedOutcome on_verified_block(Corroborator& node, const ledger::Block& block) {
  auto h = block.hash();
  auto& view = node.view();
  if (view.contains(h) || node.blacklisted(h)) return VerifiedOutcome::ignored;
  if (!node.verification_valid(block) || !ledger::conflict_free(block.transactions))
    return VerifiedOutcome::ignored;

  // Stored blocks whose transactions spend an input of this block.
  std::set<Hash256> rivals;
  for (const auto& tx : block.transactions) {
    for (const auto& in : ledger::spend_keys(tx)) {
      auto it = view.accepted_tx_index().find(in);
      if (it == view.accepted_tx_index().end() || it->second == tx.id()) continue;
      for (const auto& [bh, b] : view.blocks())
        for (const auto& other : b.transactions)
          if (other.id() == it->second) rivals.insert(bh);
      if (rivals.empty()) return VerifiedOutcome::ignored;  // accepted outside any block
    }
  }
  if (rivals.empty())
    return view.add_block(block) == ledger::LedgerView::AddResult::rejected ? VerifiedOutcome::ignored
                                                                             : VerifiedOutcome::added;
  if (rivals.size() > 1) return VerifiedOutcome::kept_existing;
  const auto* current = view.find(*rivals.begin());
  if (!preferred(block, *current)) return VerifiedOutcome::kept_existing;
  return view.replace_block(*rivals.begin(), block) ? VerifiedOutcome::replaced
                                                    : VerifiedOutcome::kept_existing;
}

// ---------------------------------------------------------------------------

Bytes TxAck::signed_bytes() const {
  ByteWriter w;
  w.text("mneme/tx-ack");
  w.fixed(tx_id);
  w.fixed(acknowledger);
  w.boolean(conflicting.has_value());
  if (conflicting) w.fixed(*conflicting);
  return std::move(w).bytes();
}

TxAck make_tx_ack(const crypto::KeyPair& keys, const Hash256& tx_id,
                  std::optional<Hash256> conflicting) {
  TxAck a{tx_id, keys.public_key, conflicting, {}};
  a.signature = crypto::sign(keys.secret_key, a.signed_bytes());
  return a;
}

bool verify_tx_ack(const TxAck& ack) {
  return crypto::verify(ack.acknowledger, ack.signed_bytes(), ack.signature);
}

namespace {

Bytes encode_ack(const TxAck& a) {
  ByteWriter w;
  w.fixed(a.tx_id);
  w.fixed(a.acknowledger);
  w.boolean(a.conflicting.has_value());
  if (a.conflicting) w.fixed(*a.conflicting);
  w.fixed(a.signature);
  return std::move(w).bytes();
}

}  // namespace

TxAck decode_tx_ack(ByteView bytes) {
  ByteReader r(bytes);
  TxAck a;
  a.tx_id = r.fixed<Hash256>();
  a.acknowledger = r.fixed<PublicKey>();
  if (r.boolean()) a.conflicting = r.fixed<Hash256>();
  a.signature = r.fixed<Signature>();
  r.expect_done();
  return a;
}

WireMessage make_message(const ledger::Transaction& tx, Slot origin_slot, const PublicKey& sender) {
  return {MessageKind::tx, origin_slot, sender, ledger::encode(tx)};
}

WireMessage make_message(const TxAck& ack, Slot origin_slot, const PublicKey& sender) {
  return {MessageKind::tx_ack, origin_slot, sender, encode_ack(ack)};
}

WireMessage make_message(const ledger::Block& b, bool verified, Slot origin_slot,
                         const PublicKey& sender) {
  return {verified ? MessageKind::block_verified : MessageKind::block_proposal, origin_slot, sender,
          ledger::encode(b)};
}

Bytes encode(const WireMessage& m) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.i64(m.origin_slot);
  w.fixed(m.sender);
  w.blob(m.body);
  return std::move(w).bytes();
}

WireMessage decode_message(ByteView bytes) {
  ByteReader r(bytes);
  WireMessage m;
  auto k = r.u8();
  if (k > 3) throw DecodeError("unknown message kind");
  m.kind = static_cast<MessageKind>(k);
  m.origin_slot = r.i64();
  m.sender = r.fixed<PublicKey>();
  m.body = r.blob();
  r.expect_done();
  return m;
}

}  // namespace mneme::poc
