#include "mneme/ledger.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "mneme/codec.hpp"
#include "mneme/error.hpp"

namespace mneme::ledger {
namespace {

void write_hashes(ByteWriter& w, const std::vector<Hash256>& hs) {
  w.u32(static_cast<std::uint32_t>(hs.size()));
  for (const auto& h : hs) w.fixed(h);
}

std::vector<Hash256> read_hashes(ByteReader& r) {
  std::vector<Hash256> hs(r.u32());
  for (auto& h : hs) h = r.fixed<Hash256>();
  return hs;
}

void write_keys(ByteWriter& w, const std::vector<PublicKey>& ks) {
  w.u32(static_cast<std::uint32_t>(ks.size()));
  for (const auto& k : ks) w.fixed(k);
}

std::vector<PublicKey> read_keys(ByteReader& r) {
  std::vector<PublicKey> ks(r.u32());
  for (auto& k : ks) k = r.fixed<PublicKey>();
  return ks;
}

void write_tx_body(ByteWriter& w, const Transaction& tx) {
  w.fixed(tx.sender);
  w.fixed(tx.receiver);
  w.i64(tx.amount);
  w.i64(tx.tx_fee);
  w.i64(tx.block_fee);
  write_hashes(w, tx.inputs);
  w.i64(tx.created_at);
  w.u8(static_cast<std::uint8_t>(tx.kind));
  w.u64(tx.nonce);
}

void write_tx(ByteWriter& w, const Transaction& tx) {
  write_tx_body(w, tx);
  w.u32(static_cast<std::uint32_t>(tx.forwarder_signatures.size()));
  for (const auto& f : tx.forwarder_signatures) {
    w.fixed(f.forwarder);
    w.fixed(f.signature);
  }
}

Transaction read_tx(ByteReader& r) {
  Transaction tx;
  tx.sender = r.fixed<PublicKey>();
  tx.receiver = r.fixed<PublicKey>();
  tx.amount = r.i64();
  tx.tx_fee = r.i64();
  tx.block_fee = r.i64();
  tx.inputs = read_hashes(r);
  tx.created_at = r.i64();
  auto kind = r.u8();
  if (kind > 2) throw DecodeError("unknown transaction kind");
  tx.kind = static_cast<TxKind>(kind);
  tx.nonce = r.u64();
  tx.forwarder_signatures.resize(r.u32());
  for (auto& f : tx.forwarder_signatures) {
    f.forwarder = r.fixed<PublicKey>();
    f.signature = r.fixed<Signature>();
  }
  return tx;
}

void write_attestation(ByteWriter& w, const crypto::Attestation& a) {
  w.fixed(a.commitment_hash);
  w.boolean(a.yes);
  w.fixed(a.verifier);
  w.point(a.verifier_location);
  w.i64(a.timestamp);
  w.fixed(a.signature);
}

crypto::Attestation read_attestation(ByteReader& r) {
  crypto::Attestation a;
  a.commitment_hash = r.fixed<Hash256>();
  a.yes = r.boolean();
  a.verifier = r.fixed<PublicKey>();
  a.verifier_location = r.point();
  a.timestamp = r.i64();
  a.signature = r.fixed<Signature>();
  return a;
}

void write_credits(ByteWriter& w, const std::vector<FeeCredit>& cs) {
  w.u32(static_cast<std::uint32_t>(cs.size()));
  for (const auto& c : cs) {
    w.fixed(c.account);
    w.i64(c.amount);
  }
}

std::vector<FeeCredit> read_credits(ByteReader& r) {
  std::vector<FeeCredit> cs(r.u32());
  for (auto& c : cs) {
    c.account = r.fixed<PublicKey>();
    c.amount = r.i64();
  }
  return cs;
}

void write_block(ByteWriter& w, const Block& b) {
  w.u8(static_cast<std::uint8_t>(b.kind));
  w.fixed(b.creator);
  w.i64(b.created_at);
  write_hashes(w, b.parents);
  w.u32(static_cast<std::uint32_t>(b.transactions.size()));
  for (const auto& tx : b.transactions) write_tx(w, tx);
  w.u32(static_cast<std::uint32_t>(b.signers.size()));
  for (const auto& s : b.signers) {
    w.fixed(s.signer);
    w.blob(crypto::encode(s.proof.commitment));
    w.u32(static_cast<std::uint32_t>(s.proof.attestations.size()));
    for (const auto& a : s.proof.attestations) write_attestation(w, a);
    w.f64(s.proof.weight);
    w.fixed(s.signature);
  }
  w.f64(b.avg_signer_distance);
  write_keys(w, b.forwarders);
  w.boolean(b.verification.has_value());
  if (b.verification) {
    const auto& v = *b.verification;
    w.fixed(v.verifier);
    w.i64(v.verified_at);
    w.u32(v.signer_count);
    write_credits(w, v.fee_credits);
    w.fixed(v.signature);
  }
}

Block read_block(ByteReader& r) {
  Block b;
  auto kind = r.u8();
  if (kind > 2) throw DecodeError("unknown block kind");
  b.kind = static_cast<BlockKind>(kind);
  b.creator = r.fixed<PublicKey>();
  b.created_at = r.i64();
  b.parents = read_hashes(r);
  b.transactions.resize(r.u32());
  for (auto& tx : b.transactions) tx = read_tx(r);
  b.signers.resize(r.u32());
  for (auto& s : b.signers) {
    s.signer = r.fixed<PublicKey>();
    s.proof.commitment = crypto::decode_commitment(r.blob());
    s.proof.attestations.resize(r.u32());
    for (auto& a : s.proof.attestations) a = read_attestation(r);
    s.proof.weight = r.f64();
    s.signature = r.fixed<Signature>();
  }
  b.avg_signer_distance = r.f64();
  b.forwarders = read_keys(r);
  if (r.boolean()) {
    BlockVerification v;
    v.verifier = r.fixed<PublicKey>();
    v.verified_at = r.i64();
    v.signer_count = r.u32();
    v.fee_credits = read_credits(r);
    v.signature = r.fixed<Signature>();
    b.verification = std::move(v);
  }
  return b;
}

void write_regenesis_body(ByteWriter& w, const RegenesisBlock& rb) {
  w.u64(rb.epoch);
  w.fixed(rb.prev_regenesis);
  write_hashes(w, rb.summarized_headers);
  w.u32(static_cast<std::uint32_t>(rb.summary_blocks.size()));
  for (const auto& b : rb.summary_blocks) write_block(w, b);
  w.u32(static_cast<std::uint32_t>(rb.reputation_table.size()));
  for (const auto& [pk, r] : rb.reputation_table) {
    w.fixed(pk);
    w.f64(r);
  }
  w.i64(rb.minted);
  write_keys(w, rb.committee);
  w.u64(rb.randomness);
  write_keys(w, rb.burned);
}

void add_credit(std::map<PublicKey, Credits>& m, const PublicKey& pk, Credits c) {
  if (c != 0) m[pk] += c;
}

std::map<PublicKey, Credits> credits_of(const Block& b) {
  std::map<PublicKey, Credits> out;
  for (const auto& tx : b.transactions)
    if (tx.kind != TxKind::conditional_self) add_credit(out, tx.receiver, tx.amount);
  if (b.verification)
    for (const auto& c : b.verification->fee_credits) add_credit(out, c.account, c.amount);
  return out;
}

}  // namespace

Hash256 Transaction::id() const {
  ByteWriter w;
  w.text("mneme/tx");
  write_tx_body(w, *this);
  return crypto::sha256(w.bytes());
}

void check_well_formed(const Transaction& tx) {
  if (tx.amount < 0 || tx.tx_fee < 0 || tx.block_fee < 0)
    throw DomainError("negative credit field");
  if (!std::is_sorted(tx.inputs.begin(), tx.inputs.end()) ||
      std::adjacent_find(tx.inputs.begin(), tx.inputs.end()) != tx.inputs.end())
    throw DomainError("inputs must be sorted and unique");
  if (tx.kind == TxKind::normal && tx.inputs.empty())
    throw DomainError("normal transaction without inputs");
  if (tx.kind == TxKind::conditional_self && !(tx.sender == tx.receiver))
    throw DomainError("conditional self transaction must pay its sender");
}

namespace {
Bytes forwarder_message(const Transaction& tx, std::size_t index) {
  ByteWriter w;
  w.text("mneme/forward");
  w.fixed(tx.id());
  if (index > 0) w.fixed(tx.forwarder_signatures[index - 1].signature);
  return std::move(w).bytes();
}
}  // namespace

void append_forwarder(Transaction& tx, const SecretKey& sk) {
  ForwarderSignature f;
  f.forwarder = crypto::derive_public_key(sk);
  tx.forwarder_signatures.push_back(f);
  auto msg = forwarder_message(tx, tx.forwarder_signatures.size() - 1);
  tx.forwarder_signatures.back().signature = crypto::sign(sk, msg);
}

bool verify_forwarder_chain(const Transaction& tx) {
  for (std::size_t i = 0; i < tx.forwarder_signatures.size(); ++i) {
    const auto& f = tx.forwarder_signatures[i];
    if (!crypto::verify(f.forwarder, forwarder_message(tx, i), f.signature)) return false;
  }
  return true;
}

Hash256 Block::hash() const {
  ByteWriter w;
  w.text("mneme/block");
  w.u8(static_cast<std::uint8_t>(kind));
  w.fixed(creator);
  w.i64(created_at);
  write_hashes(w, parents);
  w.u32(static_cast<std::uint32_t>(transactions.size()));
  for (const auto& tx : transactions) w.fixed(tx.id());
  return crypto::sha256(w.bytes());
}

std::vector<Point> Block::signer_locations() const {
  std::vector<Point> pts;
  pts.reserve(signers.size());
  for (const auto& s : signers) pts.push_back(s.proof.claimed_location());
  return pts;
}

bool Block::has_signer(const PublicKey& pk) const {
  return std::any_of(signers.begin(), signers.end(),
                     [&](const SignerEntry& s) { return s.signer == pk; });
}

Bytes verification_bytes(const Hash256& block_hash, const BlockVerification& v) {
  ByteWriter w;
  w.text("mneme/verification");
  w.fixed(block_hash);
  w.fixed(v.verifier);
  w.i64(v.verified_at);
  w.u32(v.signer_count);
  write_credits(w, v.fee_credits);
  return std::move(w).bytes();
}

std::map<PublicKey, Credits> balance_deltas(const Block& b) {
  std::map<PublicKey, Credits> out;
  for (const auto& tx : b.transactions) {
    out[tx.sender] -= tx.debit();
    out[tx.receiver] += tx.amount;
  }
  if (b.verification)
    for (const auto& c : b.verification->fee_credits) out[c.account] += c.amount;
  return out;
}

Hash256 spend_key(const Hash256& input, const PublicKey& spender) {
  ByteWriter w;
  w.text("mneme/spend");
  w.fixed(input);
  w.fixed(spender);
  return crypto::sha256(w.bytes());
}

std::vector<Hash256> spend_keys(const Transaction& tx) {
  std::vector<Hash256> out;
  out.reserve(tx.inputs.size());
  for (const auto& in : tx.inputs) out.push_back(spend_key(in, tx.sender));
  return out;
}

bool conflict_free(const std::vector<Transaction>& txs) {
  std::map<Hash256, Hash256> spent;
  for (const auto& tx : txs) {
    auto id = tx.id();
    for (const auto& in : spend_keys(tx)) {
      auto [it, inserted] = spent.emplace(in, id);
      if (!inserted && !(it->second == id)) return false;
    }
  }
  return true;
}

std::vector<FeeCredit> compute_fee_credits(const Block& b, double phi_c) {
  std::map<PublicKey, Credits> out;

  auto split = [&](Credits total, const std::vector<PublicKey>& among) {
    if (total <= 0) return;
    if (among.empty()) {
      add_credit(out, b.creator, total);
      return;
    }
    auto n = static_cast<Credits>(among.size());
    auto share = total / n;
    auto rem = total % n;
    for (std::size_t i = 0; i < among.size(); ++i)
      add_credit(out, among[i], share + (static_cast<Credits>(i) < rem ? 1 : 0));
  };

  Credits block_fees = 0;
  for (const auto& tx : b.transactions) {
    block_fees += tx.block_fee;
    std::vector<PublicKey> chain;
    for (const auto& f : tx.forwarder_signatures)
      if (std::find(chain.begin(), chain.end(), f.forwarder) == chain.end())
        chain.push_back(f.forwarder);
    split(tx.tx_fee, chain);
  }

  auto to_forwarders = static_cast<Credits>(std::floor(phi_c * static_cast<double>(block_fees)));
  to_forwarders = std::clamp<Credits>(to_forwarders, 0, block_fees);
  auto to_signers = block_fees - to_forwarders;

  std::vector<PublicKey> forwarders;
  for (const auto& f : b.forwarders)
    if (std::find(forwarders.begin(), forwarders.end(), f) == forwarders.end())
      forwarders.push_back(f);
  split(to_forwarders, forwarders);

  if (to_signers > 0) {
    if (b.signers.empty()) {
      add_credit(out, b.creator, to_signers);
    } else {
      auto n = static_cast<Credits>(b.signers.size());
      for (const auto& s : b.signers) add_credit(out, s.signer, to_signers / n);
      add_credit(out, b.creator, to_signers % n);
    }
  }

  std::vector<FeeCredit> credits;
  for (const auto& [pk, c] : out) credits.push_back({pk, c});
  return credits;
}

Block Genesis::block() const {
  Block b;
  b.kind = BlockKind::genesis;
  b.creator = virtual_user();
  b.created_at = 0;
  for (std::size_t i = 0; i < allocations.size(); ++i) {
    Transaction tx;
    tx.sender = virtual_user();
    tx.receiver = allocations[i].account;
    tx.amount = allocations[i].amount;
    tx.kind = TxKind::summary;
    tx.nonce = randomness + i;
    b.transactions.push_back(std::move(tx));
  }
  return b;
}

Genesis make_genesis(std::uint64_t seed, const std::vector<PublicKey>& accounts,
                     Credits credits_each) {
  Genesis g;
  g.prf_key = crypto::derive_prf_key(seed);
  g.randomness = seed;
  for (const auto& pk : accounts) {
    g.reputations[pk] = 1.0;
    if (credits_each > 0) g.allocations.push_back({pk, credits_each});
  }
  return g;
}

Hash256 RegenesisBlock::digest() const {
  ByteWriter w;
  w.text("mneme/regenesis");
  write_regenesis_body(w, *this);
  return crypto::sha256(w.bytes());
}

std::size_t valid_committee_signatures(const RegenesisBlock& rb) {
  auto d = rb.digest();
  std::set<PublicKey> seen;
  for (const auto& s : rb.committee_signatures) {
    if (!std::binary_search(rb.committee.begin(), rb.committee.end(), s.member)) continue;
    if (seen.count(s.member)) continue;
    if (crypto::verify(s.member, d.view(), s.signature)) seen.insert(s.member);
  }
  return seen.size();
}

// ---------------------------------------------------------------------------

LedgerView::LedgerView(PublicKey owner, const Genesis& genesis)
    : owner_(owner), reputations_(genesis.reputations) {
  auto g = genesis.block();
  genesis_hash_ = g.hash();
  attach(std::move(g));
}

const Block* LedgerView::find(const Hash256& h) const {
  auto it = blocks_.find(h);
  return it == blocks_.end() ? nullptr : &it->second;
}

bool LedgerView::has_children(const Hash256& h) const {
  auto it = children_.find(h);
  return it != children_.end() && !it->second.empty();
}

bool LedgerView::parents_known(const Block& b) const {
  return std::all_of(b.parents.begin(), b.parents.end(),
                     [&](const Hash256& p) { return contains(p) || is_summarized(p); });
}

LedgerView::AddResult LedgerView::add_block(Block b) {
  if (!b.settled() || !conflict_free(b.transactions)) return AddResult::rejected;
  auto h = b.hash();
  if (contains(h) || is_summarized(h) || orphans_.count(h)) return AddResult::duplicate;
  for (const auto& tx : b.transactions)
    if (detect_conflict(tx, *this)) return AddResult::rejected;
  if (!parents_known(b)) {
    orphans_.emplace(h, std::move(b));
    return AddResult::orphaned;
  }
  attach(std::move(b));
  attach_ready_orphans();
  return AddResult::added;
}

bool LedgerView::replace_block(const Hash256& old_hash, Block b) {
  auto it = blocks_.find(old_hash);
  if (it == blocks_.end() || it->second.kind != BlockKind::conventional ||
      has_children(old_hash) || !b.settled())
    return false;
  for (const auto& tx : it->second.transactions) {
    auto id = tx.id();
    for (const auto& in : spend_keys(tx)) {
      auto ix = accepted_index_.find(in);
      if (ix != accepted_index_.end() && ix->second == id) accepted_index_.erase(ix);
    }
    accepted_.erase(id);
  }
  for (const auto& p : it->second.parents) children_[p].erase(old_hash);
  blocks_.erase(it);
  return add_block(std::move(b)) == AddResult::added;
}

void LedgerView::attach(Block b) {
  auto h = b.hash();
  for (const auto& p : b.parents) children_[p].insert(h);
  for (const auto& tx : b.transactions) {
    if (tx.kind == TxKind::summary) continue;
    record_acceptance(tx);
    remove_pending(tx.id());
  }
  blocks_.emplace(h, std::move(b));
}

void LedgerView::attach_ready_orphans() {
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = orphans_.begin(); it != orphans_.end(); ++it) {
      if (!parents_known(it->second)) continue;
      auto b = std::move(it->second);
      orphans_.erase(it);
      bool clean = std::none_of(b.transactions.begin(), b.transactions.end(),
                                [&](const Transaction& tx) { return detect_conflict(tx, *this); });
      if (clean) attach(std::move(b));
      progress = true;
      break;
    }
  }
}

std::optional<Credits> LedgerView::credited_by(const Hash256& block, const PublicKey& who) const {
  if (auto b = find(block)) {
    auto cs = credits_of(*b);
    auto it = cs.find(who);
    return it == cs.end() ? 0 : it->second;
  }
  auto it = archived_.find(block);
  if (it == archived_.end()) return std::nullopt;
  auto c = it->second.find(who);
  return c == it->second.end() ? 0 : c->second;
}

void LedgerView::record_acceptance(const Transaction& tx) {
  if (detect_conflict(tx, *this)) throw DomainError("transaction conflicts with accepted set");
  auto id = tx.id();
  for (const auto& in : spend_keys(tx)) accepted_index_.emplace(in, id);
  accepted_.insert(id);
}

bool LedgerView::is_accepted(const Hash256& tx_id) const { return accepted_.count(tx_id) != 0; }

void LedgerView::add_pending(const Transaction& tx, Slot seen_at) {
  auto id = tx.id();
  if (pending_.emplace(id, tx).second) pending_seen_[id] = seen_at;
}

void LedgerView::remove_pending(const Hash256& tx_id) {
  pending_.erase(tx_id);
  pending_seen_.erase(tx_id);
}

Slot LedgerView::pending_seen_at(const Hash256& tx_id) const {
  auto it = pending_seen_.find(tx_id);
  return it == pending_seen_.end() ? kNeverSlot : it->second;
}

std::map<PublicKey, Credits> LedgerView::balances() const {
  std::map<PublicKey, Credits> out;
  for (const auto& [h, b] : blocks_) {
    if (!b.settled()) continue;
    for (const auto& [pk, c] : balance_deltas(b)) out[pk] += c;
  }
  return out;
}

std::size_t LedgerView::storage_bytes() const {
  std::size_t total = 0;
  for (const auto& [h, b] : blocks_) total += encode(b).size();
  return total;
}

bool LedgerView::is_acyclic() const {
  std::map<Hash256, std::size_t> indegree;
  for (const auto& [h, b] : blocks_) {
    auto& d = indegree[h];
    for (const auto& p : b.parents)
      if (contains(p)) ++d;
  }
  std::deque<Hash256> ready;
  for (const auto& [h, d] : indegree)
    if (d == 0) ready.push_back(h);
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto h = ready.front();
    ready.pop_front();
    ++visited;
    auto it = children_.find(h);
    if (it == children_.end()) continue;
    for (const auto& c : it->second) {
      auto d = indegree.find(c);
      if (d != indegree.end() && --d->second == 0) ready.push_back(c);
    }
  }
  return visited == blocks_.size();
}

std::size_t LedgerView::apply_regenesis(const RegenesisBlock& rb) {
  std::size_t deleted = 0;
  for (const auto& h : rb.summarized_headers) {
    auto it = blocks_.find(h);
    if (it == blocks_.end()) {
      if (orphans_.erase(h)) ++deleted;
      archived_.emplace(h, std::map<PublicKey, Credits>{});
      continue;
    }
    archived_[h] = credits_of(it->second);
    for (const auto& p : it->second.parents) {
      auto c = children_.find(p);
      if (c != children_.end()) c->second.erase(h);
    }
    blocks_.erase(it);
    ++deleted;
  }
  for (const auto& h : rb.summarized_headers) children_.erase(h);
  for (const auto& b : rb.summary_blocks) {
    auto h = b.hash();
    if (!contains(h)) attach(b);
  }
  regenesis_chain_.push_back(rb.digest());
  if (!rb.reputation_table.empty()) reputations_ = rb.reputation_table;
  attach_ready_orphans();
  return deleted;
}

// ---------------------------------------------------------------------------

std::vector<Hash256> tips(const LedgerView& view) {
  std::vector<Hash256> out;
  for (const auto& [h, b] : view.blocks())
    if (!view.has_children(h)) out.push_back(h);
  return out;
}

bool detect_conflict(const Transaction& tx, const LedgerView& view) {
  auto id = tx.id();
  const auto& index = view.accepted_tx_index();
  for (const auto& in : spend_keys(tx)) {
    auto it = index.find(in);
    if (it != index.end() && !(it->second == id)) return true;
  }
  return false;
}

bool validate_ownership(const Transaction& tx, const LedgerView& view) {
  if (tx.inputs.empty()) return false;
  Credits funds = 0;
  for (const auto& in : tx.inputs) {
    auto c = view.credited_by(in, tx.sender);
    if (!c) throw UnknownInput("input " + in.hex().substr(0, 16) + " not in view");
    funds += *c;
  }
  if (detect_conflict(tx, view)) return false;
  return funds >= tx.debit();
}

Credits balance(const LedgerView& view, const PublicKey& who) {
  auto all = view.balances();
  auto it = all.find(who);
  return it == all.end() ? 0 : it->second;
}

Credits total_supply(const std::map<PublicKey, Credits>& balances) {
  Credits total = 0;
  for (const auto& [pk, c] : balances)
    if (!is_reserved_account(pk)) total += c;
  return total;
}

std::size_t prune(LedgerView& view, const RegenesisBlock& rb, std::size_t quorum) {
  auto sigs = valid_committee_signatures(rb);
  if (sigs < quorum)
    throw UnverifiedRegenesis(std::to_string(sigs) + " valid signatures, quorum " +
                              std::to_string(quorum));
  return view.apply_regenesis(rb);
}

std::string export_snapshot(const LedgerView& view) {
  using nlohmann::json;
  json doc;
  doc["owner"] = view.owner().hex();
  doc["genesis"] = view.genesis_hash().hex();
  json blocks = json::array();
  json edges = json::array();
  for (const auto& [h, b] : view.blocks()) {
    blocks.push_back({{"hash", h.hex()},
                      {"kind", static_cast<int>(b.kind)},
                      {"created_at", b.created_at},
                      {"transactions", b.transactions.size()},
                      {"signers", b.signers.size()},
                      {"avg_signer_distance", b.avg_signer_distance}});
    for (const auto& p : b.parents) edges.push_back({{"from", h.hex()}, {"to", p.hex()}});
  }
  json balances = json::object();
  for (const auto& [pk, c] : view.balances()) balances[pk.hex()] = c;
  json chain = json::array();
  for (const auto& h : view.regenesis_chain()) chain.push_back(h.hex());
  doc["blocks"] = std::move(blocks);
  doc["edges"] = std::move(edges);
  doc["balances"] = std::move(balances);
  doc["regenesis_chain"] = std::move(chain);
  return doc.dump(2);
}

Bytes encode(const Transaction& tx) {
  ByteWriter w;
  write_tx(w, tx);
  return std::move(w).bytes();
}

Transaction decode_transaction(ByteView bytes) {
  ByteReader r(bytes);
  auto tx = read_tx(r);
  r.expect_done();
  return tx;
}

Bytes encode(const Block& b) {
  ByteWriter w;
  write_block(w, b);
  return std::move(w).bytes();
}

Block decode_block(ByteView bytes) {
  ByteReader r(bytes);
  auto b = read_block(r);
  r.expect_done();
  return b;
}

Bytes encode(const RegenesisBlock& rb) {
  ByteWriter w;
  write_regenesis_body(w, rb);
  w.u32(static_cast<std::uint32_t>(rb.committee_signatures.size()));
  for (const auto& s : rb.committee_signatures) {
    w.fixed(s.member);
    w.fixed(s.signature);
  }
  return std::move(w).bytes();
}

RegenesisBlock decode_regenesis(ByteView bytes) {
  ByteReader r(bytes);
  RegenesisBlock rb;
  rb.epoch = r.u64();
  rb.prev_regenesis = r.fixed<Hash256>();
  rb.summarized_headers = read_hashes(r);
  rb.summary_blocks.resize(r.u32());
  for (auto& b : rb.summary_blocks) b = read_block(r);
  auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto pk = r.fixed<PublicKey>();
    rb.reputation_table[pk] = r.f64();
  }
  rb.minted = r.i64();
  rb.committee = read_keys(r);
  rb.randomness = r.u64();
  rb.burned = read_keys(r);
  rb.committee_signatures.resize(r.u32());
  for (auto& s : rb.committee_signatures) {
    s.member = r.fixed<PublicKey>();
    s.signature = r.fixed<Signature>();
  }
  r.expect_done();
  return rb;
}

}  // namespace mneme::ledger
