#include "mneme/poe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mneme/codec.hpp"
#include "mneme/error.hpp"

namespace mneme::poe {

void EpochConfig::validate() const {
  if (T < 1) throw DomainError("epoch length must be at least one slot");
  if (K < 1) throw DomainError("committee size must be positive");
  if (K_m < 1 || K_m > K) throw DomainError("quorum must lie in [1, K]");
  if (xi() < 0) throw DomainError("minted credits must be non-negative");
  if (!(phi_d >= 0.0 && phi_d <= 1.0)) throw DomainError("phi_d must lie in [0, 1]");
  if (B < 1) throw DomainError("B must be at least 1");
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (deposit < 0) throw DomainError("deposit must be non-negative");
}

namespace {

std::uint64_t hash_u64(std::string_view domain, std::uint64_t x, const PublicKey* pk) {
  ByteWriter w;
  w.text(domain);
  w.u64(x);
  if (pk) w.fixed(*pk);
  auto h = crypto::sha256(w.bytes());
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(h.bytes[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<PublicKey> select_committee(const ReputationTable& reputations, std::size_t K,
                                        std::uint64_t randomness) {
  // Exponential keys log(u) / w; the K largest form a weighted sample
  // without replacement.
  std::vector<std::pair<double, PublicKey>> keyed;
  for (const auto& [pk, r] : reputations) {
    if (!(r > 0.0)) continue;
    auto bits = hash_u64("mneme/committee", randomness, &pk) >> 11;
    double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    keyed.emplace_back(std::log(u) / r, pk);
  }
  if (keyed.size() < K)
    throw InsufficientPopulation(std::to_string(keyed.size()) + " eligible accounts, need " +
                                 std::to_string(K));
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(K), keyed.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<PublicKey> out;
  out.reserve(K);
  for (std::size_t i = 0; i < K; ++i) out.push_back(keyed[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PublicKey> select_initiators(const std::vector<PublicKey>& committee,
                                         std::uint64_t randomness, std::size_t count) {
  std::vector<std::pair<Hash256, PublicKey>> ranked;
  for (const auto& pk : committee) {
    ByteWriter w;
    w.text("mneme/initiator");
    w.fixed(pk);
    w.u64(randomness);
    ranked.emplace_back(crypto::sha256(w.bytes()), pk);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<PublicKey> out;
  for (std::size_t i = 0; i < ranked.size() && i < count; ++i) out.push_back(ranked[i].second);
  return out;
}

std::vector<ledger::Block> canonical_order(std::vector<ledger::Block> blocks) {
  std::vector<std::pair<std::pair<Slot, Hash256>, std::size_t>> keys;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    keys.push_back({{blocks[i].created_at, blocks[i].hash()}, i});
  std::sort(keys.begin(), keys.end());
  std::vector<ledger::Block> out;
  out.reserve(blocks.size());
  for (const auto& [k, i] : keys) out.push_back(std::move(blocks[i]));
  return out;
}

std::map<PublicKey, Credits> net_deltas(const std::vector<ledger::Block>& blocks) {
  std::map<Hash256, Hash256> spent;
  std::set<Hash256> seen;
  std::map<PublicKey, Credits> out;
  for (const auto& b : blocks) {
    for (const auto& tx : b.transactions) {
      auto id = tx.id();
      if (!seen.insert(id).second)
        throw ConflictingEpoch("transaction " + id.hex().substr(0, 16) + " appears twice");
      for (const auto& in : ledger::spend_keys(tx)) {
        auto [it, fresh] = spent.emplace(in, id);
        if (!fresh) throw ConflictingEpoch("input " + in.hex().substr(0, 16) + " spent twice");
      }
    }
    for (const auto& [pk, c] : ledger::balance_deltas(b)) out[pk] += c;
  }
  return out;
}

std::map<PublicKey, Credits> split_equally(Credits total, const std::vector<PublicKey>& among) {
  std::map<PublicKey, Credits> out;
  if (total <= 0 || among.empty()) return out;
  auto n = static_cast<Credits>(among.size());
  for (std::size_t i = 0; i < among.size(); ++i)
    out[among[i]] += total / n + (static_cast<Credits>(i) < total % n ? 1 : 0);
  return out;
}

std::vector<ledger::Block> summarize_epoch(const std::vector<ledger::Block>& blocks,
                                           const std::map<PublicKey, Credits>& allocation,
                                           std::size_t B, std::uint64_t epoch) {
  if (blocks.empty()) return {};
  if (B < 1) throw DomainError("B must be at least 1");
  auto net = net_deltas(canonical_order(blocks));
  for (const auto& [pk, c] : allocation) net[pk] += c;

  std::vector<ledger::Transaction> txs;
  auto make = [&](const PublicKey& from, const PublicKey& to, Credits amount) {
    ledger::Transaction tx;
    tx.sender = from;
    tx.receiver = to;
    tx.amount = amount;
    tx.kind = ledger::TxKind::summary;
    tx.created_at = static_cast<Slot>(epoch);
    tx.nonce = (epoch << 32) | txs.size();
    txs.push_back(std::move(tx));
  };
  const auto vu = virtual_user();
  for (const auto& [pk, d] : net)
    if (d < 0 && !(pk == vu)) make(pk, vu, -d);
  for (const auto& [pk, d] : net)
    if (d > 0 && !(pk == vu)) make(vu, pk, d);
  if (txs.empty()) return {};

  auto cap = std::max(B, (txs.size() + blocks.size() - 1) / blocks.size());
  std::vector<ledger::Block> out;
  for (std::size_t i = 0; i < txs.size(); i += cap) {
    ledger::Block b;
    b.kind = ledger::BlockKind::summary;
    b.creator = vu;
    b.created_at = static_cast<Slot>(epoch);
    auto end = std::min(txs.size(), i + cap);
    b.transactions.assign(txs.begin() + static_cast<std::ptrdiff_t>(i),
                          txs.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<ledger::Block> summarize_epoch(const std::vector<ledger::Block>& blocks,
                                           const std::vector<PublicKey>& committee, Credits fees,
                                           std::size_t B, std::uint64_t epoch) {
  auto sorted = committee;
  std::sort(sorted.begin(), sorted.end());
  return summarize_epoch(blocks, split_equally(fees, sorted), B, epoch);
}

// ---------------------------------------------------------------------------

Hash256 EquivalenceProof::digest() const {
  ByteWriter w;
  w.text("mneme/equivalence");
  w.u32(static_cast<std::uint32_t>(epoch_blocks.size()));
  for (const auto& h : epoch_blocks) w.fixed(h);
  w.u32(static_cast<std::uint32_t>(summary_blocks.size()));
  for (const auto& b : summary_blocks) w.blob(ledger::encode(b));
  w.u32(static_cast<std::uint32_t>(allocation.size()));
  for (const auto& [pk, c] : allocation) {
    w.fixed(pk);
    w.i64(c);
  }
  w.fixed(producer);
  return crypto::sha256(w.bytes());
}

EquivalenceProof produce_equivalence_proof(const crypto::KeyPair& producer,
                                           const std::vector<ledger::Block>& blocks,
                                           const std::map<PublicKey, Credits>& allocation,
                                           std::size_t B, std::uint64_t epoch) {
  EquivalenceProof p;
  for (const auto& b : blocks) p.epoch_blocks.push_back(b.hash());
  std::sort(p.epoch_blocks.begin(), p.epoch_blocks.end());
  p.summary_blocks = summarize_epoch(blocks, allocation, B, epoch);
  if (!blocks.empty()) p.allocation = allocation;
  p.producer = producer.public_key;
  p.signature = crypto::sign(producer.secret_key, p.digest().view());
  return p;
}

bool verify_equivalence_proof(const EquivalenceProof& proof,
                              const std::vector<ledger::Block>& epoch_blocks) {
  if (!crypto::verify(proof.producer, proof.digest().view(), proof.signature)) return false;
  std::vector<Hash256> hashes;
  for (const auto& b : epoch_blocks) hashes.push_back(b.hash());
  std::sort(hashes.begin(), hashes.end());
  if (hashes != proof.epoch_blocks) return false;
  if (proof.summary_blocks.size() > epoch_blocks.size()) return false;

  std::map<PublicKey, Credits> before;
  try {
    before = net_deltas(epoch_blocks);
  } catch (const ConflictingEpoch&) {
    return false;
  }
  for (const auto& [pk, c] : proof.allocation) before[pk] += c;
  std::map<PublicKey, Credits> after;
  for (const auto& b : proof.summary_blocks) {
    if (b.kind != ledger::BlockKind::summary) return false;
    for (const auto& tx : b.transactions) {
      if (tx.kind != ledger::TxKind::summary || tx.amount < 0) return false;
      after[tx.sender] -= tx.debit();
      after[tx.receiver] += tx.amount;
    }
  }
  // The virtual user absorbs the allocation; compare every other account.
  std::set<PublicKey> accounts;
  for (const auto& [pk, c] : before) accounts.insert(pk);
  for (const auto& [pk, c] : after) accounts.insert(pk);
  for (const auto& pk : accounts) {
    if (pk == virtual_user()) continue;
    auto b = before.count(pk) ? before.at(pk) : 0;
    auto a = after.count(pk) ? after.at(pk) : 0;
    if (a != b) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

double binomial_upper_tail(std::size_t K, std::size_t K_m, double theta) {
  if (K_m == 0) return 1.0;
  if (theta <= 0.0) return 0.0;
  if (theta >= 1.0) return 1.0;
  double lt = std::log(theta), l1 = std::log1p(-theta);
  double sum = 0.0;
  for (std::size_t k = K_m; k <= K; ++k) {
    double lc = std::lgamma(static_cast<double>(K) + 1) - std::lgamma(static_cast<double>(k) + 1) -
                std::lgamma(static_cast<double>(K - k) + 1);
    sum += std::exp(lc + static_cast<double>(k) * lt + static_cast<double>(K - k) * l1);
  }
  return std::min(1.0, sum);
}

}  // namespace

double poe_termination_probability(const std::vector<double>& theta, std::size_t K,
                                   std::size_t K_m) {
  if (K < 1 || K_m < 1 || K_m > K) throw DomainError("need 1 <= K_m <= K");
  if (theta.empty()) throw DomainError("theta is empty");
  for (double t : theta)
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("theta outside [0, 1]");
  if (theta.size() != 1 && theta.size() != K)
    throw DomainError("theta must hold one value or one per member");

  bool homogeneous = std::all_of(theta.begin(), theta.end(), [&](double t) { return t == theta[0]; });
  if (homogeneous) return binomial_upper_tail(K, K_m, theta[0]);

  double mean = 0.0, var = 0.0;
  for (double t : theta) {
    mean += t;
    var += t * (1.0 - t);
  }
  double x = static_cast<double>(K_m) - 0.5;
  if (var <= 0.0) return mean >= x ? 1.0 : 0.0;
  return 0.5 * std::erfc((x - mean) / std::sqrt(2.0 * var));
}

std::map<PublicKey, Credits> collected_fees(const std::vector<ledger::Block>& blocks) {
  std::map<PublicKey, Credits> out;
  for (const auto& b : blocks)
    if (b.verification)
      for (const auto& c : b.verification->fee_credits) out[c.account] += c.amount;
  return out;
}

ReputationTable update_reputations(const std::vector<PublicKey>& active,
                                   const std::map<PublicKey, Credits>& fees, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  ReputationTable out;
  double total = 0.0;
  for (const auto& pk : active) {
    auto it = fees.find(pk);
    double v = (it == fees.end() ? 0.0 : static_cast<double>(std::max<Credits>(0, it->second))) + epsilon;
    out[pk] = v;
  }
  for (const auto& [pk, v] : out) total += v;
  for (auto& [pk, v] : out) v /= total;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Hash256> sorted_hashes(const std::vector<ledger::Block>& blocks) {
  std::vector<Hash256> hs;
  hs.reserve(blocks.size());
  for (const auto& b : blocks) hs.push_back(b.hash());
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
  return hs;
}

std::map<PublicKey, Credits> round_allocation(const RoundInput& in, bool minting,
                                              const std::vector<PublicKey>& burned) {
  std::map<PublicKey, Credits> alloc;
  if (minting) {
    Credits xi = in.config.xi();
    Credits to_forwarders = 0;
    if (!in.deletion_forwarders.empty())
      to_forwarders = std::clamp<Credits>(
          static_cast<Credits>(std::floor(in.config.phi_d * static_cast<double>(xi))), 0, xi);
    for (const auto& [pk, c] : split_equally(xi - to_forwarders, in.committee)) alloc[pk] += c;
    auto fw = in.deletion_forwarders;
    std::sort(fw.begin(), fw.end());
    fw.erase(std::unique(fw.begin(), fw.end()), fw.end());
    for (const auto& [pk, c] : split_equally(to_forwarders, fw)) alloc[pk] += c;
  }
  for (const auto& pk : burned) {
    alloc[pk] -= in.config.deposit;
    alloc[burn_account()] += in.config.deposit;
  }
  return alloc;
}

std::uint64_t next_randomness(std::uint64_t randomness, std::uint64_t epoch) {
  return hash_u64("mneme/randomness", randomness ^ (epoch * 0x9e3779b97f4a7c15ULL), nullptr);
}

}  // namespace

ledger::RegenesisBlock build_proposal(const RoundInput& in, const std::vector<ledger::Block>& view,
                                      const std::vector<PublicKey>& burned) {
  auto ordered = canonical_order(view);
  ledger::RegenesisBlock rb;
  rb.epoch = in.epoch;
  rb.prev_regenesis = in.prev_regenesis;
  rb.summarized_headers = sorted_hashes(ordered);
  bool minting = !ordered.empty();
  auto alloc = round_allocation(in, minting, burned);
  rb.summary_blocks = summarize_epoch(ordered, alloc, in.config.B, in.epoch);
  rb.reputation_table = update_reputations(in.active, collected_fees(ordered), in.config.epsilon);
  rb.minted = minting ? in.config.xi() : 0;
  rb.committee = in.committee;
  std::sort(rb.committee.begin(), rb.committee.end());
  rb.randomness = next_randomness(in.randomness, in.epoch);
  rb.burned = burned;
  std::sort(rb.burned.begin(), rb.burned.end());
  return rb;
}

RoundOutcome run_regenesis_round(const RoundInput& in) {
  in.config.validate();
  RoundOutcome out;
  auto truth = sorted_hashes(in.scope);

  std::map<PublicKey, const MemberState*> by_key;
  std::map<PublicKey, bool> complete;
  for (const auto& m : in.members) {
    by_key[m.keys.public_key] = &m;
    complete[m.keys.public_key] = sorted_hashes(m.view) == truth;
  }

  for (const auto& pk : select_initiators(in.committee, in.randomness, in.config.initiator_count())) {
    auto it = by_key.find(pk);
    if (it != by_key.end() && complete[pk]) {
      out.initiator = pk;
      break;
    }
  }
  if (!out.initiator) {
    out.carried_over = in.scope;
    return out;
  }

  std::vector<const MemberState*> agreeing;
  for (const auto& pk : in.committee) {
    auto it = by_key.find(pk);
    if (it == by_key.end()) continue;
    const auto* m = it->second;
    if (m->reachable_at > in.deadline && !(pk == *out.initiator)) continue;
    if (complete[pk])
      agreeing.push_back(m);
    else if (m->signs_own_view)
      out.divergent.push_back(pk);
  }

  auto rb = build_proposal(in, in.scope, out.divergent);
  auto digest = rb.digest();
  for (const auto* m : agreeing)
    rb.committee_signatures.push_back(
        {m->keys.public_key, crypto::sign(m->keys.secret_key, digest.view())});
  out.signatures = ledger::valid_committee_signatures(rb);
  out.success = out.signatures >= in.config.K_m;
  if (out.success)
    out.block = std::move(rb);
  else
    out.carried_over = in.scope;
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(PoeMessageKind k) {
  switch (k) {
    case PoeMessageKind::proposal: return "REGENESIS_PROPOSAL";
    case PoeMessageKind::signature: return "REGENESIS_SIGNATURE";
    case PoeMessageKind::final_block: return "REGENESIS_FINAL";
  }
  return "?";
}

PoeMessage make_proposal(const ledger::RegenesisBlock& rb) {
  return {PoeMessageKind::proposal, rb.epoch, ledger::encode(rb)};
}

PoeMessage make_signature(std::uint64_t epoch, const ledger::CommitteeSignature& sig) {
  ByteWriter w;
  w.fixed(sig.member);
  w.fixed(sig.signature);
  return {PoeMessageKind::signature, epoch, std::move(w).bytes()};
}

PoeMessage make_final(const ledger::RegenesisBlock& rb) {
  return {PoeMessageKind::final_block, rb.epoch, ledger::encode(rb)};
}

Bytes encode(const PoeMessage& m) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.u64(m.epoch);
  w.blob(m.body);
  return std::move(w).bytes();
}

PoeMessage decode_poe_message(ByteView bytes) {
  ByteReader r(bytes);
  PoeMessage m;
  auto k = r.u8();
  if (k > 2) throw DecodeError("unknown regenesis message kind");
  m.kind = static_cast<PoeMessageKind>(k);
  m.epoch = r.u64();
  m.body = r.blob();
  r.expect_done();
  return m;
}

ledger::CommitteeSignature decode_committee_signature(ByteView bytes) {
  ByteReader r(bytes);
  ledger::CommitteeSignature s;
  s.member = r.fixed<PublicKey>();
  s.signature = r.fixed<Signature>();
  r.expect_done();
  return s;
}

}  // namespace mneme::poe
