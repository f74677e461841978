#include "mneme/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mneme/error.hpp"
#include "mneme/random.hpp"

namespace mneme::adversary {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::silent: return "silent";
    case Strategy::double_spend: return "double_spend";
    case Strategy::wormhole: return "wormhole";
    case Strategy::poe_collusion: return "poe_collusion";
    case Strategy::fake_poc: return "fake_poc";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  for (auto s : {Strategy::none, Strategy::silent, Strategy::double_spend, Strategy::wormhole,
                 Strategy::poe_collusion, Strategy::fake_poc})
    if (name == to_string(s)) return s;
  throw ConfigError("unknown adversary strategy '" + name + "'");
}

void AdversaryConfig::validate(std::size_t population, std::size_t mRS) const {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw DomainError("adversary fraction must lie in [0, 1)");
  for (const auto& [a, b] : wormhole_links)
    if (a >= population || b >= population) throw DomainError("wormhole endpoint out of range");
  if (forges_blocks()) {
    auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(population)));
    if (m < mRS)
      throw DomainError("strategy " + std::string(to_string(strategy)) + " needs at least mRS = " +
                        std::to_string(mRS) + " colluders, have " + std::to_string(m));
  }
}

std::vector<std::uint8_t> choose_malicious(const AdversaryConfig& config, std::size_t population,
                                           std::uint64_t seed) {
  std::vector<std::uint8_t> mal(population, 0);
  for (const auto& [a, b] : config.wormhole_links) {
    if (a < population) mal[a] = 1;
    if (b < population) mal[b] = 1;
  }
  auto want = static_cast<std::size_t>(std::llround(config.fraction * static_cast<double>(population)));
  std::vector<std::uint32_t> ids(population);
  std::iota(ids.begin(), ids.end(), 0u);
  Rng rng(derive_seed(seed, 0xad5e));
  for (std::size_t i = population; i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  std::size_t have = static_cast<std::size_t>(std::count(mal.begin(), mal.end(), 1));
  for (std::size_t i = 0; i < population && have < want; ++i) {
    if (mal[ids[i]]) continue;
    mal[ids[i]] = 1;
    ++have;
  }
  return mal;
}

Behavior apply_strategy(const AdversaryConfig& config, bool malicious) {
  Behavior b;
  if (!malicious) return b;
  switch (config.strategy) {
    case Strategy::none: break;
    case Strategy::silent: b.relays_honest_traffic = false; break;
    case Strategy::double_spend:
      b.relays_honest_traffic = false;
      b.issues_double_spend = true;
      break;
    case Strategy::wormhole:
      b.relays_honest_traffic = false;
      b.issues_double_spend = true;
      b.uses_wormholes = true;
      break;
    case Strategy::poe_collusion: b.signs_colluding_regenesis = true; break;
    case Strategy::fake_poc:
      b.relays_honest_traffic = false;
      b.forges_context = true;
      break;
  }
  return b;
}

netsim::RelayPolicy silent_policy(std::vector<std::uint8_t> malicious) {
  return [mal = std::move(malicious)](netsim::NodeId n, netsim::MessageId) { return !mal[n]; };
}

std::pair<ledger::Transaction, ledger::Transaction> make_double_spend(
    const PublicKey& attacker, const std::vector<Hash256>& inputs, const PublicKey& victim_a,
    const PublicKey& victim_b, Credits amount, Slot now) {
  ledger::Transaction a;
  a.sender = attacker;
  a.receiver = victim_a;
  a.amount = amount;
  a.inputs = inputs;
  std::sort(a.inputs.begin(), a.inputs.end());
  a.created_at = now;
  auto b = a;
  b.receiver = victim_b;
  return {a, b};
}

poc::ContextProof forge_context_proof(const crypto::KeyPair& attacker, Point spoofed,
                                      const std::vector<const crypto::KeyPair*>& colluders,
                                      const PrfKey& prf_key, double radius, Slot now,
                                      const poc::ReputationTable& reputations) {
  // Colluders report positions just inside the radius around the spoofed claim.
  std::vector<poc::Witness> witnesses;
  for (std::size_t i = 0; i < colluders.size(); ++i) {
    if (colluders[i]->public_key == attacker.public_key) continue;
    double angle = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(colluders.size());
    Point at{spoofed.x + 0.5 * radius * std::cos(angle), spoofed.y + 0.5 * radius * std::sin(angle)};
    witnesses.push_back({colluders[i], at});
  }
  return poc::prove_location(attacker, spoofed, witnesses, prf_key, radius, now, reputations);
}

ledger::Block forge_block(const std::vector<const crypto::KeyPair*>& colluders,
                          const std::vector<Point>& spoofed_locations,
                          std::vector<ledger::Transaction> txs, std::vector<Hash256> parents,
                          const poc::PocParams& params, const PrfKey& prf_key, Slot now,
                          const poc::ReputationTable& reputations) {
  if (colluders.empty() || spoofed_locations.size() != colluders.size())
    throw DomainError("one spoofed location per colluder required");
  ledger::Block b;
  b.transactions = std::move(txs);
  std::sort(parents.begin(), parents.end());
  b.parents = std::move(parents);
  b.creator = colluders.front()->public_key;
  b.created_at = now;
  auto h = b.hash();
  for (std::size_t i = 0; i < colluders.size(); ++i) {
    ledger::SignerEntry e;
    e.signer = colluders[i]->public_key;
    e.proof = forge_context_proof(*colluders[i], spoofed_locations[i], colluders, prf_key,
                                  params.radius, now, reputations);
    e.signature = crypto::sign(colluders[i]->secret_key, h.view());
    b.signers.push_back(std::move(e));
  }
  b.avg_signer_distance =
      b.signers.size() < 2 ? 0.0 : poc::average_pairwise_distance(b.signer_locations());
  if (b.signers.size() >= params.mRS && b.avg_signer_distance >= params.mD) {
    ledger::BlockVerification v;
    v.verifier = b.creator;
    v.verified_at = now;
    v.signer_count = static_cast<std::uint32_t>(b.signers.size());
    v.fee_credits = ledger::compute_fee_credits(b, params.phi_c);
    v.signature = crypto::sign(colluders.front()->secret_key, ledger::verification_bytes(h, v));
    b.verification = std::move(v);
  }
  return b;
}

ledger::RegenesisBlock collude_regenesis(ledger::RegenesisBlock honest,
                                         const std::vector<const crypto::KeyPair*>& colluders,
                                         const PublicKey& victim, const PublicKey& beneficiary,
                                         Credits stolen) {
  ledger::Transaction tx;
  tx.sender = victim;
  tx.receiver = beneficiary;
  tx.amount = stolen;
  tx.kind = ledger::TxKind::summary;
  tx.nonce = 0xc011u;
  ledger::Block b;
  b.kind = ledger::BlockKind::summary;
  b.creator = virtual_user();
  b.created_at = static_cast<Slot>(honest.epoch);
  b.transactions.push_back(std::move(tx));
  honest.summary_blocks.push_back(std::move(b));
  honest.committee_signatures.clear();
  auto d = honest.digest();
  for (const auto* k : colluders)
    if (std::binary_search(honest.committee.begin(), honest.committee.end(), k->public_key))
      honest.committee_signatures.push_back({k->public_key, crypto::sign(k->secret_key, d.view())});
  return honest;
}

// ---------------------------------------------------------------------------

double p_double_spend_bound(double active) {
  if (!(active >= 2.0)) throw DomainError("need at least two active users");
  return 1.0 / (active * active);
}

namespace {

double log_choose(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

}  // namespace

double hypergeometric_tail_log2(std::uint64_t N, std::uint64_t M, std::uint64_t K, std::uint64_t k) {
  if (M > N || K > N) throw DomainError("need M <= N and K <= N");
  auto hi = std::min(K, M);
  auto lo = std::max<std::uint64_t>(k, K > N - M ? K - (N - M) : 0);
  if (lo > hi) return -std::numeric_limits<double>::infinity();
  double denom = log_choose(N, K);
  std::vector<double> terms;
  for (auto x = lo; x <= hi; ++x) terms.push_back(log_choose(M, x) + log_choose(N - M, K - x) - denom);
  double mx = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return (mx + std::log(s)) / std::log(2.0);
}

CollusionBound p_credit_stealing_bound(std::uint64_t N, std::uint64_t K, std::uint64_t M) {
  if (N < 1 || K < 1 || K > N || M > N)
    throw DomainError("need 1 <= K <= N and 0 <= M <= N");
  CollusionBound b;
  const double ln2 = std::log(2.0);
  b.printed_log2 = log_choose(N, K) / ln2 - static_cast<double>(M);
  b.approx_log2 = std::lgamma(static_cast<double>(K) + 1) / ln2 - static_cast<double>(M) -
                  static_cast<double>(K) * std::log2(static_cast<double>(N));
  b.exact_log2 = hypergeometric_tail_log2(N, M, K, K / 2 + 1);
  b.exact_tail = std::exp2(b.exact_log2);
  return b;
}

std::string AttackReport::header() {
  return "strategy,fraction,seed,delta,delta_source,attempts,successes,violations";
}

std::string AttackReport::row() const {
  std::ostringstream os;
  os << to_string(strategy) << ',';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", fraction);
  os << buf << ',' << seed << ',' << delta << ',' << delta_source << ',' << attempts << ','
     << successes << ',' << violations;
  return os.str();
}

}  // namespace mneme::adversary
