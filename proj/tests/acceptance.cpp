// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mneme/adversary.hpp"
#include "mneme/error.hpp"
#include "mneme/experiments.hpp"
#include "mneme/ledger.hpp"
#include "mneme/netsim.hpp"
#include "mneme/poe.hpp"
#include "mneme/random.hpp"
#include "mneme/scenario.hpp"

using namespace mneme;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

netsim::SimConfig world(std::uint32_t population, std::uint64_t seed) {
  netsim::SimConfig c;
  c.width = c.height = 500;
  c.population = population;
  c.radio = netsim::RadioSpec::parse("wifi_direct");
  c.speed = 1.0;
  c.seed = seed;
  return c;
}

double mean_final_spread(std::uint32_t population, int seeds) {
  double sum = 0;
  for (int s = 1; s <= seeds; ++s) sum += experiments::spread_run(world(population, s), 100).curve.back();
  return sum / seeds;
}

void spread_large() {
  auto t0 = std::chrono::steady_clock::now();
  double m = mean_final_spread(1000, 20);
  double secs = seconds_since(t0);
  report(1, m >= 0.95 && secs <= 60, "spread N=1000",
         fmt("mean final informed %.4f (need >= 0.95), %.1f s (need <= 60)", m, secs));
}

void spread_sparse() {
  double m = mean_final_spread(100, 20);
  report(2, m < 0.80, "spread N=100", fmt("mean final informed %.4f (need < 0.70 +/- 0.10)", m));
}

void delta_rule() {
  poc::PocParams p;
  p.delta = 5;
  p.mTr = 3;
  double sum = 0, lo = 1;
  int accepted = 0;
  for (int s = 1; s <= 20; ++s) {
    auto c = world(1000, s);
    c.duration = 300;
    auto r = experiments::delta_rule_run(c, p, 100, 300);
    if (!r.accepted) continue;
    ++accepted;
    sum += r.informed_fraction;
    lo = std::min(lo, r.informed_fraction);
  }
  double m = accepted ? sum / accepted : 0.0;
  report(3, accepted == 20 && m >= 0.90, "delta rule",
         fmt("%d/20 accepted, mean informed at acceptance %.4f (need >= 0.90), min %.4f", accepted, m, lo));
}

void silent() {
  adversary::AdversaryConfig a;
  a.fraction = 0.99;
  a.strategy = adversary::Strategy::silent;
  double sum = 0;
  for (int s = 1; s <= 20; ++s) {
    auto c = world(1000, s);
    sum += experiments::spread_run(c, 5000, adversary::choose_malicious(a, c.population, s)).curve.back();
  }
  report(4, sum / 20 > 0.60, "silent f=0.99", fmt("mean delivery %.4f over 20 seeds, 5000 slots (need > 0.60)", sum / 20));
}

void poe_termination() {
  auto t0 = std::chrono::steady_clock::now();
  poe::EpochConfig e;
  e.K = 1000;
  e.K_m = 50;
  e.T = 5000;
  int short_ok = 0, long_ok = 0;
  for (int s = 1; s <= 40; ++s) {
    auto c = world(1000, s);
    c.radio = netsim::RadioSpec::parse("bluetooth");
    c.duration = 5000;
    auto r = experiments::poe_termination_run(c, e, {500, 5000});
    short_ok += r.success.at(500);
    long_ok += r.success.at(5000);
  }
  double f500 = short_ok / 40.0, f5000 = long_ok / 40.0;
  double secs = seconds_since(t0);
  report(5, f500 >= 0.60 && f500 <= 0.90 && f5000 == 1.0 && secs <= 600, "PoE termination",
         fmt("500 slots %.3f (need [0.60, 0.90]), 5000 slots %.3f (need 1.0), %.0f s", f500, f5000, secs));
}

void double_spend() {
  int runs = 0, violations = 0, skipped = 0;
  for (auto strategy : {adversary::Strategy::double_spend, adversary::Strategy::wormhole}) {
    adversary::AdversaryConfig a;
    a.fraction = 0.05;
    a.strategy = strategy;
    int connected = 0;
    for (std::uint64_t s = 1; connected < 50 && s <= 200; ++s) {
      auto c = world(1000, s);
      c.duration = 300;
      auto r = experiments::double_spend_run(c, poc::PocParams{}, a, 50, 300, {});
      if (!r.connected) {
        ++skipped;
        continue;
      }
      ++connected;
      ++runs;
      violations += r.violation.at(r.network_delta);
    }
  }
  report(6, runs == 100 && violations == 0, "double-spend safety",
         fmt("%d runs with delta = network Delta, %d with two conflicting acceptances, %d disconnected skipped",
             runs, violations, skipped));
}

// Independent balance oracle over the raw transfers.
std::map<PublicKey, Credits> oracle(const std::vector<ledger::Block>& blocks) {
  std::map<PublicKey, Credits> d;
  for (const auto& b : blocks)
    for (const auto& tx : b.transactions) {
      d[tx.sender] -= tx.amount + tx.tx_fee + tx.block_fee;
      d[tx.receiver] += tx.amount;
    }
  return d;
}

std::map<PublicKey, Credits> applied(const std::vector<ledger::Block>& blocks) {
  std::map<PublicKey, Credits> d;
  for (const auto& b : blocks)
    for (const auto& tx : b.transactions) {
      d[tx.sender] -= tx.amount;
      d[tx.receiver] += tx.amount;
    }
  return d;
}

void strip_zero(std::map<PublicKey, Credits>& m, const PublicKey& skip) {
  m.erase(skip);
  std::erase_if(m, [](const auto& kv) { return kv.second == 0; });
}

ledger::Transaction transfer(const PublicKey& from, const PublicKey& to, Credits amount, std::uint64_t input) {
  ledger::Transaction tx;
  tx.sender = from;
  tx.receiver = to;
  tx.amount = amount;
  Bytes b(8);
  for (int k = 0; k < 8; ++k) b[k] = static_cast<std::uint8_t>(input >> (8 * k));
  tx.inputs = {crypto::sha256(b)};
  return tx;
}

ledger::Block block(std::vector<ledger::Transaction> txs, Slot at, const PublicKey& creator) {
  ledger::Block b;
  b.transactions = std::move(txs);
  b.created_at = at;
  b.creator = creator;
  b.verification = ledger::BlockVerification{};
  return b;
}

void netting() {
  std::vector<crypto::KeyPair> k;
  for (int i = 0; i < 16; ++i) k.push_back(crypto::generate_keypair(3000 + i));
  auto vu = virtual_user();
  int bad_balance = 0, grew = 0;
  std::uint64_t input = 0;
  for (std::uint64_t epoch = 0; epoch < 1000; ++epoch) {
    Rng rng(epoch + 1);
    std::size_t users = 2 + rng.below(k.size() - 1);
    std::size_t nblocks = 1 + rng.below(12);
    std::vector<ledger::Block> blocks;
    for (std::size_t b = 0; b < nblocks; ++b) {
      std::vector<ledger::Transaction> txs;
      std::size_t ntx = 1 + rng.below(4);
      for (std::size_t t = 0; t < ntx; ++t) {
        auto s = rng.below(users);
        auto r = (s + 1 + rng.below(users - 1)) % users;
        auto tx = transfer(k[s].public_key, k[r].public_key, 1 + static_cast<Credits>(rng.below(50)), ++input);
        tx.tx_fee = static_cast<Credits>(rng.below(3));
        tx.block_fee = static_cast<Credits>(rng.below(3));
        txs.push_back(tx);
      }
      blocks.push_back(block(std::move(txs), static_cast<Slot>(b), k[rng.below(users)].public_key));
    }
    auto out = poe::summarize_epoch(blocks, std::map<PublicKey, Credits>{}, 4, epoch);
    auto want = oracle(blocks), got = applied(out);
    strip_zero(want, vu);
    strip_zero(got, vu);
    bad_balance += want != got;
    grew += out.size() > blocks.size();
  }

  // Worked example: four users, eight transfers, fee 3 split over A, B and D.
  const auto &A = k[0].public_key, &B = k[1].public_key, &C = k[2].public_key, &D = k[3].public_key;
  auto b1 = block({transfer(A, B, 5, 1 << 20), transfer(A, C, 2, (1 << 20) + 1), transfer(A, D, 2, (1 << 20) + 2),
                   transfer(B, D, 1, (1 << 20) + 3)}, 1, A);
  auto b2 = block({transfer(D, C, 2, (1 << 20) + 4), transfer(B, A, 1, (1 << 20) + 5),
                   transfer(C, A, 1, (1 << 20) + 6), transfer(C, D, 1, (1 << 20) + 7)}, 2, B);
  auto ex = poe::summarize_epoch({b1, b2}, std::vector<PublicKey>{A, B, D}, 3, 4);
  std::map<std::pair<PublicKey, PublicKey>, Credits> got;
  std::size_t ntx = 0;
  for (const auto& b : ex)
    for (const auto& tx : b.transactions) {
      got[{tx.sender, tx.receiver}] = tx.amount;
      ++ntx;
    }
  bool example = ntx == 4 && got[{A, vu}] == 6 && got[{vu, B}] == 4 && got[{vu, C}] == 2 && got[{vu, D}] == 3;
  report(7, bad_balance == 0 && grew == 0 && example, "netting oracle",
         fmt("1000 epochs: %d balance mismatches, %d block-count increases; example 6/4/2/3 %s", bad_balance,
             grew, example ? "reproduced" : "not reproduced"));
}

void collusion() {
  auto small = adversary::p_credit_stealing_bound(100, 10, 10);
  auto large = adversary::p_credit_stealing_bound(1000, 100, 100);
  bool small_below = small.exact_log2 < -28;
  bool large_below = large.exact_log2 < -475;
  bool consistent = small.exact_log2 <= small.printed_log2;
  report(8, small_below && large_below && consistent, "collusion bound",
         fmt("exact tail (100,10,10) = 2^%.2f (%s 2^-28), (1000,100,100) = 2^%.2f (%s 2^-475), "
             "printed bound (100,10,10) = 2^%.2f, exact <= printed %s",
             small.exact_log2, small_below ? "<" : "not <", large.exact_log2, large_below ? "<" : "not <",
             small.printed_log2, consistent ? "yes" : "no"));
}

void rgg_connectivity() {
  const std::size_t N = 200, trials = 1000;
  const double R = 2.0 * std::log(double(N)) / double(N);
  std::size_t connected = 0;
  for (std::uint64_t s = 1; s <= trials; ++s) {
    Rng rng(s);
    connected += netsim::rgg_components(netsim::uniform_positions(N, 1, 1, rng), R).size() == 1;
  }
  double f = double(connected) / trials;
  report(9, f >= 0.99, "RGG connectivity", fmt("N=200, N R = 2 ln N: connected in %.3f of 1000 seeds (need >= 0.99)", f));
}

void degree_formula() {
  bool ok = true;
  std::string detail;
  for (std::size_t n : {200u, 500u, 1000u}) {
    double sum = 0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
      Rng rng(s);
      sum += netsim::mean_degree(netsim::uniform_positions(n, 1, 1, rng), 0.1);
    }
    double emp = sum / 10, want = netsim::expected_neighbors(double(n), 0.1);
    double rel = std::abs(emp - want) / want;
    ok = ok && rel <= 0.10;
    detail += fmt("N=%zu empirical %.3f vs %.3f (%.1f%%); ", n, emp, want, 100 * rel);
  }
  report(10, ok, "degree formula", detail);
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = os.str();
  }
  return out;
}

void determinism() {
  auto s = scenario::load_scenario(fs::path(MNEME_SCENARIO_DIR) / "fig5b_populations.json");
  auto base = fs::temp_directory_path() / "mneme_acceptance_det";
  fs::remove_all(base);
  scenario::run(s, base / "a", 1);
  scenario::run(s, base / "b", 2);
  auto a = read_tree(base / "a"), b = read_tree(base / "b");
  report(11, !a.empty() && a == b, "determinism",
         fmt("fig5b_populations run twice: %zu files, %s", a.size(), a == b ? "byte-identical" : "differ"));
  fs::remove_all(base);
}

void poc_thresholds() {
  std::size_t blocks = 0, verified = 0, min_signers = SIZE_MAX;
  double min_margin = INFINITY;
  std::string error;
  for (std::uint64_t s = 1; blocks < 1000 && s <= 30 && error.empty(); ++s) {
    auto c = world(200, s);
    try {
      auto r = experiments::poc_protocol_run(c, poc::PocParams{}, 100, 20);
      blocks += r.blocks;
      verified += r.verified;
      if (r.verified) {
        min_signers = std::min(min_signers, r.min_signers_seen);
        min_margin = std::min(min_margin, r.min_margin);
      }
    } catch (const RuntimeViolation& e) {
      error = e.what();
    }
  }
  report(12, error.empty() && blocks >= 1000 && verified > 0, "PoC threshold exactness",
         error.empty() ? fmt("%zu fuzzed blocks, %zu verified, none below mRS or mD (smallest margin %.4f)",
                             blocks, verified, min_margin)
                       : error);
}

}  // namespace

int main() {
  std::vector<std::pair<int, void (*)()>> criteria{
      {1, spread_large}, {2, spread_sparse}, {3, delta_rule},      {4, silent},
      {5, poe_termination}, {6, double_spend}, {7, netting},        {8, collusion},
      {9, rgg_connectivity}, {10, degree_formula}, {11, determinism}, {12, poc_thresholds}};
  for (auto [id, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, "criterion", std::string("threw: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures ? 1 : 0;
}
