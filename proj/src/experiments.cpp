#include "mneme/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

#include "mneme/crypto.hpp"
#include "mneme/error.hpp"
#include "mneme/random.hpp"

namespace mneme::experiments {

using netsim::NodeId;
using netsim::World;

namespace {

// Stream indices for the per-run random draws.
constexpr std::uint64_t kOriginStream = 0x0121;
constexpr std::uint64_t kSignStream = 0x516e;
constexpr std::uint64_t kProbeStream = 0x9b0e;
constexpr std::uint64_t kVictimStream = 0xd5;
constexpr std::uint64_t kKeyStream = 0x6e1;
constexpr std::uint64_t kFuzzStream = 0xf022;

double informed_share(const World& w, netsim::MessageId m) {
  auto active = w.active_count();
  return active == 0 ? 0.0 : static_cast<double>(w.informed_count(m)) / static_cast<double>(active);
}

NodeId nearest_node(const World& w, Point p, const std::vector<std::uint8_t>& exclude = {}) {
  NodeId best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (const auto& n : w.nodes()) {
    if (!exclude.empty() && exclude[n.id]) continue;
    double d = distance(n.position, p);
    if (d < bd) {
      bd = d;
      best = n.id;
    }
  }
  return best;
}

std::vector<crypto::KeyPair> make_keys(std::uint64_t seed, std::size_t n) {
  std::vector<crypto::KeyPair> keys;
  keys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) keys.push_back(crypto::generate_keypair(derive_seed(seed ^ kKeyStream, i)));
  return keys;
}

// Signers along the forwarding path of the first copy a node received,
// excluding the injecting origin.
void collect_chain(const World& w, netsim::MessageId m, NodeId from, std::set<NodeId>& out) {
  NodeId cur = from;
  for (std::size_t guard = 0; guard <= w.size(); ++guard) {
    auto prev = w.first_from(m, cur);
    if (prev == cur) return;  // origin
    out.insert(cur);
    cur = prev;
  }
}

}  // namespace

SpreadRun spread_run(const netsim::SimConfig& config, Slot slots,
                     const std::vector<std::uint8_t>& silent, const EventSink& sink) {
  World w(config);
  SpreadRun out;
  std::vector<NodeId> honest;
  for (NodeId i = 0; i < w.size(); ++i)
    if (silent.empty() || !silent[i]) honest.push_back(i);
  if (honest.empty()) throw DomainError("no honest origin available");
  Rng pick(derive_seed(config.seed, kOriginStream));
  out.origin = honest[pick.below(honest.size())];
  if (!silent.empty()) w.set_relay_policy(adversary::silent_policy(silent));
  auto r = netsim::broadcast(w, out.origin, slots, 0, sink);
  out.curve = std::move(r.curve);
  out.events = r.events;
  return out;
}

std::vector<DeltaCell> delta_grid(const netsim::SimConfig& config, std::size_t grid, Slot horizon) {
  if (grid == 0) throw DomainError("grid must be positive");
  std::vector<DeltaCell> cells;
  World layout(config);
  layout.step();
  for (std::size_t gy = 0; gy < grid; ++gy) {
    for (std::size_t gx = 0; gx < grid; ++gx) {
      DeltaCell c;
      c.x = (static_cast<double>(gx) + 0.5) * config.width / static_cast<double>(grid);
      c.y = (static_cast<double>(gy) + 0.5) * config.height / static_cast<double>(grid);
      c.origin = nearest_node(layout, {c.x, c.y});
      World w(config);
      c.delay = netsim::delivery_delay(w, c.origin, horizon).delay;
      cells.push_back(c);
    }
  }
  return cells;
}

DeltaFitRun delta_fit_run(const netsim::SimConfig& config, std::size_t probes, Slot horizon) {
  DeltaFitRun out;
  World w(config);
  w.step();
  Rng pick(derive_seed(config.seed, kProbeStream));
  auto self = static_cast<NodeId>(pick.below(w.size()));
  std::vector<NodeId> peers;
  for (NodeId i = 0; i < w.size(); ++i)
    if (i != self) peers.push_back(i);
  for (std::size_t i = 0; i < peers.size() && i < probes; ++i)
    std::swap(peers[i], peers[i + pick.below(peers.size() - i)]);
  peers.resize(std::min(probes, peers.size()));

  auto probe = w.inject(self);
  Slot a = w.now();
  std::vector<analysis::ProbeRecord> records(peers.size());
  std::vector<std::optional<netsim::MessageId>> replies(peers.size());
  std::size_t back = 0;
  while (back < peers.size() && w.now() - a < horizon) {
    w.step();
    for (std::size_t i = 0; i < peers.size(); ++i) {
      auto& r = records[i];
      if (!replies[i] && w.informed_at(probe, peers[i]) <= w.now()) {
        r.a = a;
        r.b = w.informed_at(probe, peers[i]);
        r.c = w.now();
        r.trusted_location = w.nodes()[peers[i]].position;
        replies[i] = w.inject(peers[i]);
      } else if (replies[i] && r.reply_received == 0 && w.informed_at(*replies[i], self) <= w.now()) {
        r.reply_received = w.informed_at(*replies[i], self);
        ++back;
      }
    }
  }
  std::vector<analysis::ProbeRecord> done;
  for (std::size_t i = 0; i < peers.size(); ++i)
    if (replies[i] && records[i].reply_received != 0) done.push_back(records[i]);
  out.probes = done.size();

  World fresh(config);
  fresh.step();
  Point at = fresh.nodes()[self].position;
  out.observed = netsim::delivery_delay(fresh, self, horizon).delay;
  try {
    out.fit = analysis::fit_delta(done, at, std::max(config.width, config.height));
    out.fitted = true;
  } catch (const DegenerateDesign&) {
    out.fitted = false;
  }
  return out;
}

SignerDistanceRun signer_distance_run(const netsim::SimConfig& config, double rho, Slot backoff,
                                      Slot slots) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
  World w(config);
  w.step();
  const auto n = w.size();
  Rng draws(derive_seed(config.seed, kSignStream));
  std::vector<std::uint8_t> can_sign(n);
  for (auto& c : can_sign) c = draws.bernoulli(rho) ? 1 : 0;
  auto creator = static_cast<NodeId>(draws.below(n));
  can_sign[creator] = 1;

  struct Copy {
    std::vector<Point> signers;
    double sum = 0.0;  // pairwise distance sum
    Slot ready = kNeverSlot;
    bool signed_it = false;
  };
  std::vector<std::optional<Copy>> held(n);
  held[creator] = Copy{{w.nodes()[creator].position}, 0.0, w.now() + 1, true};

  auto metric = [&] {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& h : held) {
      if (!h || h->signers.size() < 2) continue;
      auto k = static_cast<double>(h->signers.size());
      total += h->sum / (0.5 * k * (k - 1));
      ++count;
    }
    return count ? total / static_cast<double>(count) : 0.0;
  };

  SignerDistanceRun out;
  auto& curve = out.by_slot;
  curve.push_back(metric());
  for (Slot s = 1; s <= slots; ++s) {
    w.step();
    const Slot now = w.now();
    std::vector<NodeId> offer(n, n);  // chosen sender per receiver
    auto better = [&](NodeId cand, NodeId cur) {
      if (cur == n) return true;
      const auto& a = *held[cand];
      const auto& b = *held[cur];
      if (a.signed_it != b.signed_it) return a.signed_it;
      if (a.signers.size() != b.signers.size()) return a.signers.size() > b.signers.size();
      return cand < cur;
    };
    for (const auto& [a, b] : w.contacts()) {
      for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
        if (!held[x] || held[x]->ready > now || held[y]) continue;
        if (better(x, offer[y])) offer[y] = x;
      }
    }
    for (NodeId y = 0; y < n; ++y) {
      if (offer[y] == n) continue;
      Copy c = *held[offer[y]];
      c.signed_it = can_sign[y] != 0;
      if (c.signed_it) {
        Point here = w.nodes()[y].position;
        for (const auto& p : c.signers) c.sum += distance(p, here);
        c.signers.push_back(here);
      }
      c.ready = now + 1 + (c.signed_it ? 0 : backoff);
      held[y] = std::move(c);
    }
    curve.push_back(metric());
  }
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& h : held) {
    if (!h || h->signers.size() < 2) continue;
    auto k = h->signers.size();
    auto& [sum, cnt] = acc[k];
    sum += h->sum / (0.5 * static_cast<double>(k) * static_cast<double>(k - 1));
    ++cnt;
  }
  for (const auto& [k, sc] : acc) out.by_signers[k] = sc.first / static_cast<double>(sc.second);
  return out;
}

std::map<Slot, std::vector<double>> unique_meets_run(const netsim::SimConfig& config,
                                                     const std::vector<Slot>& durations) {
  std::map<Slot, std::vector<double>> out;
  if (durations.empty()) return out;
  World w(config);
  netsim::UniqueMeetTracker tracker(w.size());
  std::set<Slot> marks(durations.begin(), durations.end());
  Slot last = *marks.rbegin();
  auto pop = static_cast<double>(w.size());
  for (Slot s = 0; s < last; ++s) {
    tracker.observe(w.step());
    if (marks.count(s + 1)) {
      auto& v = out[s + 1];
      for (auto c : tracker.counts()) v.push_back(static_cast<double>(c) / pop);
    }
  }
  return out;
}

DeltaRuleRun delta_rule_run(const netsim::SimConfig& config, const poc::PocParams& params,
                            Slot warmup, Slot horizon) {
  World w(config);
  w.set_redundant_copies(true);
  Rng pick(derive_seed(config.seed, kVictimStream));
  auto receiver = static_cast<NodeId>(pick.below(w.size()));
  auto origin = static_cast<NodeId>(pick.below(w.size() - 1));
  if (origin >= receiver) ++origin;

  std::vector<std::uint64_t> contact(w.size(), 0);
  for (Slot s = 0; s <= warmup; ++s) {
    w.step();
    for (auto other : w.neighbors(receiver)) ++contact[other];
  }
  std::vector<NodeId> order(w.size());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return contact[a] > contact[b]; });
  std::set<NodeId> trusted;
  for (NodeId id : order) {
    if (trusted.size() >= params.trusted_size() || contact[id] == 0) break;
    if (id != receiver) trusted.insert(id);
  }

  auto m = w.inject(origin);
  const Slot t0 = w.now();
  DeltaRuleRun out;
  std::set<NodeId> signers;
  auto trusted_count = [&] {
    std::size_t k = 0;
    for (auto s : signers) k += trusted.count(s);
    return k;
  };
  while (w.now() - t0 < horizon) {
    w.step();
    for (const auto& d : w.deliveries()) {
      if (d.message != m || d.to != receiver) continue;
      if (out.first_seen == kNeverSlot) out.first_seen = w.now();
      collect_chain(w, m, d.from, signers);
    }
    if (out.first_seen != kNeverSlot && w.now() >= out.first_seen + params.delta &&
        trusted_count() >= params.mTr) {
      out.accepted = true;
      out.accepted_at = w.now();
      out.informed_fraction = informed_share(w, m);
      break;
    }
  }
  return out;
}

PoeTerminationRun poe_termination_run(const netsim::SimConfig& config,
                                      const poe::EpochConfig& epoch,
                                      const std::vector<Slot>& deadlines) {
  epoch.validate();
  PoeTerminationRun out;
  if (deadlines.empty()) return out;
  const auto n = config.population;
  auto keys = make_keys(config.seed, n);
  std::map<PublicKey, NodeId> node_of;
  poe::ReputationTable reps;
  for (NodeId i = 0; i < n; ++i) {
    node_of[keys[i].public_key] = i;
    reps[keys[i].public_key] = 1.0;
  }
  const std::uint64_t randomness = derive_seed(config.seed, 0x7a0);
  auto committee = poe::select_committee(reps, epoch.K, randomness);
  auto initiators = poe::select_initiators(committee, randomness, epoch.initiator_count());
  const NodeId hub = node_of.at(initiators.front());

  // Epoch content every member already holds.
  std::vector<ledger::Block> scope;
  for (std::size_t b = 0; b < 2; ++b) {
    ledger::Block blk;
    blk.creator = keys[b].public_key;
    blk.created_at = static_cast<Slot>(b + 1);
    for (std::size_t t = 0; t < epoch.B; ++t) {
      ledger::Transaction tx;
      tx.sender = keys[(b * epoch.B + t) % n].public_key;
      tx.receiver = keys[(b * epoch.B + t + 1) % n].public_key;
      tx.amount = 1;
      tx.nonce = b * 100 + t;
      tx.inputs = {crypto::sha256(ByteView(reinterpret_cast<const std::uint8_t*>(&tx.nonce), 8))};
      blk.transactions.push_back(tx);
    }
    ledger::BlockVerification v;
    v.verifier = blk.creator;
    v.verified_at = blk.created_at;
    blk.verification = v;
    scope.push_back(blk);
  }

  World w(config);
  std::vector<Slot> first_meet(n, kNeverSlot);
  first_meet[hub] = 0;
  Slot last = *std::max_element(deadlines.begin(), deadlines.end());
  while (w.now() < last) {
    w.step();
    for (auto other : w.neighbors(hub))
      if (first_meet[other] == kNeverSlot) first_meet[other] = w.now();
  }

  poe::RoundInput in;
  in.epoch = 1;
  in.randomness = randomness;
  in.config = epoch;
  in.committee = committee;
  in.scope = scope;
  for (const auto& k : keys) in.active.push_back(k.public_key);
  std::sort(in.active.begin(), in.active.end());
  for (const auto& pk : committee) {
    poe::MemberState m;
    m.keys = keys[node_of.at(pk)];
    m.view = scope;
    m.reachable_at = first_meet[node_of.at(pk)];
    in.members.push_back(std::move(m));
  }
  for (Slot d : deadlines) {
    in.deadline = d;
    auto r = poe::run_regenesis_round(in);
    out.success[d] = r.success;
    out.signatures[d] = r.signatures;
    std::size_t reach = 0;
    for (const auto& m : in.members) reach += m.reachable_at <= d ? 1 : 0;
    out.reachable_share[d] = static_cast<double>(reach) / static_cast<double>(in.members.size());
  }
  return out;
}

DoubleSpendRun double_spend_run(const netsim::SimConfig& config, const poc::PocParams& params,
                                const adversary::AdversaryConfig& adv, Slot warmup, Slot horizon,
                                const std::vector<Slot>& extra_deltas) {
  const auto n = config.population;
  auto mal = adversary::choose_malicious(adv, n, config.seed);
  std::vector<NodeId> bad;
  for (NodeId i = 0; i < n; ++i)
    if (mal[i]) bad.push_back(i);
  if (bad.size() < 2) throw DomainError("double spending needs at least two colluders");
  DoubleSpendRun out;

  // Injection points and victims are fixed on a first pass so both passes agree.
  World w(config);
  for (Slot s = 0; s <= warmup; ++s) w.step();

  Rng pick(derive_seed(config.seed, kVictimStream));
  NodeId inj_a, inj_b;
  if (adv.strategy == adversary::Strategy::wormhole && !adv.wormhole_links.empty()) {
    inj_a = adv.wormhole_links.front().first;
    inj_b = adv.wormhole_links.front().second;
  } else if (adv.strategy == adversary::Strategy::wormhole) {
    // The two colluders farthest apart bridge the area through their channel.
    double best = -1.0;
    inj_a = bad[0];
    inj_b = bad[1];
    for (std::size_t i = 0; i < bad.size(); ++i)
      for (std::size_t j = i + 1; j < bad.size(); ++j) {
        double d = distance(w.nodes()[bad[i]].position, w.nodes()[bad[j]].position);
        if (d > best) {
          best = d;
          inj_a = bad[i];
          inj_b = bad[j];
        }
      }
  } else {
    inj_a = bad[pick.below(bad.size())];
    double best = -1.0;
    inj_b = inj_a;
    for (auto c : bad) {
      double d = distance(w.nodes()[c].position, w.nodes()[inj_a].position);
      if (c != inj_a && d > best) {
        best = d;
        inj_b = c;
      }
    }
  }
  NodeId victim_a = nearest_node(w, w.nodes()[inj_a].position, mal);
  std::vector<std::uint8_t> taken = mal;
  taken[victim_a] = 1;
  NodeId victim_b = nearest_node(w, w.nodes()[inj_b].position, taken);

  // Pass 1: Δ from every honest origin at t0 over honest relays.
  const Slot t0 = w.now();
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> reach(static_cast<std::size_t>(n) * words, 0), next;
  for (NodeId i = 0; i < n; ++i)
    if (!mal[i]) reach[i * words + i / 64] |= std::uint64_t{1} << (i % 64);
  std::vector<std::uint64_t> full(words, 0);
  for (NodeId i = 0; i < n; ++i)
    if (!mal[i]) full[i / 64] |= std::uint64_t{1} << (i % 64);
  auto everyone_reached = [&] {
    for (NodeId i = 0; i < n; ++i) {
      if (mal[i]) continue;
      for (std::size_t k = 0; k < words; ++k)
        if ((reach[i * words + k] & full[k]) != full[k]) return false;
    }
    return true;
  };
  {
    World f(config);
    for (Slot s = 0; s <= warmup; ++s) f.step();
    while (!everyone_reached() && f.now() - t0 < horizon) {
      next = reach;
      for (const auto& [a, b] : f.contacts()) {
        if (!mal[a])
          for (std::size_t k = 0; k < words; ++k) next[b * words + k] |= reach[a * words + k];
        if (!mal[b])
          for (std::size_t k = 0; k < words; ++k) next[a * words + k] |= reach[b * words + k];
      }
      reach.swap(next);
      f.step();
    }
    if (everyone_reached()) {
      out.connected = true;
      out.network_delta = f.now() - t0;
    }
  }
  if (!out.connected) return out;

  // Pass 2: the attack itself on an identical world.
  std::vector<std::uint32_t> seen_a(n, 0), seen_b(n, 0);
  World g(config);
  g.set_relay_policy(adversary::silent_policy(mal));
  g.set_redundant_copies(true);
  for (Slot s = 0; s <= warmup; ++s) {
    g.step();
    for (auto o : g.neighbors(victim_a)) ++seen_a[o];
    for (auto o : g.neighbors(victim_b)) ++seen_b[o];
  }
  auto top = [&](const std::vector<std::uint32_t>& c, NodeId self) {
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return c[a] > c[b]; });
    std::set<NodeId> t;
    for (auto id : order) {
      if (t.size() >= params.trusted_size() || c[id] == 0) break;
      if (id != self) t.insert(id);
    }
    return t;
  };
  const std::set<NodeId> trusted_a = top(seen_a, victim_a), trusted_b = top(seen_b, victim_b);

  // The colluders hand each transfer to the honest nodes around them.
  auto inject_around = [&](NodeId injector) {
    std::vector<netsim::MessageId> ids;
    for (auto o : g.neighbors(injector))
      if (!mal[o]) ids.push_back(g.inject(o));
    if (ids.empty()) ids.push_back(g.inject(injector));
    return ids;
  };
  auto tx1 = inject_around(inj_a);
  auto tx2 = inject_around(inj_b);

  struct VictimState {
    NodeId node = 0;
    const std::set<NodeId>* trusted = nullptr;
    const std::vector<netsim::MessageId>* own = nullptr;
    const std::vector<netsim::MessageId>* other = nullptr;
    Slot first_seen = kNeverSlot;
    Slot conflict_at = kNeverSlot;
    Slot trusted_at = kNeverSlot;
    std::set<NodeId> signers;
  };
  std::vector<VictimState> victims(2);
  victims[0].node = victim_a;
  victims[0].trusted = &trusted_a;
  victims[0].own = &tx1;
  victims[0].other = &tx2;
  victims[1].node = victim_b;
  victims[1].trusted = &trusted_b;
  victims[1].own = &tx2;
  victims[1].other = &tx1;
  auto contains = [](const std::vector<netsim::MessageId>& v, netsim::MessageId m) {
    return std::find(v.begin(), v.end(), m) != v.end();
  };
  // Colluders sign every forged copy they hand out.
  for (auto& v : victims) {
    for (auto b : bad) v.signers.insert(b);
    for (auto m : *v.own)
      if (g.informed_at(m, v.node) <= g.now()) v.first_seen = std::min(v.first_seen, g.now());
    for (auto m : *v.other)
      if (g.informed_at(m, v.node) <= g.now()) v.conflict_at = std::min(v.conflict_at, g.now());
  }
  auto count_trusted = [](const VictimState& v) {
    std::size_t k = 0;
    for (auto s : v.signers) k += v.trusted->count(s);
    return k;
  };
  for (auto& v : victims)
    if (v.first_seen != kNeverSlot && count_trusted(v) >= params.mTr) v.trusted_at = g.now();

  auto settled = [&] {
    for (const auto& v : victims)
      if (v.conflict_at == kNeverSlot) return false;
    return true;
  };
  while (!settled() && g.now() - t0 < horizon) {
    g.step();
    for (const auto& d : g.deliveries()) {
      for (auto& v : victims) {
        if (d.to != v.node) continue;
        if (contains(*v.own, d.message)) {
          if (v.first_seen == kNeverSlot) v.first_seen = g.now();
          collect_chain(g, d.message, d.from, v.signers);
        } else if (contains(*v.other, d.message) && v.conflict_at == kNeverSlot) {
          v.conflict_at = g.now();
        }
      }
    }
    for (auto& v : victims)
      if (v.trusted_at == kNeverSlot && v.first_seen != kNeverSlot && count_trusted(v) >= params.mTr)
        v.trusted_at = g.now();
  }

  std::vector<Slot> deltas{out.network_delta};
  for (auto d : extra_deltas) deltas.push_back(d);
  for (Slot delta : deltas) {
    int accepted = 0;
    for (const auto& v : victims) {
      if (v.first_seen == kNeverSlot || v.trusted_at == kNeverSlot) continue;
      Slot at = std::max(v.first_seen + delta, v.trusted_at);
      // Deliveries of a slot are processed before the acceptance decision.
      if (at < v.conflict_at) ++accepted;
    }
    out.accepted[delta] = accepted;
    out.violation[delta] = accepted == 2;
  }
  return out;
}

FakePocRun fake_poc_run(const netsim::SimConfig& config, const poc::PocParams& params,
                        const adversary::AdversaryConfig& adv, std::size_t receivers,
                        double colluder_reputation) {
  const auto n = config.population;
  auto mal = adversary::choose_malicious(adv, n, config.seed);
  auto keys = make_keys(config.seed, n);
  std::vector<PublicKey> accounts;
  for (const auto& k : keys) accounts.push_back(k.public_key);
  auto genesis = ledger::make_genesis(config.seed, accounts, 100);
  for (NodeId i = 0; i < n; ++i)
    if (mal[i]) genesis.reputations[keys[i].public_key] = colluder_reputation;

  std::vector<const crypto::KeyPair*> colluders;
  std::vector<NodeId> honest;
  for (NodeId i = 0; i < n; ++i) {
    if (mal[i] && colluders.size() < std::max<std::size_t>(params.mRS, 2))
      colluders.push_back(&keys[i]);
    else if (!mal[i])
      honest.push_back(i);
  }
  if (colluders.size() < params.mRS) throw DomainError("fewer colluders than mRS");
  if (honest.size() < 2 * params.B) throw DomainError("too few honest accounts");

  // Spoofed claims spread on a wide circle so the average distance is large.
  std::vector<Point> spoofed;
  double rad = 0.45 * std::min(config.width, config.height);
  for (std::size_t i = 0; i < colluders.size(); ++i) {
    double ang = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(colluders.size());
    spoofed.push_back({0.5 * config.width + rad * std::cos(ang), 0.5 * config.height + rad * std::sin(ang)});
  }
  auto gh = genesis.hash();
  std::vector<ledger::Transaction> txs;
  for (std::size_t t = 0; t < params.B; ++t) {
    ledger::Transaction tx;
    tx.sender = keys[honest[2 * t]].public_key;
    tx.receiver = keys[honest[2 * t + 1]].public_key;
    tx.amount = 1;
    tx.inputs = {gh};
    tx.nonce = t;
    txs.push_back(tx);
  }
  auto forged = adversary::forge_block(colluders, spoofed, txs, {gh}, params, genesis.prf_key, 1,
                                       genesis.reputations);
  FakePocRun out;
  out.thresholds_met = forged.signers.size() >= params.mRS && forged.avg_signer_distance >= params.mD;
  forged.verification.reset();

  poc::VerificationCache cache;
  Rng pick(derive_seed(config.seed, kVictimStream));
  for (std::size_t i = 0; i < honest.size() && i < receivers; ++i)
    std::swap(honest[i], honest[i + pick.below(honest.size() - i)]);
  for (std::size_t i = 0; i < honest.size() && i < receivers; ++i) {
    poc::Corroborator node(keys[honest[i]], genesis, params);
    node.set_cache(&cache);
    auto r = poc::on_block_received(node, forged, 2);
    ++out.receivers;
    if (r.action == poc::BlockAction::verify_and_add) ++out.verified;
  }
  return out;
}

CollusionRun collusion_run(std::uint64_t population, const poe::EpochConfig& epoch, double fraction,
                           std::uint64_t seed, std::size_t trials) {
  epoch.validate();
  const auto N = population;
  const auto K = epoch.K;
  const auto M = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(N)));
  if (K > N || M > N) throw DomainError("need K <= N and f in [0, 1]");
  CollusionRun out;
  out.trials = trials;
  const std::size_t majority = K / 2 + 1;
  out.exact_tail = std::exp2(adversary::hypergeometric_tail_log2(N, M, K, majority));
  Rng rng(derive_seed(seed, 0xc011));
  std::vector<std::uint32_t> ids(N);
  for (std::size_t t = 0; t < trials; ++t) {
    std::iota(ids.begin(), ids.end(), 0u);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < K; ++i) {
      std::swap(ids[i], ids[i + rng.below(N - i)]);
      bad += ids[i] < M ? 1 : 0;  // the first M ids collude
    }
    out.captured += bad >= majority ? 1 : 0;
  }

  // A concrete forgery by the colluders of one sampled committee.
  std::iota(ids.begin(), ids.end(), 0u);
  for (std::size_t i = 0; i < K; ++i) std::swap(ids[i], ids[i + rng.below(N - i)]);
  std::vector<crypto::KeyPair> members;
  std::vector<const crypto::KeyPair*> colluders;
  members.reserve(K);
  for (std::size_t i = 0; i < K; ++i) members.push_back(crypto::generate_keypair(derive_seed(seed ^ kKeyStream, ids[i])));
  for (std::size_t i = 0; i < K; ++i)
    if (ids[i] < M) colluders.push_back(&members[i]);
  ledger::RegenesisBlock honest;
  honest.epoch = 1;
  for (const auto& m : members) honest.committee.push_back(m.public_key);
  std::sort(honest.committee.begin(), honest.committee.end());
  auto victim = crypto::generate_keypair(derive_seed(seed, 0x71c)).public_key;
  auto forged = adversary::collude_regenesis(honest, colluders, victim,
                                             colluders.empty() ? victim : colluders.front()->public_key, 5);
  out.forged_accepted = colluders.size() < epoch.K_m &&
                        ledger::valid_committee_signatures(forged) >= epoch.K_m;
  return out;
}

PocProtocolRun poc_protocol_run(const netsim::SimConfig& config, const poc::PocParams& base,
                                std::size_t blocks, Slot round_slots) {
  const auto n = config.population;
  auto keys = make_keys(config.seed, n);
  std::vector<PublicKey> accounts;
  for (const auto& k : keys) accounts.push_back(k.public_key);
  auto genesis = ledger::make_genesis(config.seed, accounts, 100);
  auto gh = genesis.hash();
  World w(config);
  w.step();
  Rng fuzz(derive_seed(config.seed, kFuzzStream));
  poc::VerificationCache cache;
  PocProtocolRun out;
  out.min_margin = std::numeric_limits<double>::infinity();
  out.min_signers_seen = std::numeric_limits<std::size_t>::max();

  auto witnesses = [&](NodeId self) {
    std::vector<poc::Witness> ws;
    for (auto o : w.neighbors(self)) ws.push_back({&keys[o], w.nodes()[o].position});
    return ws;
  };

  for (std::size_t round = 0; round < blocks; ++round) {
    auto params = base;
    params.mRS = 2 + fuzz.below(4);
    params.mD = fuzz.uniform(0.0, 0.6 * std::min(config.width, config.height));
    params.backoff = static_cast<Slot>(fuzz.below(3));
    const double know = fuzz.uniform(0.3, 1.0);

    std::vector<ledger::Transaction> txs;
    while (txs.size() < params.B) {
      const auto t = txs.size();
      ledger::Transaction tx;
      auto s = fuzz.below(n);
      tx.sender = keys[s].public_key;
      tx.receiver = keys[(s + 1 + fuzz.below(n - 1)) % n].public_key;
      tx.amount = 1 + static_cast<Credits>(fuzz.below(5));
      tx.tx_fee = static_cast<Credits>(fuzz.below(2));
      tx.block_fee = static_cast<Credits>(fuzz.below(3));
      tx.inputs = {gh};
      tx.nonce = round * 64 + t;
      tx.created_at = w.now();
      // Distinct senders keep the block free of internal conflicts.
      bool dup = false;
      for (const auto& o : txs) dup = dup || o.sender == tx.sender;
      if (!dup) txs.push_back(tx);
    }

    std::vector<std::unique_ptr<poc::Corroborator>> nodes;
    std::vector<std::uint8_t> knows(n);
    nodes.reserve(n);
    for (NodeId i = 0; i < n; ++i) {
      nodes.push_back(std::make_unique<poc::Corroborator>(keys[i], genesis, params));
      nodes.back()->set_cache(&cache);
      knows[i] = fuzz.bernoulli(know) ? 1 : 0;
    }
    auto creator = static_cast<NodeId>(fuzz.below(n));
    knows[creator] = 1;
    for (NodeId i = 0; i < n; ++i)
      if (knows[i])
        for (const auto& tx : txs) nodes[i]->view().add_pending(tx, w.now());

    auto refresh = [&](NodeId i) {
      nodes[i]->set_location(w.nodes()[i].position);
      auto ws = witnesses(i);
      if (ws.empty()) return;
      nodes[i]->set_context_proof(poc::prove_location(keys[i], w.nodes()[i].position, ws,
                                                      genesis.prf_key, params.radius, w.now(),
                                                      genesis.reputations));
    };
    refresh(creator);
    if (!nodes[creator]->context_proof()) {
      w.step();
      continue;
    }
    ++out.blocks;

    std::vector<std::optional<std::pair<ledger::Block, Slot>>> holding(n);
    std::vector<std::uint8_t> handled(n, 0);
    holding[creator] = {{poc::propose_block(*nodes[creator], w.now()), w.now() + 1}};
    handled[creator] = 1;
    bool verified = false;
    auto check = [&](const ledger::Block& b) {
      if (b.signers.size() < std::max<std::size_t>(params.mRS, 2))
        throw RuntimeViolation("honest verification with " + std::to_string(b.signers.size()) +
                               " signers, mRS = " + std::to_string(params.mRS));
      double recomputed = poc::average_pairwise_distance(b.signer_locations());
      if (recomputed + 1e-9 < params.mD || b.avg_signer_distance + 1e-9 < params.mD)
        throw RuntimeViolation("honest verification below thresholds: " +
                               std::to_string(b.signers.size()) + " signers, " +
                               std::to_string(recomputed) + " m");
      out.min_signers_seen = std::min(out.min_signers_seen, b.signers.size());
      out.min_margin = std::min(out.min_margin, recomputed - params.mD);
    };

    for (Slot s = 0; s < round_slots && !verified; ++s) {
      w.step();
      const Slot now = w.now();
      std::vector<std::pair<NodeId, NodeId>> offers;
      for (const auto& [a, b] : w.contacts())
        for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}})
          if (holding[x] && holding[x]->second <= now && !handled[y]) offers.push_back({x, y});
      for (const auto& [x, y] : offers) {
        if (handled[y] || verified) continue;
        handled[y] = 1;
        if (knows[y]) refresh(y);
        auto r = poc::on_block_received(*nodes[y], holding[x]->first, now);
        switch (r.action) {
          case poc::BlockAction::verify_and_add:
            check(r.block);
            verified = true;
            break;
          case poc::BlockAction::sign_and_forward:
          case poc::BlockAction::forward_only:
            holding[y] = {{std::move(r.block), std::max(r.forward_at, now + 1)}};
            break;
          case poc::BlockAction::ignore: break;
        }
      }
    }
    out.verified += verified ? 1 : 0;
  }
  if (out.verified == 0) {
    out.min_margin = 0.0;
    out.min_signers_seen = 0;
  }
  return out;
}

}  // namespace mneme::experiments
