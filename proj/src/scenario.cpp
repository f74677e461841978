#include "mneme/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "mneme/error.hpp"
#include "mneme/experiments.hpp"

namespace mneme::scenario {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Kind k) {
  switch (k) {
    case Kind::spread: return "spread";
    case Kind::silent: return "silent";
    case Kind::delta_map: return "delta_map";
    case Kind::signer_distance: return "signer_distance";
    case Kind::unique_meets: return "unique_meets";
    case Kind::poe_termination: return "poe_termination";
    case Kind::delta_rule: return "delta_rule";
    case Kind::attack: return "attack";
    case Kind::poc_protocol: return "poc_protocol";
  }
  return "?";
}

namespace {

Kind parse_kind(const std::string& name) {
  for (auto k : {Kind::spread, Kind::silent, Kind::delta_map, Kind::signer_distance,
                 Kind::unique_meets, Kind::poe_termination, Kind::delta_rule, Kind::attack,
                 Kind::poc_protocol})
    if (name == to_string(k)) return k;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& into, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    into = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

netsim::RadioSpec parse_radio(const json& j, const std::string& where) {
  if (j.is_number()) return netsim::RadioSpec::custom(j.get<double>());
  if (!j.is_string()) throw ConfigError(where + " must be a radio name or a radius in meters");
  try {
    return netsim::RadioSpec::parse(j.get<std::string>());
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

PublicKey parse_key(const std::string& hex, const std::string& where) {
  PublicKey pk;
  if (hex.size() != 64) throw ConfigError(where + " must be 64 hex digits");
  for (std::size_t i = 0; i < 32; ++i) {
    unsigned v = 0;
    if (std::sscanf(hex.c_str() + 2 * i, "%2x", &v) != 1) throw ConfigError(where + " is not hex");
    pk.bytes[i] = static_cast<std::uint8_t>(v);
  }
  return pk;
}

void parse_sim(const json& j, netsim::SimConfig& c) {
  only_keys(j, {"width", "height", "population", "radio", "speed", "duration",
                "forwarding_probability", "turn_probability", "churn_rate"},
            "sim");
  read(j, "width", c.width, "sim");
  read(j, "height", c.height, "sim");
  read(j, "population", c.population, "sim");
  if (j.contains("radio")) c.radio = parse_radio(j["radio"], "sim.radio");
  read(j, "speed", c.speed, "sim");
  read(j, "duration", c.duration, "sim");
  read(j, "forwarding_probability", c.forwarding_probability, "sim");
  read(j, "turn_probability", c.turn_probability, "sim");
  read(j, "churn_rate", c.churn_rate, "sim");
}

void parse_poc(const json& j, poc::PocParams& p) {
  only_keys(j, {"B", "mRS", "mD", "mTr", "delta", "min_context_weight", "radius", "phi_c",
                "backoff", "trusted_set_size"},
            "poc");
  read(j, "B", p.B, "poc");
  read(j, "mRS", p.mRS, "poc");
  read(j, "mD", p.mD, "poc");
  read(j, "mTr", p.mTr, "poc");
  read(j, "delta", p.delta, "poc");
  read(j, "min_context_weight", p.min_context_weight, "poc");
  read(j, "radius", p.radius, "poc");
  read(j, "phi_c", p.phi_c, "poc");
  read(j, "backoff", p.backoff, "poc");
  read(j, "trusted_set_size", p.trusted_set_size, "poc");
}

void parse_poe(const json& j, poe::EpochConfig& e) {
  only_keys(j, {"T", "K", "K_m", "minted", "phi_d", "B", "epsilon", "deposit"}, "poe");
  read(j, "T", e.T, "poe");
  read(j, "K", e.K, "poe");
  read(j, "K_m", e.K_m, "poe");
  if (j.contains("minted")) {
    Credits m = 0;
    read(j, "minted", m, "poe");
    e.minted = m;
  }
  read(j, "phi_d", e.phi_d, "poe");
  read(j, "B", e.B, "poe");
  read(j, "epsilon", e.epsilon, "poe");
  read(j, "deposit", e.deposit, "poe");
}

void parse_adversary(const json& j, adversary::AdversaryConfig& a) {
  only_keys(j, {"fraction", "strategy", "wormhole_links", "target"}, "adversary");
  read(j, "fraction", a.fraction, "adversary");
  if (j.contains("strategy")) {
    std::string s;
    read(j, "strategy", s, "adversary");
    a.strategy = adversary::parse_strategy(s);
  }
  read(j, "wormhole_links", a.wormhole_links, "adversary");
  if (j.contains("target")) {
    std::string hex;
    read(j, "target", hex, "adversary");
    a.target = parse_key(hex, "adversary.target");
  }
}

void parse_experiment(const json& j, Experiment& x) {
  only_keys(j, {"kind", "radios", "populations", "rhos", "durations", "silent_fractions",
                "deadlines", "extra_deltas", "grid", "probes", "blocks", "round_slots", "trials",
                "receivers", "warmup", "horizon"},
            "experiment");
  if (!j.contains("kind")) throw ConfigError("experiment.kind is required");
  std::string kind;
  read(j, "kind", kind, "experiment");
  x.kind = parse_kind(kind);
  if (j.contains("radios")) {
    if (!j["radios"].is_array()) throw ConfigError("experiment.radios must be a list");
    for (const auto& r : j["radios"]) x.radios.push_back(parse_radio(r, "experiment.radios"));
  }
  read(j, "populations", x.populations, "experiment");
  read(j, "rhos", x.rhos, "experiment");
  read(j, "durations", x.durations, "experiment");
  read(j, "silent_fractions", x.silent_fractions, "experiment");
  read(j, "deadlines", x.deadlines, "experiment");
  read(j, "extra_deltas", x.extra_deltas, "experiment");
  read(j, "grid", x.grid, "experiment");
  read(j, "probes", x.probes, "experiment");
  read(j, "blocks", x.blocks, "experiment");
  read(j, "round_slots", x.round_slots, "experiment");
  read(j, "trials", x.trials, "experiment");
  read(j, "receivers", x.receivers, "experiment");
  read(j, "warmup", x.warmup, "experiment");
  read(j, "horizon", x.horizon, "experiment");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("unparseable scenario: ") + e.what());
  }
  only_keys(j, {"name", "sim", "poc", "poe", "adversary", "seeds", "outputs", "experiment",
                "event_log"},
            "scenario");
  Scenario s;
  read(j, "name", s.name, "scenario");
  if (j.contains("sim")) parse_sim(j["sim"], s.sim);
  if (j.contains("poc")) parse_poc(j["poc"], s.poc);
  if (j.contains("poe")) parse_poe(j["poe"], s.poe);
  if (j.contains("adversary")) parse_adversary(j["adversary"], s.adversary);
  read(j, "seeds", s.seeds, "scenario");
  read(j, "outputs", s.outputs, "scenario");
  if (!j.contains("experiment")) throw ConfigError("scenario.experiment is required");
  parse_experiment(j["experiment"], s.experiment);
  read(j, "event_log", s.event_log, "scenario");
  validate(s);
  return s;
}

Scenario load_scenario(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void validate(const Scenario& s) {
  if (s.name.empty()) throw ConfigError("scenario.name is required");
  if (s.seeds.empty()) throw ConfigError("scenario.seeds must not be empty");
  if (s.outputs.empty()) throw ConfigError("scenario.outputs is required");
  {
    auto sorted = s.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("scenario.seeds must be distinct");
  }
  try {
    s.sim.validate();
    s.poc.validate();
    s.poe.validate();
    for (auto n : s.experiment.populations) {
      auto c = s.sim;
      c.population = n;
      c.validate();
    }
    for (const auto& r : s.experiment.radios) {
      auto c = s.sim;
      c.radio = r;
      c.validate();
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  std::uint32_t smallest = s.sim.population;
  for (auto n : s.experiment.populations) smallest = std::min(smallest, n);
  if (s.poc.mRS > smallest)
    throw ConfigError("mRS = " + std::to_string(s.poc.mRS) + " exceeds the population of " +
                      std::to_string(smallest));
  const auto& x = s.experiment;
  for (double r : x.rhos)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rhos must lie in [0, 1]");
  for (double f : x.silent_fractions)
    if (!(f >= 0.0 && f < 1.0)) throw ConfigError("silent_fractions must lie in [0, 1)");
  for (auto d : x.durations)
    if (d <= 0) throw ConfigError("durations must be positive");
  for (auto d : x.deadlines)
    if (d <= 0) throw ConfigError("deadlines must be positive");
  for (auto d : x.extra_deltas)
    if (d < 0) throw ConfigError("extra_deltas must be non-negative");
  if (x.grid == 0) throw ConfigError("grid must be positive");
  if (x.warmup < 0 || x.horizon < 0 || x.round_slots <= 0) throw ConfigError("slot knobs must be non-negative");

  switch (x.kind) {
    case Kind::poe_termination:
      if (s.poe.K > s.sim.population) throw ConfigError("committee larger than the population");
      break;
    case Kind::attack:
      switch (s.adversary.strategy) {
        case adversary::Strategy::none:
        case adversary::Strategy::silent:
          throw ConfigError("attack runs need double_spend, wormhole, fake_poc or poe_collusion; "
                            "silent nodes run under the silent kind");
        case adversary::Strategy::poe_collusion:
          if (s.poe.K > s.sim.population) throw ConfigError("committee larger than the population");
          break;
        default: break;
      }
      break;
    case Kind::silent:
      if (x.silent_fractions.empty() && !(s.adversary.fraction < 1.0))
        throw ConfigError("silent fraction must lie in [0, 1)");
      break;
    default: break;
  }
  try {
    if (x.kind == Kind::attack) s.adversary.validate(s.sim.population, s.poc.mRS);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<netsim::SimConfig> variants(const Scenario& s, std::uint64_t seed) {
  std::vector<netsim::RadioSpec> radios = s.experiment.radios;
  if (radios.empty()) radios.push_back(s.sim.radio);
  std::vector<std::uint32_t> pops = s.experiment.populations;
  if (pops.empty()) pops.push_back(s.sim.population);
  std::vector<netsim::SimConfig> out;
  for (const auto& r : radios)
    for (auto n : pops) {
      auto c = s.sim;
      c.radio = r;
      c.population = n;
      c.seed = seed;
      out.push_back(c);
    }
  return out;
}

double slot_or_missing(Slot s) { return s == kNeverSlot ? -1.0 : static_cast<double>(s); }

std::string event_log(const std::vector<netsim::SimEvent>& events) {
  std::ostringstream os;
  os << netsim::kEventLogHeader << '\n';
  for (const auto& e : events) netsim::write_event(os, e);
  return os.str();
}

}  // namespace

SeedOutput run_seed(const Scenario& s, std::uint64_t seed) {
  SeedOutput out;
  out.seed = seed;
  const auto& x = s.experiment;
  auto base = s.sim;
  base.seed = seed;

  switch (x.kind) {
    case Kind::spread: {
      analysis::Table spread{{"radius", "population", "slot", "fraction"}, {}};
      analysis::Table events{{"radius", "population", "meet", "leave", "forward"}, {}};
      for (const auto& c : variants(s, seed)) {
        std::vector<netsim::SimEvent> log;
        experiments::EventSink sink;
        if (s.event_log)
          sink = [&](const std::vector<netsim::SimEvent>& ev) { log.insert(log.end(), ev.begin(), ev.end()); };
        auto r = experiments::spread_run(c, c.duration, {}, sink);
        double radius = c.radio.radius(), pop = c.population;
        for (std::size_t k = 0; k < r.curve.size(); ++k)
          spread.rows.push_back({radius, pop, static_cast<double>(k), r.curve[k]});
        events.rows.push_back({radius, pop, static_cast<double>(r.events.meet),
                               static_cast<double>(r.events.leave), static_cast<double>(r.events.forward)});
        if (s.event_log) {
          std::ostringstream name;
          name << "events_r" << radius << "_n" << c.population;
          out.logs[name.str()] = event_log(log);
        }
      }
      out.tables["spread"] = std::move(spread);
      out.tables["events"] = std::move(events);
      break;
    }
    case Kind::silent: {
      analysis::Table t{{"silent_fraction", "slot", "fraction"}, {}};
      auto fractions = x.silent_fractions;
      if (fractions.empty()) fractions.push_back(s.adversary.fraction);
      for (double f : fractions) {
        adversary::AdversaryConfig a = s.adversary;
        a.strategy = adversary::Strategy::silent;
        a.fraction = f;
        a.wormhole_links.clear();
        auto mal = adversary::choose_malicious(a, base.population, seed);
        auto r = experiments::spread_run(base, base.duration, mal);
        // Sampled every 10 slots to keep the per-seed file small.
        for (std::size_t k = 0; k < r.curve.size(); ++k)
          if (k % 10 == 0 || k + 1 == r.curve.size())
            t.rows.push_back({f, static_cast<double>(k), r.curve[k]});
      }
      out.tables["silent"] = std::move(t);
      break;
    }
    case Kind::delta_map: {
      analysis::Table grid{{"x", "y", "origin", "delay"}, {}};
      for (const auto& c : experiments::delta_grid(base, x.grid, s.horizon()))
        grid.rows.push_back({c.x, c.y, static_cast<double>(c.origin), slot_or_missing(c.delay)});
      out.tables["delta_map"] = std::move(grid);
      auto probes = x.probes ? x.probes : s.poc.trusted_size();
      auto f = experiments::delta_fit_run(base, probes, s.horizon());
      analysis::Table fit{{"fitted", "probes", "p", "q", "delta", "delta_corner", "observed"}, {}};
      fit.rows.push_back({f.fitted ? 1.0 : 0.0, static_cast<double>(f.probes), f.fit.model.p,
                          f.fit.model.q, f.fit.delta, f.fit.delta_corner, slot_or_missing(f.observed)});
      out.tables["delta_fit"] = std::move(fit);
      break;
    }
    case Kind::signer_distance: {
      analysis::Table by_slot{{"rho", "slot", "distance"}, {}};
      analysis::Table by_count{{"rho", "signers", "distance"}, {}};
      auto rhos = x.rhos;
      if (rhos.empty()) rhos = {0.1, 0.3, 0.6};
      for (double rho : rhos) {
        auto r = experiments::signer_distance_run(base, rho, s.poc.backoff, base.duration);
        for (std::size_t k = 0; k < r.by_slot.size(); ++k)
          by_slot.rows.push_back({rho, static_cast<double>(k), r.by_slot[k]});
        for (const auto& [k, d] : r.by_signers) by_count.rows.push_back({rho, static_cast<double>(k), d});
      }
      out.tables["signer_distance"] = std::move(by_slot);
      out.tables["signer_distance_by_count"] = std::move(by_count);
      break;
    }
    case Kind::unique_meets: {
      auto durations = x.durations;
      if (durations.empty()) durations.push_back(base.duration);
      analysis::Table t{{"duration", "node", "fraction"}, {}};
      for (const auto& [d, fr] : experiments::unique_meets_run(base, durations))
        for (std::size_t i = 0; i < fr.size(); ++i)
          t.rows.push_back({static_cast<double>(d), static_cast<double>(i), fr[i]});
      out.tables["unique_meets"] = std::move(t);
      break;
    }
    case Kind::poe_termination: {
      auto deadlines = x.deadlines;
      if (deadlines.empty()) deadlines.push_back(s.poe.T);
      auto r = experiments::poe_termination_run(base, s.poe, deadlines);
      analysis::Table t{{"deadline", "success", "signatures", "reachable_share"}, {}};
      for (const auto& [d, ok] : r.success)
        t.rows.push_back({static_cast<double>(d), ok ? 1.0 : 0.0,
                          static_cast<double>(r.signatures.at(d)), r.reachable_share.at(d)});
      out.tables["poe_termination"] = std::move(t);
      break;
    }
    case Kind::delta_rule: {
      auto r = experiments::delta_rule_run(base, s.poc, x.warmup, s.horizon());
      analysis::Table t{{"accepted", "first_seen", "accepted_at", "informed_fraction"}, {}};
      t.rows.push_back({r.accepted ? 1.0 : 0.0, slot_or_missing(r.first_seen),
                        slot_or_missing(r.accepted_at), r.informed_fraction});
      out.tables["delta_rule"] = std::move(t);
      break;
    }
    case Kind::attack: {
      // source: 0 none, 1 network, 2 fixed
      analysis::Table t{{"delta", "source", "attempts", "successes", "violations"}, {}};
      switch (s.adversary.strategy) {
        case adversary::Strategy::double_spend:
        case adversary::Strategy::wormhole: {
          auto extra = x.extra_deltas;
          if (extra.empty()) extra.push_back(s.poc.delta);
          auto r = experiments::double_spend_run(base, s.poc, s.adversary, x.warmup, s.horizon(), extra);
          if (!r.connected) {
            t.rows.push_back({-1, 1, 0, 0, 0});
            break;
          }
          Slot d = r.network_delta;
          t.rows.push_back({static_cast<double>(d), 1, 1, static_cast<double>(r.accepted.at(d)),
                            r.violation.at(d) ? 1.0 : 0.0});
          if (r.violation.at(d))
            out.logs["violations"] += "seed " + std::to_string(seed) +
                                      ": both victims accepted with delta equal to the network delay " +
                                      std::to_string(d) + "\n";
          for (Slot d : extra)
            t.rows.push_back({static_cast<double>(d), 2, 1, static_cast<double>(r.accepted.at(d)),
                              r.violation.at(d) ? 1.0 : 0.0});
          break;
        }
        case adversary::Strategy::fake_poc: {
          auto r = experiments::fake_poc_run(base, s.poc, s.adversary, x.receivers);
          t.rows.push_back({-1, 0, static_cast<double>(r.receivers), static_cast<double>(r.verified),
                            static_cast<double>(r.verified)});
          if (r.verified)
            out.logs["violations"] += "seed " + std::to_string(seed) + ": " +
                                      std::to_string(r.verified) +
                                      " honest nodes verified a block with forged context\n";
          break;
        }
        case adversary::Strategy::poe_collusion: {
          auto r = experiments::collusion_run(base.population, s.poe, s.adversary.fraction, seed, x.trials);
          t.rows.push_back({-1, 0, static_cast<double>(r.trials), static_cast<double>(r.captured),
                            r.forged_accepted ? 1.0 : 0.0});
          analysis::Table c{{"trials", "captured", "exact_tail"}, {}};
          c.rows.push_back({static_cast<double>(r.trials), static_cast<double>(r.captured), r.exact_tail});
          out.tables["collusion"] = std::move(c);
          if (r.forged_accepted)
            out.logs["violations"] += "seed " + std::to_string(seed) +
                                      ": forged regenesis reached K_m without a colluding quorum\n";
          break;
        }
        default: throw ConfigError("unsupported attack strategy");
      }
      out.tables["attack"] = std::move(t);
      break;
    }
    case Kind::poc_protocol: {
      analysis::Table t{{"blocks", "verified", "min_signers", "min_margin", "violation"}, {}};
      try {
        auto r = experiments::poc_protocol_run(base, s.poc, x.blocks, x.round_slots);
        t.rows.push_back({static_cast<double>(r.blocks), static_cast<double>(r.verified),
                          static_cast<double>(r.min_signers_seen), r.min_margin, 0.0});
      } catch (const RuntimeViolation& e) {
        t.rows.push_back({0, 0, 0, 0, 1.0});
        out.logs["violations"] += "seed " + std::to_string(seed) + ": " + e.what() + "\n";
      }
      out.tables["poc_protocol"] = std::move(t);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using Key2 = std::pair<double, double>;

const analysis::Table& table_of(const SeedOutput& o, const std::string& name) {
  auto it = o.tables.find(name);
  if (it == o.tables.end()) throw RuntimeViolation("seed " + std::to_string(o.seed) + " lacks table " + name);
  return it->second;
}

}  // namespace

std::map<std::string, std::string> merge(const Scenario& s, const std::vector<SeedOutput>& runs) {
  std::map<std::string, std::string> files;
  const auto& x = s.experiment;

  // key columns -> per-seed series, keeping key order of first appearance
  auto collect_curves = [&](const std::string& name, std::size_t keys) {
    std::vector<std::vector<double>> order;
    std::map<std::vector<double>, std::vector<std::vector<double>>> curves;
    for (const auto& run : runs) {
      std::map<std::vector<double>, std::vector<double>> mine;
      for (const auto& r : table_of(run, name).rows) {
        std::vector<double> k(r.begin(), r.begin() + static_cast<long>(keys));
        if (!curves.count(k) && std::find(order.begin(), order.end(), k) == order.end()) order.push_back(k);
        mine[k].push_back(r.back());
      }
      for (auto& [k, v] : mine) curves[k].push_back(std::move(v));
    }
    return std::make_pair(order, curves);
  };

  switch (x.kind) {
    case Kind::spread: {
      auto [order, curves] = collect_curves("spread", 2);
      analysis::Table t{{"radius", "population", "slot", "mean", "std"}, {}};
      for (const auto& k : order)
        for (const auto& r : analysis::spread_table(curves[k]).rows)
          t.rows.push_back({k[0], k[1], r[0], r[1], r[2]});
      files["spread.csv"] = t.to_csv();
      std::map<std::pair<double, double>, std::vector<analysis::EventTotals>> ev;
      std::vector<std::pair<double, double>> ev_order;
      for (const auto& run : runs)
        for (const auto& r : table_of(run, "events").rows) {
          auto k = std::make_pair(r[0], r[1]);
          if (!ev.count(k)) ev_order.push_back(k);
          ev[k].push_back({r[2], r[3], r[4]});
        }
      analysis::Table e{{"radius", "population", "meet_mean", "meet_std", "leave_mean", "leave_std",
                         "forward_mean", "forward_std"},
                        {}};
      for (const auto& k : ev_order) {
        std::map<std::uint32_t, std::vector<analysis::EventTotals>> one{{0, ev[k]}};
        auto row = analysis::events_table(one).rows.front();
        e.rows.push_back({k.first, k.second, row[1], row[2], row[3], row[4], row[5], row[6]});
      }
      files["events.csv"] = e.to_csv();
      break;
    }
    case Kind::silent: {
      auto [order, curves] = collect_curves("silent", 2);
      analysis::Table t{{"silent_fraction", "slot", "mean", "std"}, {}};
      std::map<double, std::vector<double>> finals;
      std::vector<double> f_order;
      for (const auto& k : order) {
        auto m = analysis::mean_std([&] {
          std::vector<double> v;
          for (const auto& c : curves[k]) v.push_back(c.front());
          return v;
        }());
        t.rows.push_back({k[0], k[1], m.mean, m.std});
      }
      for (const auto& run : runs) {
        std::map<double, double> last;
        for (const auto& r : table_of(run, "silent").rows) last[r[0]] = r[2];
        for (const auto& [f, v] : last) {
          if (!finals.count(f)) f_order.push_back(f);
          finals[f].push_back(v);
        }
      }
      files["silent_curve.csv"] = t.to_csv();
      analysis::Table fin{{"silent_fraction", "mean", "std", "min", "max"}, {}};
      for (double f : f_order) {
        auto m = analysis::mean_std(finals[f]);
        fin.rows.push_back({f, m.mean, m.std, analysis::quantile(finals[f], 0.0),
                            analysis::quantile(finals[f], 1.0)});
      }
      files["silent.csv"] = fin.to_csv();
      break;
    }
    case Kind::delta_map: {
      std::vector<Key2> order;
      std::map<Key2, std::vector<double>> delays;
      for (const auto& run : runs)
        for (const auto& r : table_of(run, "delta_map").rows) {
          Key2 k{r[0], r[1]};
          if (!delays.count(k)) order.push_back(k);
          delays[k].push_back(r[3]);
        }
      analysis::Table t{{"x", "y", "mean_delay", "max_delay", "unreachable_runs"}, {}};
      for (const auto& k : order) {
        std::vector<double> ok;
        double miss = 0;
        for (double d : delays[k]) (d < 0 ? miss += 1 : (ok.push_back(d), 0.0));
        auto m = analysis::mean_std(ok);
        t.rows.push_back({k.first, k.second, ok.empty() ? -1.0 : m.mean,
                          ok.empty() ? -1.0 : analysis::quantile(ok, 1.0), miss});
      }
      files["delta_map.csv"] = t.to_csv();
      analysis::Table fit{{"seed", "fitted", "probes", "p", "q", "delta", "delta_corner", "observed",
                           "upper_bound"},
                          {}};
      for (const auto& run : runs) {
        auto r = table_of(run, "delta_fit").rows.front();
        double bound = (r[0] > 0 && r[6] >= 0 && r[4] >= r[6]) ? 1.0 : 0.0;
        fit.rows.push_back({static_cast<double>(run.seed), r[0], r[1], r[2], r[3], r[4], r[5], r[6], bound});
      }
      files["delta_fit.csv"] = fit.to_csv(4);
      break;
    }
    case Kind::signer_distance: {
      auto [order, curves] = collect_curves("signer_distance", 2);
      analysis::Table t{{"rho", "slot", "mean", "std"}, {}};
      for (const auto& k : order) {
        std::vector<double> v;
        for (const auto& c : curves[k]) v.push_back(c.front());
        auto m = analysis::mean_std(v);
        t.rows.push_back({k[0], k[1], m.mean, m.std});
      }
      files["signer_distance.csv"] = t.to_csv();
      std::map<Key2, std::vector<double>> by;
      for (const auto& run : runs)
        for (const auto& r : table_of(run, "signer_distance_by_count").rows) by[{r[0], r[1]}].push_back(r[2]);
      analysis::Table c{{"rho", "signers", "mean", "std", "runs"}, {}};
      for (const auto& [k, v] : by) {
        auto m = analysis::mean_std(v);
        c.rows.push_back({k.first, k.second, m.mean, m.std, static_cast<double>(v.size())});
      }
      files["signer_distance_by_count.csv"] = c.to_csv();
      break;
    }
    case Kind::unique_meets: {
      std::map<std::int64_t, std::vector<double>> pooled;
      for (const auto& run : runs)
        for (const auto& r : table_of(run, "unique_meets").rows)
          pooled[static_cast<std::int64_t>(r[0])].push_back(r[2]);
      files["unique_meets.csv"] = analysis::unique_meets_table(pooled).to_csv();
      break;
    }
    case Kind::poe_termination: {
      std::map<double, std::vector<std::vector<double>>> by;
      for (const auto& run : runs)
        for (const auto& r : table_of(run, "poe_termination").rows) by[r[0]].push_back(r);
      analysis::Table t{{"deadline", "runs", "successes", "frequency", "mean_signatures",
                         "mean_reachable_share", "analytic"},
                        {}};
      for (const auto& [d, rows] : by) {
        double ok = 0, sigs = 0, share = 0;
        for (const auto& r : rows) {
          ok += r[1];
          sigs += r[2];
          share += r[3];
        }
        double n = static_cast<double>(rows.size());
        double analytic = poe::poe_termination_probability({share / n}, s.poe.K, s.poe.K_m);
        t.rows.push_back({d, n, ok, ok / n, sigs / n, share / n, analytic});
      }
      files["poe_termination.csv"] = t.to_csv();
      break;
    }
    case Kind::delta_rule: {
      analysis::Table per{{"seed", "accepted", "first_seen", "accepted_at", "informed_fraction"}, {}};
      std::vector<double> fr;
      for (const auto& run : runs) {
        auto r = table_of(run, "delta_rule").rows.front();
        per.rows.push_back({static_cast<double>(run.seed), r[0], r[1], r[2], r[3]});
        if (r[0] > 0) fr.push_back(r[3]);
      }
      files["delta_rule_runs.csv"] = per.to_csv();
      auto m = analysis::mean_std(fr);
      analysis::Table sum{{"runs", "accepted", "mean_informed", "std_informed", "min_informed"}, {}};
      sum.rows.push_back({static_cast<double>(runs.size()), static_cast<double>(fr.size()), m.mean, m.std,
                          fr.empty() ? 0.0 : analysis::quantile(fr, 0.0)});
      files["delta_rule.csv"] = sum.to_csv();
      break;
    }
    case Kind::attack: {
      std::string csv = adversary::AttackReport::header() + "\n";
      for (const auto& run : runs)
        for (const auto& r : table_of(run, "attack").rows) {
          adversary::AttackReport rep;
          rep.strategy = s.adversary.strategy;
          rep.fraction = s.adversary.fraction;
          rep.seed = run.seed;
          rep.delta = static_cast<Slot>(r[0]);
          rep.delta_source = r[1] == 1 ? "network" : r[1] == 2 ? "fixed" : "none";
          rep.attempts = static_cast<std::size_t>(r[2]);
          rep.successes = static_cast<std::size_t>(r[3]);
          rep.violations = static_cast<std::size_t>(r[4]);
          csv += rep.row() + "\n";
        }
      files["attacks.csv"] = csv;
      if (s.adversary.strategy == adversary::Strategy::poe_collusion) {
        double trials = 0, captured = 0, exact = 0;
        for (const auto& run : runs) {
          auto r = table_of(run, "collusion").rows.front();
          trials += r[0];
          captured += r[1];
          exact = r[2];
        }
        auto M = std::llround(s.adversary.fraction * s.sim.population);
        analysis::Table c{{"N", "K", "M", "trials", "captured", "empirical", "exact_tail"}, {}};
        c.rows.push_back({static_cast<double>(s.sim.population), static_cast<double>(s.poe.K),
                          static_cast<double>(M), trials, captured, trials > 0 ? captured / trials : 0.0,
                          exact});
        files["collusion.csv"] = c.to_csv(12);
      }
      break;
    }
    case Kind::poc_protocol: {
      analysis::Table t{{"seed", "blocks", "verified", "min_signers", "min_margin", "violation"}, {}};
      for (const auto& run : runs) {
        auto r = table_of(run, "poc_protocol").rows.front();
        t.rows.push_back({static_cast<double>(run.seed), r[0], r[1], r[2], r[3], r[4]});
      }
      files["poc_protocol.csv"] = t.to_csv(4);
      break;
    }
  }
  return files;
}

void write_atomic(const fs::path& file, const std::string& contents) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  auto tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, file);
}

RunResult run(const Scenario& s, const fs::path& out, std::size_t parallel) {
  validate(s);
  std::vector<SeedOutput> results(s.seeds.size());
  std::vector<std::string> errors(s.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < s.seeds.size(); i = next++) {
      try {
        results[i] = run_seed(s, s.seeds[i]);
        auto dir = out / "seeds" / std::to_string(s.seeds[i]);
        for (const auto& [name, t] : results[i].tables) write_atomic(dir / (name + ".csv"), t.to_csv());
        for (const auto& [name, text] : results[i].logs)
          write_atomic(dir / (name + (name == "violations" ? ".txt" : ".csv")), text);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::size_t threads = std::max<std::size_t>(1, std::min(parallel, s.seeds.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw RuntimeViolation("seed " + std::to_string(s.seeds[i]) + ": " + errors[i]);

  RunResult rr;
  for (const auto& [name, text] : merge(s, results)) {
    write_atomic(out / name, text);
    rr.files.push_back(out / name);
  }
  std::string violations;
  for (const auto& r : results) {
    auto it = r.logs.find("violations");
    if (it != r.logs.end()) violations += it->second;
  }
  if (!violations.empty()) throw RuntimeViolation(violations);
  return rr;
}

}  // namespace mneme::scenario
