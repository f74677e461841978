#pragma once

// Seeded single-run drivers for every figure analog and attack. Each takes
// its configuration by value and returns plain numbers; aggregation over
// seeds lives in the scenario runner.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mneme/adversary.hpp"
#include "mneme/analysis.hpp"
#include "mneme/netsim.hpp"
#include "mneme/poc.hpp"
#include "mneme/poe.hpp"

namespace mneme::experiments {

using EventSink = std::function<void(const std::vector<netsim::SimEvent>&)>;

struct SpreadRun {
  std::vector<double> curve;  // informed fraction per slot after injection
  netsim::EventCounts events;
  netsim::NodeId origin = 0;
};

/// Broadcast from a uniformly drawn honest origin. Nodes flagged in `silent`
/// receive but never relay.
SpreadRun spread_run(const netsim::SimConfig& config, Slot slots,
                     const std::vector<std::uint8_t>& silent = {}, const EventSink& sink = {});

struct DeltaCell {
  double x = 0.0;  // grid cell center, meters
  double y = 0.0;
  netsim::NodeId origin = 0;
  Slot delay = netsim::kInfiniteDelta;
};

/// Delivery delay from the node nearest to each cell center of a grid x grid
/// partition of the area. Each origin runs in a fresh copy of the world.
std::vector<DeltaCell> delta_grid(const netsim::SimConfig& config, std::size_t grid, Slot horizon);

struct DeltaFitRun {
  bool fitted = false;
  analysis::DeltaFit fit;
  Slot observed = netsim::kInfiniteDelta;  // worst delivery delay from the prober
  std::size_t probes = 0;
};

/// A node probes `probes` random peers with round trips over the simulated
/// network, fits the delay model and compares the estimate with the delay
/// it actually sees when broadcasting.
DeltaFitRun delta_fit_run(const netsim::SimConfig& config, std::size_t probes, Slot horizon);

struct SignerDistanceRun {
  std::vector<double> by_slot;                  // mean over copies with two or more signers
  std::map<std::size_t, double> by_signers;     // signer count -> mean distance, final copies
};

/// Average signer distance as a block travels. Each node can sign with
/// probability rho; a holder that cannot sign forwards after `backoff` extra
/// slots, and a receiver offered several copies keeps one from a signer.
SignerDistanceRun signer_distance_run(const netsim::SimConfig& config, double rho, Slot backoff,
                                      Slot slots);

/// Per-node fraction of the population met, sampled at each duration.
std::map<Slot, std::vector<double>> unique_meets_run(const netsim::SimConfig& config,
                                                     const std::vector<Slot>& durations);

struct DeltaRuleRun {
  bool accepted = false;
  Slot first_seen = kNeverSlot;
  Slot accepted_at = kNeverSlot;
  double informed_fraction = 0.0;  // at the acceptance slot
};

/// One receiver waits delta slots after first sighting and for mTr trusted
/// forwarders (its most frequent contacts during `warmup`), then accepts.
DeltaRuleRun delta_rule_run(const netsim::SimConfig& config, const poc::PocParams& params,
                            Slot warmup, Slot horizon);

struct PoeTerminationRun {
  std::map<Slot, bool> success;             // per deadline
  std::map<Slot, std::size_t> signatures;   // per deadline
  std::map<Slot, double> reachable_share;   // committee share able to answer by the deadline
};

/// The first initiator collects signatures from committee members it meets
/// directly; the round succeeds when K_m valid signatures arrive in time.
PoeTerminationRun poe_termination_run(const netsim::SimConfig& config,
                                      const poe::EpochConfig& epoch,
                                      const std::vector<Slot>& deadlines);

struct DoubleSpendRun {
  bool connected = false;  // the honest relay graph delivered everything
  Slot network_delta = netsim::kInfiniteDelta;
  /// delta -> victims accepting their transfer (0, 1 or 2).
  std::map<Slot, int> accepted;
  std::map<Slot, bool> violation;
};

/// Two colluders hand conflicting transfers to two distant victims in the
/// same slot. Δ is measured on the same world by flooding from every honest
/// node over honest relays; acceptance is evaluated for δ = Δ and for each
/// extra delta given.
DoubleSpendRun double_spend_run(const netsim::SimConfig& config, const poc::PocParams& params,
                                const adversary::AdversaryConfig& adversary, Slot warmup,
                                Slot horizon, const std::vector<Slot>& extra_deltas);

struct FakePocRun {
  bool thresholds_met = false;  // the forged signer set clears mRS and mD
  std::size_t receivers = 0;
  std::size_t verified = 0;     // honest nodes that verified the forged block
};

/// Colluders (genesis reputation 0) forge a block with spoofed, dispersed
/// locations and hand it to honest nodes.
FakePocRun fake_poc_run(const netsim::SimConfig& config, const poc::PocParams& params,
                        const adversary::AdversaryConfig& adversary, std::size_t receivers,
                        double colluder_reputation = 0.0);

struct CollusionRun {
  std::size_t trials = 0;
  std::size_t captured = 0;  // committees with a colluding majority
  double exact_tail = 0.0;
  bool forged_accepted = false;  // a forged regenesis cleared K_m without a colluding quorum
};

/// Uniform committees of K out of N with round(f N) colluders.
CollusionRun collusion_run(std::uint64_t population, const poe::EpochConfig& epoch,
                           double fraction, std::uint64_t seed, std::size_t trials);

struct PocProtocolRun {
  std::size_t blocks = 0;
  std::size_t verified = 0;
  std::size_t min_signers_seen = 0;  // smallest signer set among verified blocks
  double min_margin = 0.0;           // smallest l - mD among verified blocks
};

/// Fuzzed end-to-end PoC: random thresholds, partial pool knowledge and
/// real signatures. Throws RuntimeViolation if an honest node verifies a
/// block below mRS or mD.
PocProtocolRun poc_protocol_run(const netsim::SimConfig& config, const poc::PocParams& base,
                                std::size_t blocks, Slot round_slots);

}  // namespace mneme::experiments
