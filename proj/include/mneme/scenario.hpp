#pragma once

// Scenario files and the seeded runner behind `mneme run`.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mneme/adversary.hpp"
#include "mneme/analysis.hpp"
#include "mneme/netsim.hpp"
#include "mneme/poc.hpp"
#include "mneme/poe.hpp"

namespace mneme::scenario {

enum class Kind {
  spread,
  silent,
  delta_map,
  signer_distance,
  unique_meets,
  poe_termination,
  delta_rule,
  attack,
  poc_protocol,
};
const char* to_string(Kind k);

/// Which experiment to run and its knobs. List knobs sweep; an empty list
/// means the single value from the sim, poc or adversary block.
struct Experiment {
  Kind kind = Kind::spread;
  std::vector<netsim::RadioSpec> radios;
  std::vector<std::uint32_t> populations;
  std::vector<double> rhos;
  std::vector<Slot> durations;
  std::vector<double> silent_fractions;
  std::vector<Slot> deadlines;
  std::vector<Slot> extra_deltas;
  std::size_t grid = 5;
  std::size_t probes = 0;  // 0 means the trusted set size
  std::size_t blocks = 100;
  Slot round_slots = 20;
  std::size_t trials = 10000;
  std::size_t receivers = 50;
  Slot warmup = 100;
  Slot horizon = 0;  // 0 means sim.duration
};

struct Scenario {
  std::string name;
  netsim::SimConfig sim;
  poc::PocParams poc;
  poe::EpochConfig poe;
  adversary::AdversaryConfig adversary;
  std::vector<std::uint64_t> seeds;
  std::string outputs;
  Experiment experiment;
  bool event_log = false;

  Slot horizon() const { return experiment.horizon > 0 ? experiment.horizon : sim.duration; }
};

/// Throws ConfigError on malformed JSON, unknown keys or invalid values.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& file);
/// Cross-field checks; throws ConfigError.
void validate(const Scenario& s);

/// Raw per-seed tables keyed by file stem, plus an optional event log.
struct SeedOutput {
  std::uint64_t seed = 0;
  std::map<std::string, analysis::Table> tables;
  std::map<std::string, std::string> logs;
};

SeedOutput run_seed(const Scenario& s, std::uint64_t seed);

/// Merged files (name -> contents) computed from the per-seed outputs in
/// seed-list order.
std::map<std::string, std::string> merge(const Scenario& s, const std::vector<SeedOutput>& runs);

/// Writes via a temporary file and rename.
void write_atomic(const std::filesystem::path& file, const std::string& contents);

struct RunResult {
  std::vector<std::filesystem::path> files;  // merged outputs, sorted
};

/// Runs every seed (up to `parallel` at once), writes per-seed tables under
/// out/seeds/<seed>/ and the merged tables under out/. Invariant violations
/// surface as RuntimeViolation.
RunResult run(const Scenario& s, const std::filesystem::path& out, std::size_t parallel = 1);

}  // namespace mneme::scenario
