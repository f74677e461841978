#pragma once

// Signer-set feasibility, the least-squares Delta estimate and the metric
// tables behind each figure.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mneme/types.hpp"

namespace mneme::analysis {

struct FeasibilityResult {
  bool feasible = false;
  std::vector<std::size_t> subset;  // indices into the candidate list, ascending
  double average_distance = 0.0;
  bool exhaustive = false;
};

/// Smallest average pairwise distance that still reaches mD over subsets of
/// at least mRS signing-capable nodes. When none qualifies, the subset with
/// the largest average is returned as the witness.
FeasibilityResult find_signer_set(const std::vector<Point>& positions,
                                  const std::vector<bool>& can_sign, std::size_t mRS, double mD);

/// Exhaustive search over every subset; capped at 24 candidates.
FeasibilityResult find_signer_set_exhaustive(const std::vector<Point>& candidates, std::size_t mRS,
                                             double mD);

/// Multi-start farthest-point growth with swap refinement.
FeasibilityResult find_signer_set_heuristic(const std::vector<Point>& candidates, std::size_t mRS,
                                            double mD);

/// Throws Infeasible, naming the best witness, when no qualifying subset exists.
FeasibilityResult poc_feasibility(const std::vector<Point>& positions,
                                  const std::vector<bool>& can_sign, std::size_t mRS, double mD);

struct ProbeRecord {
  Slot a = 0;               // probe sent
  Slot b = 0;               // received by the trusted user
  Slot c = 0;               // reply sent
  Slot reply_received = 0;  // reply back at the prober
  Point trusted_location;
};

struct DeltaModel {
  double p = 0.0;  // slots per distance unit
  double q = 0.0;  // slots
};

struct DeltaFit {
  DeltaModel model;
  double delta = 0.0;         // step-five formula on normalized coordinates
  double delta_corner = 0.0;  // p times the distance to the farthest corner, plus q
  std::vector<double> distances;
  std::vector<double> times;
};

/// Normal-equations fit of t = p d + q. Throws DegenerateDesign when fewer
/// than two distinct distances are given.
DeltaModel least_squares(const std::vector<double>& d, const std::vector<double>& t);

/// p (max(x^2, (1-x)^2) + max(y^2, (1-y)^2)) + q.
double delta_from_model(const DeltaModel& m, Point self_normalized);

/// Locations are divided by `side` before fitting, so meters and the unit
/// square both work.
DeltaFit fit_delta(const std::vector<ProbeRecord>& probes, Point self_location, double side = 1.0);

/// Columns are named once; values are written with fixed precision so equal
/// inputs give byte-identical text.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string to_csv(int precision = 6) const;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& xs);
double quantile(std::vector<double> xs, double q);  // linear interpolation

/// curves[seed][slot] -> slot, mean, std. Shorter curves hold their last value.
Table spread_table(const std::vector<std::vector<double>>& curves);

struct EventTotals {
  double meet = 0;
  double leave = 0;
  double forward = 0;
};

/// population -> per-seed totals.
Table events_table(const std::map<std::uint32_t, std::vector<EventTotals>>& by_population);

/// rho -> curves[seed][slot] of mean signer distance.
Table signer_distance_table(const std::map<double, std::vector<std::vector<double>>>& by_rho);

/// duration -> pooled per-node fractions of the population met.
Table unique_meets_table(const std::map<std::int64_t, std::vector<double>>& by_duration);

/// silent fraction -> per-seed delivery fractions.
Table silent_table(const std::map<double, std::vector<double>>& by_fraction);

}  // namespace mneme::analysis
