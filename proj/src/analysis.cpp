#include "mneme/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "mneme/error.hpp"

namespace mneme::analysis {

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix distances(const std::vector<Point>& pts) {
  Matrix d(pts.size(), std::vector<double>(pts.size(), 0.0));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d[i][j] = d[j][i] = distance(pts[i], pts[j]);
  return d;
}

double pairs(std::size_t k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k - 1); }

// (avg, size, members) ordering used to pick among equally good subsets.
bool better_tight(double avg, const std::vector<std::size_t>& s, const FeasibilityResult& best) {
  if (!best.feasible) return true;
  if (avg != best.average_distance) return avg < best.average_distance;
  if (s.size() != best.subset.size()) return s.size() < best.subset.size();
  return s < best.subset;
}

bool better_witness(double avg, const std::vector<std::size_t>& s, const FeasibilityResult& best) {
  if (best.subset.empty()) return true;
  if (avg != best.average_distance) return avg > best.average_distance;
  if (s.size() != best.subset.size()) return s.size() < best.subset.size();
  return s < best.subset;
}

}  // namespace

FeasibilityResult find_signer_set_exhaustive(const std::vector<Point>& candidates, std::size_t mRS,
                                             double mD) {
  const auto n = candidates.size();
  if (n > 24) throw DomainError("exhaustive search is limited to 24 candidates");
  FeasibilityResult best;
  best.exhaustive = true;
  FeasibilityResult witness;
  if (n < mRS || mRS == 0) {
    best.subset.resize(n);
    std::iota(best.subset.begin(), best.subset.end(), std::size_t{0});
    if (n >= 2) best.average_distance = 0.0;
    return best;
  }
  auto d = distances(candidates);
  std::vector<std::size_t> members;

  auto visit = [&](auto&& self, std::size_t i, double sum) -> void {
    if (members.size() >= mRS) {
      double avg = members.size() < 2 ? 0.0 : sum / pairs(members.size());
      if (avg >= mD && better_tight(avg, members, best)) {
        best.feasible = true;
        best.subset = members;
        best.average_distance = avg;
      }
      if (better_witness(avg, members, witness)) {
        witness.subset = members;
        witness.average_distance = avg;
      }
    }
    for (std::size_t j = i; j < n; ++j) {
      double add = 0.0;
      for (auto m : members) add += d[m][j];
      members.push_back(j);
      self(self, j + 1, sum + add);
      members.pop_back();
    }
  };
  visit(visit, 0, 0.0);
  if (!best.feasible) {
    witness.exhaustive = true;
    return witness;
  }
  return best;
}

FeasibilityResult find_signer_set_heuristic(const std::vector<Point>& candidates, std::size_t mRS,
                                            double mD) {
  const auto n = candidates.size();
  FeasibilityResult out;
  if (n < mRS || mRS == 0) {
    out.subset.resize(n);
    std::iota(out.subset.begin(), out.subset.end(), std::size_t{0});
    return out;
  }
  auto d = distances(candidates);
  auto sum_of = [&](const std::vector<std::size_t>& s) {
    double t = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b) t += d[s[a]][s[b]];
    return t;
  };
  auto avg_of = [&](const std::vector<std::size_t>& s) {
    return s.size() < 2 ? 0.0 : sum_of(s) / pairs(s.size());
  };

  // Swap refinement under a score; returns when no single swap improves.
  auto refine = [&](std::vector<std::size_t>& s, auto&& score) {
    std::vector<char> in(n, 0);
    for (auto v : s) in[v] = 1;
    double cur = score(s);
    for (int round = 0; round < 1000; ++round) {
      bool moved = false;
      for (std::size_t a = 0; a < s.size() && !moved; ++a) {
        for (std::size_t v = 0; v < n && !moved; ++v) {
          if (in[v]) continue;
          auto old = s[a];
          s[a] = v;
          double cand = score(s);
          if (cand > cur + 1e-12) {
            in[old] = 0;
            in[v] = 1;
            cur = cand;
            moved = true;
          } else {
            s[a] = old;
          }
        }
      }
      if (!moved) break;
    }
  };

  std::size_t starts = std::min<std::size_t>(n, 64);
  std::vector<std::size_t> widest;
  double widest_avg = -1.0;
  for (std::size_t k = 0; k < starts; ++k) {
    std::size_t s0 = k * n / starts;
    std::vector<std::size_t> s{s0};
    std::vector<double> gain(n, 0.0);
    std::vector<char> in(n, 0);
    in[s0] = 1;
    for (std::size_t v = 0; v < n; ++v) gain[v] = d[s0][v];
    while (s.size() < mRS) {
      std::size_t pick = n;
      for (std::size_t v = 0; v < n; ++v)
        if (!in[v] && (pick == n || gain[v] > gain[pick])) pick = v;
      s.push_back(pick);
      in[pick] = 1;
      for (std::size_t v = 0; v < n; ++v) gain[v] += d[pick][v];
    }
    refine(s, avg_of);
    std::sort(s.begin(), s.end());
    double a = avg_of(s);
    if (a > widest_avg || (a == widest_avg && s < widest)) {
      widest_avg = a;
      widest = s;
    }
  }
  if (widest_avg < mD) {
    out.subset = widest;
    out.average_distance = widest_avg;
    return out;
  }

  // Tighten: lower the average while it stays at or above mD.
  auto tight = widest;
  refine(tight, [&](const std::vector<std::size_t>& s) {
    double a = avg_of(s);
    return a >= mD ? -a : -std::numeric_limits<double>::infinity();
  });
  std::sort(tight.begin(), tight.end());
  out.feasible = true;
  out.subset = tight;
  out.average_distance = avg_of(tight);
  return out;
}

FeasibilityResult find_signer_set(const std::vector<Point>& positions,
                                  const std::vector<bool>& can_sign, std::size_t mRS, double mD) {
  if (can_sign.size() != positions.size()) throw DomainError("one sign-ability flag per node");
  std::vector<Point> cand;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (can_sign[i]) {
      cand.push_back(positions[i]);
      index.push_back(i);
    }
  auto r = cand.size() <= 20 ? find_signer_set_exhaustive(cand, mRS, mD)
                             : find_signer_set_heuristic(cand, mRS, mD);
  for (auto& v : r.subset) v = index[v];
  return r;
}

FeasibilityResult poc_feasibility(const std::vector<Point>& positions,
                                  const std::vector<bool>& can_sign, std::size_t mRS, double mD) {
  auto r = find_signer_set(positions, can_sign, mRS, mD);
  if (!r.feasible) {
    std::ostringstream os;
    os << "no " << mRS << "-signer set reaches " << mD << " m; best witness has "
       << r.subset.size() << " nodes at " << r.average_distance << " m";
    throw Infeasible(os.str());
  }
  return r;
}

// ---------------------------------------------------------------------------

DeltaModel least_squares(const std::vector<double>& d, const std::vector<double>& t) {
  if (d.size() != t.size()) throw DomainError("distance and time columns differ in length");
  if (d.size() < 2) throw DegenerateDesign("need at least two probes");
  double n = static_cast<double>(d.size());
  double sd = 0, sdd = 0, st = 0, sdt = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sd += d[i];
    sdd += d[i] * d[i];
    st += t[i];
    sdt += d[i] * t[i];
  }
  double det = n * sdd - sd * sd;
  if (!(det > 1e-12 * std::max(1.0, n * sdd))) throw DegenerateDesign("all probe distances are equal");
  DeltaModel m;
  m.p = (n * sdt - sd * st) / det;
  m.q = (sdd * st - sd * sdt) / det;
  return m;
}

double delta_from_model(const DeltaModel& m, Point s) {
  double x = std::max(s.x * s.x, (1 - s.x) * (1 - s.x));
  double y = std::max(s.y * s.y, (1 - s.y) * (1 - s.y));
  return m.p * (x + y) + m.q;
}

DeltaFit fit_delta(const std::vector<ProbeRecord>& probes, Point self_location, double side) {
  if (!(side > 0.0)) throw DomainError("side must be positive");
  DeltaFit f;
  Point self{self_location.x / side, self_location.y / side};
  for (const auto& p : probes) {
    if (!(p.a <= p.b && p.b <= p.c && p.c <= p.reply_received))
      throw DomainError("probe timestamps out of order");
    Point loc{p.trusted_location.x / side, p.trusted_location.y / side};
    f.distances.push_back(distance(self, loc));
    f.times.push_back(0.5 * static_cast<double>((p.b - p.a) + (p.reply_received - p.c)));
  }
  f.model = least_squares(f.distances, f.times);
  f.delta = delta_from_model(f.model, self);
  double far = 0.0;
  for (Point c : {Point{0, 0}, Point{0, 1}, Point{1, 0}, Point{1, 1}}) far = std::max(far, distance(self, c));
  f.delta_corner = f.model.p * far + f.model.q;
  return f;
}

// ---------------------------------------------------------------------------

std::string Table::to_csv(int precision) const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  char buf[64];
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      double v = r[i];
      if (std::isinf(v))
        out += v > 0 ? "inf" : "-inf";
      else if (std::isnan(v))
        out += "nan";
      else if (v == std::floor(v) && std::abs(v) < 1e15)
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v)), out += buf;
      else
        std::snprintf(buf, sizeof buf, "%.*f", precision, v), out += buf;
    }
    out += '\n';
  }
  return out;
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(v / static_cast<double>(xs.size()));
  return m;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  double pos = q * static_cast<double>(xs.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

Table spread_table(const std::vector<std::vector<double>>& curves) {
  Table t{{"slot", "mean", "std"}, {}};
  std::size_t len = 0;
  for (const auto& c : curves) len = std::max(len, c.size());
  for (std::size_t s = 0; s < len; ++s) {
    std::vector<double> xs;
    for (const auto& c : curves)
      if (!c.empty()) xs.push_back(c[std::min(s, c.size() - 1)]);
    auto m = mean_std(xs);
    t.rows.push_back({static_cast<double>(s), m.mean, m.std});
  }
  return t;
}

Table events_table(const std::map<std::uint32_t, std::vector<EventTotals>>& by_population) {
  Table t{{"population", "meet_mean", "meet_std", "leave_mean", "leave_std", "forward_mean",
           "forward_std"},
          {}};
  for (const auto& [n, runs] : by_population) {
    std::vector<double> m, l, f;
    for (const auto& r : runs) {
      m.push_back(r.meet);
      l.push_back(r.leave);
      f.push_back(r.forward);
    }
    auto a = mean_std(m), b = mean_std(l), c = mean_std(f);
    t.rows.push_back({static_cast<double>(n), a.mean, a.std, b.mean, b.std, c.mean, c.std});
  }
  return t;
}

Table signer_distance_table(const std::map<double, std::vector<std::vector<double>>>& by_rho) {
  Table t{{"rho", "slot", "mean", "std"}, {}};
  for (const auto& [rho, curves] : by_rho) {
    auto s = spread_table(curves);
    for (const auto& r : s.rows) t.rows.push_back({rho, r[0], r[1], r[2]});
  }
  return t;
}

Table unique_meets_table(const std::map<std::int64_t, std::vector<double>>& by_duration) {
  Table t{{"duration", "min", "p25", "mean", "p75", "max"}, {}};
  for (const auto& [dur, xs] : by_duration) {
    if (xs.empty()) continue;
    auto m = mean_std(xs);
    t.rows.push_back({static_cast<double>(dur), quantile(xs, 0.0), quantile(xs, 0.25), m.mean,
                      quantile(xs, 0.75), quantile(xs, 1.0)});
  }
  return t;
}

Table silent_table(const std::map<double, std::vector<double>>& by_fraction) {
  Table t{{"silent_fraction", "mean", "std"}, {}};
  for (const auto& [f, xs] : by_fraction) {
    auto m = mean_std(xs);
    t.rows.push_back({f, m.mean, m.std});
  }
  return t;
}

}  // namespace mneme::analysis
