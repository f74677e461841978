#include "mneme/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "mneme/error.hpp"

namespace mneme::netsim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_heading(double h) {
  h = std::fmod(h, kTwoPi);
  return h < 0 ? h + kTwoPi : h;
}

std::uint64_t pair_key(NodeId a, NodeId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

/// Uniform grid with cells of one radius, for neighbor queries.
class Grid {
 public:
  Grid(double width, double height, double cell)
      : cell_(std::max(cell, 1e-9)),
        nx_(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(width / cell_)))),
        ny_(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(height / cell_)))),
        buckets_(nx_ * ny_) {}

  void insert(std::size_t id, const Point& p) { buckets_[index(p)].push_back(id); }

  template <typename F>
  void for_each_pair_within(const std::vector<Point>& pts, double radius, F&& f) const {
    const double r2 = radius * radius;
    static constexpr int kForward[4][2] = {{1, 0}, {-1, 1}, {0, 1}, {1, 1}};
    for (std::size_t cy = 0; cy < ny_; ++cy) {
      for (std::size_t cx = 0; cx < nx_; ++cx) {
        const auto& here = buckets_[cy * nx_ + cx];
        for (std::size_t i = 0; i < here.size(); ++i)
          for (std::size_t j = i + 1; j < here.size(); ++j)
            check(pts, here[i], here[j], r2, f);
        for (const auto& d : kForward) {
          auto ox = static_cast<long>(cx) + d[0];
          auto oy = static_cast<long>(cy) + d[1];
          if (ox < 0 || oy < 0 || ox >= static_cast<long>(nx_) || oy >= static_cast<long>(ny_))
            continue;
          const auto& other = buckets_[static_cast<std::size_t>(oy) * nx_ + static_cast<std::size_t>(ox)];
          for (auto a : here)
            for (auto b : other) check(pts, a, b, r2, f);
        }
      }
    }
  }

 private:
  std::size_t index(const Point& p) const {
    auto cx = std::min(nx_ - 1, static_cast<std::size_t>(std::max(0.0, p.x / cell_)));
    auto cy = std::min(ny_ - 1, static_cast<std::size_t>(std::max(0.0, p.y / cell_)));
    return cy * nx_ + cx;
  }

  template <typename F>
  static void check(const std::vector<Point>& pts, std::size_t a, std::size_t b, double r2, F& f) {
    double dx = pts[a].x - pts[b].x;
    double dy = pts[a].y - pts[b].y;
    if (dx * dx + dy * dy <= r2) f(std::min(a, b), std::max(a, b));
  }

  double cell_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace

double RadioSpec::radius() const {
  switch (kind) {
    case Radio::bluetooth:
      return 20.0;
    case Radio::wifi_direct:
      return 50.0;
    case Radio::lte_direct:
      return 100.0;
    case Radio::custom:
      return custom_radius;
  }
  return custom_radius;
}

std::string RadioSpec::name() const {
  switch (kind) {
    case Radio::bluetooth:
      return "bluetooth";
    case Radio::wifi_direct:
      return "wifi_direct";
    case Radio::lte_direct:
      return "lte_direct";
    case Radio::custom:
      return "custom";
  }
  return "custom";
}

RadioSpec RadioSpec::parse(const std::string& name) {
  if (name == "bluetooth") return {Radio::bluetooth, 0.0};
  if (name == "wifi_direct") return {Radio::wifi_direct, 0.0};
  if (name == "lte_direct") return {Radio::lte_direct, 0.0};
  throw DomainError("unknown radio '" + name + "'");
}

void SimConfig::validate() const {
  if (!(width > 0) || !(height > 0)) throw DomainError("area dimensions must be positive");
  if (population == 0) throw DomainError("population must be positive");
  if (!(radio.radius() > 0)) throw DomainError("radio radius must be positive");
  if (radio.radius() > std::min(width, height))
    throw DomainError("radio radius exceeds the area");
  if (speed < 0) throw DomainError("speed must be non-negative");
  if (duration < 0) throw DomainError("duration must be non-negative");
  if (forwarding_probability < 0 || forwarding_probability > 1)
    throw DomainError("forwarding probability outside [0,1]");
  if (turn_probability < 0 || turn_probability > 1)
    throw DomainError("turn probability outside [0,1]");
  if (churn_rate < 0 || churn_rate > 1) throw DomainError("churn rate outside [0,1]");
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::meet:
      return "MEET";
    case EventKind::leave:
      return "LEAVE";
    case EventKind::forward:
      return "FORWARD";
  }
  return "?";
}

void write_event(std::ostream& os, const SimEvent& e) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(e.payload));
  os << e.slot << ',' << to_string(e.kind) << ',' << e.a << ',' << e.b << ',' << hash << '\n';
}

// ---------------------------------------------------------------------------

World::World(const SimConfig& config) : config_(config) {
  config_.validate();
  radius_ = config_.radio.radius();
  Rng layout(derive_seed(config_.seed, 0));
  nodes_.resize(config_.population);
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    nodes_[i].id = i;
    nodes_[i].position = {layout.uniform(0, config_.width), layout.uniform(0, config_.height)};
    nodes_[i].heading = layout.uniform(0, kTwoPi);
  }
  init_rngs();
}

World::World(const SimConfig& config, std::vector<Point> positions,
             std::optional<std::vector<double>> headings)
    : config_(config) {
  config_.population = static_cast<std::uint32_t>(positions.size());
  config_.validate();
  radius_ = config_.radio.radius();
  if (headings && headings->size() != positions.size())
    throw DomainError("one heading per node required");
  Rng layout(derive_seed(config_.seed, 0));
  nodes_.resize(positions.size());
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const auto& p = positions[i];
    if (p.x < 0 || p.y < 0 || p.x > config_.width || p.y > config_.height)
      throw DomainError("node position outside the area");
    nodes_[i].id = i;
    nodes_[i].position = p;
    nodes_[i].heading = headings ? wrap_heading((*headings)[i]) : layout.uniform(0, kTwoPi);
  }
  init_rngs();
}

void World::init_rngs() {
  rngs_.clear();
  rngs_.reserve(nodes_.size());
  for (NodeId i = 0; i < nodes_.size(); ++i) rngs_.emplace_back(derive_seed(config_.seed, i + 1));
  adjacency_.assign(nodes_.size(), {});
}

std::vector<Point> World::positions() const {
  std::vector<Point> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.position);
  return out;
}

std::size_t World::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const MobileNode& n) { return n.active; }));
}

void World::move_nodes() {
  const double w = config_.width;
  const double h = config_.height;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& n = nodes_[i];
    auto& rng = rngs_[i];
    if (rng.bernoulli(config_.turn_probability)) n.heading = rng.uniform(0, kTwoPi);
    if (config_.speed == 0) continue;
    n.position.x += config_.speed * std::cos(n.heading);
    n.position.y += config_.speed * std::sin(n.heading);
    if (n.position.x < 0) {
      n.position.x = -n.position.x;
      n.heading = std::numbers::pi - n.heading;
    } else if (n.position.x > w) {
      n.position.x = 2 * w - n.position.x;
      n.heading = std::numbers::pi - n.heading;
    }
    if (n.position.y < 0) {
      n.position.y = -n.position.y;
      n.heading = -n.heading;
    } else if (n.position.y > h) {
      n.position.y = 2 * h - n.position.y;
      n.heading = -n.heading;
    }
    n.position.x = std::clamp(n.position.x, 0.0, w);
    n.position.y = std::clamp(n.position.y, 0.0, h);
    n.heading = wrap_heading(n.heading);
  }
}

void World::apply_churn() {
  if (config_.churn_rate <= 0) return;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (rngs_[i].bernoulli(config_.churn_rate)) nodes_[i].active = !nodes_[i].active;
}

void World::rebuild_contacts() {
  const double cell = std::max(radius_, 1e-9);
  const auto nx = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config_.width / cell)));
  const auto ny = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(config_.height / cell)));
  auto cell_of = [&](const Point& p) {
    auto cx = std::min(nx - 1, static_cast<std::size_t>(std::max(0.0, p.x / cell)));
    auto cy = std::min(ny - 1, static_cast<std::size_t>(std::max(0.0, p.y / cell)));
    return std::pair{cx, cy};
  };

  // Counting sort of node ids into cells; ids stay ascending inside a cell.
  cell_start_.assign(nx * ny + 1, 0);
  node_cell_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].active) continue;
    auto [cx, cy] = cell_of(nodes_[i].position);
    node_cell_[i] = cy * nx + cx;
    ++cell_start_[node_cell_[i] + 1];
  }
  for (std::size_t c = 0; c < nx * ny; ++c) cell_start_[c + 1] += cell_start_[c];
  cell_nodes_.resize(cell_start_.back());
  {
    auto fill = cell_start_;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].active) cell_nodes_[fill[node_cell_[i]]++] = static_cast<NodeId>(i);
  }

  const double r2 = radius_ * radius_;
  contacts_.clear();
  std::vector<NodeId> near;
  for (std::size_t a = 0; a < nodes_.size(); ++a) {
    if (!nodes_[a].active) continue;
    const auto& pa = nodes_[a].position;
    auto [cx, cy] = cell_of(pa);
    near.clear();
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        long ox = static_cast<long>(cx) + dx, oy = static_cast<long>(cy) + dy;
        if (ox < 0 || oy < 0 || ox >= static_cast<long>(nx) || oy >= static_cast<long>(ny)) continue;
        auto c = static_cast<std::size_t>(oy) * nx + static_cast<std::size_t>(ox);
        for (auto k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
          auto b = cell_nodes_[k];
          if (b <= a) continue;
          const auto& pb = nodes_[b].position;
          double ddx = pa.x - pb.x, ddy = pa.y - pb.y;
          if (ddx * ddx + ddy * ddy <= r2) near.push_back(b);
        }
      }
    }
    std::sort(near.begin(), near.end());
    for (auto b : near) contacts_.emplace_back(static_cast<NodeId>(a), b);
  }
  adjacency_dirty_ = true;
}

const std::vector<NodeId>& World::neighbors(NodeId n) const {
  if (adjacency_dirty_) {
    for (auto& adj : adjacency_) adj.clear();
    for (const auto& [a, b] : contacts_) {
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
    adjacency_dirty_ = false;
  }
  return adjacency_[n];
}

std::vector<SimEvent> World::step() {
  if (now_ < 0) {
    now_ = 0;
  } else {
    ++now_;
    move_nodes();
    apply_churn();
  }

  auto previous = std::move(contacts_);
  rebuild_contacts();

  std::vector<SimEvent> events = std::move(carried_events_);
  carried_events_.clear();
  {
    std::vector<std::pair<NodeId, NodeId>> met;
    std::vector<std::pair<NodeId, NodeId>> left;
    std::set_difference(contacts_.begin(), contacts_.end(), previous.begin(), previous.end(),
                        std::back_inserter(met));
    std::set_difference(previous.begin(), previous.end(), contacts_.begin(), contacts_.end(),
                        std::back_inserter(left));
    for (const auto& [a, b] : met) events.push_back({now_, EventKind::meet, a, b, 0});
    for (const auto& [a, b] : left) events.push_back({now_, EventKind::leave, a, b, 0});
  }

  deliveries_.clear();
  for (const auto& d : pending_) {
    auto& ms = messages_[d.message];
    ms.queued[d.to] = 0;
    if (!nodes_[d.to].active) continue;
    if (ms.informed_at[d.to] == kNeverSlot) {
      inform(ms, d.message, d.to, d.from);
      deliveries_.push_back({d.message, d.from, d.to, true});
    } else {
      deliveries_.push_back({d.message, d.from, d.to, false});
    }
    events.push_back({now_, EventKind::forward, d.from, d.to, ms.payload});
  }
  pending_.clear();

  relay_step(events);

  std::sort(events.begin(), events.end(), [](const SimEvent& x, const SimEvent& y) {
    return std::tie(x.slot, x.kind, x.a, x.b, x.payload) < std::tie(y.slot, y.kind, y.a, y.b, y.payload);
  });
  return events;
}

bool World::relays(MessageState& ms, MessageId id, NodeId node) {
  auto& r = ms.relays[node];
  if (r == 2) {
    bool decision = true;
    if (node != ms.origin) {
      if (relay_policy_ && !relay_policy_(node, id)) {
        decision = false;
      } else if (config_.forwarding_probability < 1.0) {
        auto bits = splitmix64(derive_seed(config_.seed ^ 0x5eedf00dULL,
                                           (static_cast<std::uint64_t>(id) << 32) | node));
        decision = static_cast<double>(bits >> 11) * 0x1.0p-53 < config_.forwarding_probability;
      }
    }
    r = decision ? 1 : 0;
  }
  return r == 1;
}

void World::inform(MessageState& ms, MessageId, NodeId node, NodeId from) {
  ms.informed_at[node] = now_;
  ms.first_from[node] = from;
  ++ms.informed;
}

void World::relay_step(std::vector<SimEvent>& events) {
  const auto active = active_count();
  for (MessageId id = 0; id < messages_.size(); ++id) {
    auto& ms = messages_[id];
    if (ms.retired) continue;

    if (!wormholes_.empty()) {
      bool changed = true;
      while (changed) {
        changed = false;
        for (const auto& [u, v] : wormholes_) {
          if (!nodes_[u].active || !nodes_[v].active) continue;
          for (auto [x, y] : {std::pair{u, v}, std::pair{v, u}}) {
            if (ms.informed_at[x] <= now_ && ms.informed_at[y] == kNeverSlot && relays(ms, id, x)) {
              inform(ms, id, y, x);
              deliveries_.push_back({id, x, y, true});
              events.push_back({now_, EventKind::forward, x, y, ms.payload});
              changed = true;
            }
          }
        }
      }
    }

    if (!redundant_ && ms.informed >= active) continue;
    for (const auto& [a, b] : contacts_) {
      for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
        if (ms.informed_at[x] > now_ || ms.queued[y]) continue;
        if (ms.informed_at[y] == kNeverSlot) {
          if (!relays(ms, id, x)) continue;
          ms.queued[y] = 1;
          pending_.push_back({id, x, y, true});
        } else if (redundant_ && ms.first_from[x] != y) {
          if (!relays(ms, id, x)) continue;
          if (ms.copies_sent.insert(pair_key(x, y)).second) pending_.push_back({id, x, y, false});
        }
      }
    }
  }
}

MessageId World::inject(NodeId origin, std::uint64_t payload) {
  if (!started()) throw DomainError("inject before the first step");
  if (origin >= nodes_.size()) throw DomainError("origin out of range");
  if (!nodes_[origin].active) throw DomainError("origin is inactive");
  MessageState ms;
  ms.origin = origin;
  ms.payload = payload;
  ms.informed_at.assign(nodes_.size(), kNeverSlot);
  ms.first_from.assign(nodes_.size(), origin);
  ms.relays.assign(nodes_.size(), 2);
  ms.queued.assign(nodes_.size(), 0);
  auto id = static_cast<MessageId>(messages_.size());
  messages_.push_back(std::move(ms));
  inform(messages_.back(), id, origin, origin);
  // Relay decisions for the injection slot; wormhole hops surface in the next step's log.
  relay_step(carried_events_);
  return id;
}

std::vector<SimEvent> step(World& world) { return world.step(); }

void EventCounts::add(const std::vector<SimEvent>& events) {
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::meet:
        ++meet;
        break;
      case EventKind::leave:
        ++leave;
        break;
      case EventKind::forward:
        ++forward;
        break;
    }
  }
}

SpreadResult broadcast(World& world, NodeId origin, Slot slots, std::uint64_t payload,
                       const std::function<void(const std::vector<SimEvent>&)>& on_events) {
  SpreadResult out;
  auto observe = [&](const std::vector<SimEvent>& ev) {
    out.events.add(ev);
    if (on_events) on_events(ev);
  };
  if (!world.started()) observe(world.step());
  auto id = world.inject(origin, payload);
  out.injected_at = world.now();
  auto fraction = [&] {
    auto active = world.active_count();
    return active == 0 ? 0.0
                       : static_cast<double>(world.informed_count(id)) / static_cast<double>(active);
  };
  out.curve.push_back(fraction());
  for (Slot k = 1; k <= slots; ++k) {
    observe(world.step());
    out.curve.push_back(fraction());
  }
  out.informed_at.resize(world.size());
  for (NodeId n = 0; n < world.size(); ++n) out.informed_at[n] = world.informed_at(id, n);
  world.retire(id);
  return out;
}

OriginDelay delivery_delay(World& world, NodeId origin, Slot horizon) {
  if (!world.started()) world.step();
  OriginDelay out;
  out.origin = origin;
  out.position = world.nodes()[origin].position;
  auto id = world.inject(origin);
  auto start = world.now();
  auto everyone = [&] {
    for (const auto& n : world.nodes())
      if (n.active && world.informed_at(id, n.id) == kNeverSlot) return false;
    return true;
  };
  while (!everyone() && world.now() - start < horizon) world.step();
  if (everyone()) {
    out.delay = world.now() - start;
  } else {
    for (const auto& n : world.nodes())
      if (n.active && world.informed_at(id, n.id) == kNeverSlot) out.unreachable.push_back(n.id);
  }
  world.retire(id);
  return out;
}

DeltaReport measure_delta(const SimConfig& config, std::size_t trials, Slot horizon) {
  if (trials == 0) throw DomainError("at least one trial required");
  DeltaReport report;
  report.delta = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto cfg = config;
    cfg.seed = derive_seed(config.seed, 0x7e1a000 + t);
    World world(cfg);
    world.step();
    Rng pick(derive_seed(cfg.seed, 0xde17a));
    auto origin = static_cast<NodeId>(pick.below(world.size()));
    auto d = delivery_delay(world, origin, horizon);
    d.trial = t;
    report.delta = std::max(report.delta, d.delay);
    report.per_origin.push_back(std::move(d));
  }
  return report;
}

std::vector<std::vector<std::size_t>> rgg_components(const std::vector<Point>& positions,
                                                     double radius) {
  const auto n = positions.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  if (n > 0) {
    double max_x = 0, max_y = 0;
    for (const auto& p : positions) {
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
    Grid grid(max_x + radius, max_y + radius, radius);
    for (std::size_t i = 0; i < n; ++i) grid.insert(i, positions[i]);
    grid.for_each_pair_within(positions, radius, [&](std::size_t a, std::size_t b) {
      auto ra = find(a), rb = find(b);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    });
  }

  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> slot(n, SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = find(i);
    if (slot[r] == SIZE_MAX) {
      slot[r] = comps.size();
      comps.emplace_back();
    }
    comps[slot[r]].push_back(i);
  }
  return comps;
}

double expected_neighbors(double active_nodes, double normalized_radius) {
  if (active_nodes < 0) throw DomainError("negative population");
  if (!(normalized_radius > 0) || normalized_radius > 1)
    throw DomainError("normalized radius outside (0,1]");
  return std::numbers::pi * active_nodes * normalized_radius * normalized_radius;
}

double mean_degree(const std::vector<Point>& positions, double radius) {
  if (positions.empty()) return 0.0;
  double max_x = 0, max_y = 0;
  for (const auto& p : positions) {
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  Grid grid(max_x + radius, max_y + radius, radius);
  for (std::size_t i = 0; i < positions.size(); ++i) grid.insert(i, positions[i]);
  std::size_t edges = 0;
  grid.for_each_pair_within(positions, radius, [&](std::size_t, std::size_t) { ++edges; });
  return 2.0 * static_cast<double>(edges) / static_cast<double>(positions.size());
}

std::vector<Point> uniform_positions(std::size_t n, double width, double height, Rng& rng) {
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p.x = rng.uniform(0, width);
    p.y = rng.uniform(0, height);
  }
  return pts;
}

UniqueMeetTracker::UniqueMeetTracker(std::size_t nodes)
    : nodes_(nodes), words_((nodes + 63) / 64), bits_(nodes * words_, 0), counts_(nodes, 0) {}

void UniqueMeetTracker::observe(const std::vector<SimEvent>& events) {
  for (const auto& e : events) {
    if (e.kind != EventKind::meet) continue;
    for (auto [x, y] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
      auto& word = bits_[x * words_ + y / 64];
      auto mask = std::uint64_t{1} << (y % 64);
      if (!(word & mask)) {
        word |= mask;
        ++counts_[x];
      }
    }
  }
}

bool UniqueMeetTracker::has_met(NodeId a, NodeId b) const {
  return (bits_[a * words_ + b / 64] >> (b % 64)) & 1;
}

}  // namespace mneme::netsim
