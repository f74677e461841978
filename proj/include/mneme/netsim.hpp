#pragma once

// Seeded lockstep simulation of a mobile device-to-device network: random
// direction mobility with wall reflection, fixed radio radii, MEET/LEAVE
// contact events and epidemic message relaying one hop per slot.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mneme/random.hpp"
#include "mneme/types.hpp"

namespace mneme::netsim {

using NodeId = std::uint32_t;
using MessageId = std::uint32_t;

enum class Radio { bluetooth, wifi_direct, lte_direct, custom };

struct RadioSpec {
  Radio kind = Radio::wifi_direct;
  double custom_radius = 0.0;

  double radius() const;
  std::string name() const;
  static RadioSpec parse(const std::string& name);  // "bluetooth", "wifi_direct", ...
  static RadioSpec custom(double meters) { return {Radio::custom, meters}; }
};

struct SimConfig {
  double width = 500.0;
  double height = 500.0;
  std::uint32_t population = 1000;
  RadioSpec radio;
  double speed = 1.0;  // meters per slot
  Slot duration = 100;
  std::uint64_t seed = 1;
  double forwarding_probability = 1.0;
  double turn_probability = 0.05;
  double churn_rate = 0.0;  // per node per slot

  /// Throws DomainError on non-positive dimensions or an oversize radius.
  void validate() const;
};

enum class EventKind : std::uint8_t { meet = 0, leave = 1, forward = 2 };

struct SimEvent {
  Slot slot = 0;
  EventKind kind = EventKind::meet;
  NodeId a = 0;
  NodeId b = 0;
  std::uint64_t payload = 0;  // message payload hash for FORWARD

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

const char* to_string(EventKind k);
inline constexpr const char* kEventLogHeader = "slot,kind,node_a,node_b,payload_hash";
void write_event(std::ostream& os, const SimEvent& e);

struct MobileNode {
  NodeId id = 0;
  Point position;
  double heading = 0.0;
  bool active = true;
};

struct Delivery {
  MessageId message = 0;
  NodeId from = 0;
  NodeId to = 0;
  bool first = true;  // false for redundant copies to already-informed nodes
};

/// Decides whether a node relays a message it holds. Used to inject silent
/// adversaries; nodes for which it returns false still receive.
using RelayPolicy = std::function<bool(NodeId, MessageId)>;

class World {
 public:
  explicit World(const SimConfig& config);
  /// Fixed initial layout; headings default to uniform random draws.
  World(const SimConfig& config, std::vector<Point> positions,
        std::optional<std::vector<double>> headings = std::nullopt);

  const SimConfig& config() const { return config_; }
  double radius() const { return radius_; }
  bool started() const { return now_ >= 0; }
  /// Slot of the current state; -1 before the first step.
  Slot now() const { return now_; }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<MobileNode>& nodes() const { return nodes_; }
  std::vector<Point> positions() const;
  std::size_t active_count() const;

  /// In-range pairs (a < b) at the current slot, sorted.
  const std::vector<std::pair<NodeId, NodeId>>& contacts() const { return contacts_; }
  const std::vector<NodeId>& neighbors(NodeId n) const;

  /// Advances one slot and returns that slot's events, ordered by
  /// (kind, node_a, node_b). The first call emits slot 0 without moving.
  std::vector<SimEvent> step();

  // Message layer.
  MessageId inject(NodeId origin, std::uint64_t payload = 0);
  std::size_t message_count() const { return messages_.size(); }
  Slot informed_at(MessageId m, NodeId n) const { return messages_[m].informed_at[n]; }
  std::size_t informed_count(MessageId m) const { return messages_[m].informed; }
  /// Node that delivered the first copy; the node itself for the origin.
  NodeId first_from(MessageId m, NodeId n) const { return messages_[m].first_from[n]; }
  /// Stops relaying of a message once every active node holds it.
  void retire(MessageId m) { messages_[m].retired = true; }

  void set_relay_policy(RelayPolicy policy) { relay_policy_ = std::move(policy); }
  void set_wormholes(std::vector<std::pair<NodeId, NodeId>> links) { wormholes_ = std::move(links); }
  /// Also deliver copies to nodes that already hold the message (once per
  /// ordered pair); needed to collect several forwarder chains.
  void set_redundant_copies(bool on) { redundant_ = on; }

  /// Deliveries that arrived at the current slot.
  const std::vector<Delivery>& deliveries() const { return deliveries_; }

 private:
  struct MessageState {
    NodeId origin = 0;
    std::uint64_t payload = 0;
    std::vector<Slot> informed_at;
    std::vector<NodeId> first_from;
    std::vector<std::uint8_t> relays;
    std::vector<std::uint8_t> queued;
    std::unordered_set<std::uint64_t> copies_sent;  // ordered pairs, only with redundant copies
    std::size_t informed = 0;
    bool retired = false;
  };

  void init_rngs();
  void move_nodes();
  void apply_churn();
  void rebuild_contacts();
  void inform(MessageState& ms, MessageId id, NodeId node, NodeId from);
  void relay_step(std::vector<SimEvent>& events);
  bool relays(MessageState& ms, MessageId id, NodeId node);

  SimConfig config_;
  double radius_ = 0.0;
  Slot now_ = -1;
  std::vector<MobileNode> nodes_;
  std::vector<Rng> rngs_;
  std::vector<std::pair<NodeId, NodeId>> contacts_;
  mutable std::vector<std::vector<NodeId>> adjacency_;
  mutable bool adjacency_dirty_ = true;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> node_cell_;
  std::vector<NodeId> cell_nodes_;
  std::vector<MessageState> messages_;
  std::vector<Delivery> pending_;
  std::vector<Delivery> deliveries_;
  std::vector<SimEvent> carried_events_;
  std::vector<std::pair<NodeId, NodeId>> wormholes_;
  RelayPolicy relay_policy_;
  bool redundant_ = false;
};

std::vector<SimEvent> step(World& world);

struct EventCounts {
  std::size_t meet = 0;
  std::size_t leave = 0;
  std::size_t forward = 0;
  void add(const std::vector<SimEvent>& events);
};

struct SpreadResult {
  /// curve[k] = informed / active, k slots after injection (curve[0] = origin only).
  std::vector<double> curve;
  std::vector<Slot> informed_at;  // absolute slot, kNeverSlot if never
  EventCounts events;
  Slot injected_at = 0;
};

/// Epidemic gossip from `origin` for `slots` slots after injection. Starts the
/// world if needed. `on_events` sees every slot's events (for logging).
SpreadResult broadcast(World& world, NodeId origin, Slot slots, std::uint64_t payload = 0,
                       const std::function<void(const std::vector<SimEvent>&)>& on_events = {});

inline constexpr Slot kInfiniteDelta = kNeverSlot;

struct OriginDelay {
  std::size_t trial = 0;
  NodeId origin = 0;
  Point position;
  Slot delay = kInfiniteDelta;  // slots until the last active node is informed
  std::vector<NodeId> unreachable;
};

struct DeltaReport {
  Slot delta = kInfiniteDelta;  // max over trials and origins
  std::vector<OriginDelay> per_origin;
};

/// Slots until every active node holds a message broadcast from `origin`;
/// kInfiniteDelta if some node is still uninformed after `horizon` slots.
OriginDelay delivery_delay(World& world, NodeId origin, Slot horizon);

/// Each trial builds a fresh world (seed derived from config.seed and the
/// trial index) and broadcasts from one uniformly drawn origin.
DeltaReport measure_delta(const SimConfig& config, std::size_t trials, Slot horizon);

/// Connected components of the geometric graph with edges at distance <= radius.
std::vector<std::vector<std::size_t>> rgg_components(const std::vector<Point>& positions,
                                                     double radius);

/// pi * N_a * R^2 with the area normalized to 1.
double expected_neighbors(double active_nodes, double normalized_radius);

double mean_degree(const std::vector<Point>& positions, double radius);

std::vector<Point> uniform_positions(std::size_t n, double width, double height, Rng& rng);

/// Distinct peers met by each node, as a count per node.
class UniqueMeetTracker {
 public:
  explicit UniqueMeetTracker(std::size_t nodes);
  void observe(const std::vector<SimEvent>& events);
  std::size_t unique_meets(NodeId n) const { return counts_[n]; }
  bool has_met(NodeId a, NodeId b) const;
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  std::size_t nodes_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::size_t> counts_;
};

}  // namespace mneme::netsim
