#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gryphon/interp.hpp"
#include "gryphon/predicate.hpp"

namespace gryphon {

// The session's view of the outside world: frames to the attach broker,
// one-shot timers, and a delivery sink (the simulator's trace, or stdout).
class ClientPort {
 public:
  virtual ~ClientPort() = default;
  virtual void send(const nlohmann::json& f) = 0;
  virtual void schedule_timer(std::uint64_t delay, std::uint64_t token) = 0;
  virtual void on_deliver(const std::string& client, const nlohmann::json& record) = 0;
};

// Client-side delivery machinery. Ordered mode keeps a per-space cursor and
// an out-of-order buffer, NACKing gaps that outlast the gap timeout.
// Optimistic mode applies events immediately through a seq-guarded
// InterpState and falls back to a snapshot after repeated failed repairs.
class ClientSession {
 public:
  static constexpr std::uint64_t kDefaultGapTimeout = 20;
  static constexpr std::size_t kBufferBound = 4096;

  ClientSession(std::string id, ClientPort& port,
                std::uint64_t gap_timeout = kDefaultGapTimeout);

  const std::string& id() const { return id_; }

  // One subscription per space per session. predicate_text filters the
  // delivered view only; gap accounting runs over the full stream.
  // spec_text (optimistic/snapshot modes) is the client's interpretation.
  void subscribe(const std::string& space, const std::string& mode,
                 const Schema& schema, const std::string& predicate_text = "",
                 const std::string& spec_text = "");
  void unsubscribe(const std::string& space);

  // Re-sends every SUBSCRIBE with the current cursor (reconnect path).
  void resubscribe();

  void on_frame(const nlohmann::json& f);
  void on_timer(std::uint64_t token);

  // Delivered view, in delivery order, as trace records.
  const std::vector<nlohmann::json>& delivered() const { return delivered_; }
  std::vector<Event> delivered_events(const std::string& space) const;

  const InterpState* state(const std::string& space) const;
  std::uint64_t cursor(const std::string& space) const;

  // True when no subscription has an unresolved gap or pending buffer.
  bool settled() const;

 private:
  struct Sub {
    std::string sub_id;
    std::string space;
    std::string mode;  // ordered | optimistic | snapshot
    std::string predicate_text;
    std::string spec_text;
    Schema schema;
    std::optional<Predicate> predicate;
    std::optional<InterpSpec> spec;
    InterpState state;
    std::uint64_t cursor = 0;               // ordered: last delivered seq
    std::map<std::uint64_t, Event> buffer;  // ordered: held out-of-order
    std::uint64_t floor = 0;                // optimistic: snapshot floor
    std::set<std::uint64_t> applied;        // optimistic: seqs above floor
    std::uint64_t high = 0;
    int gap_checks = 0;
    bool timer_pending = false;
    bool awaiting_snapshot = false;
  };

  std::string id_;
  ClientPort& port_;
  std::uint64_t gap_timeout_;
  std::map<std::string, Sub> subs_;  // by space
  std::map<std::uint64_t, std::string> timer_space_;
  std::uint64_t next_timer_ = 1;
  std::uint64_t next_sub_ = 1;
  std::uint64_t generation_ = 1;  // bumps on resubscribe; brokers dedup floods by it
  std::vector<nlohmann::json> delivered_;

  void send_subscribe(const Sub& s);
  void deliver(Sub& s, const Event& e);
  void handle_event(Sub& s, const Event& e);
  void handle_snapshot(Sub& s, const nlohmann::json& f);
  void arm_timer(Sub& s);
  bool has_gap(const Sub& s) const;
  std::pair<std::uint64_t, std::uint64_t> first_gap(const Sub& s) const;
  void request_snapshot(Sub& s);
};

}  // namespace gryphon
