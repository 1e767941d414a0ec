#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gryphon/broker.hpp"
#include "gryphon/client_session.hpp"
#include "gryphon/log_store.hpp"

namespace gryphon {

// One injected fault. Link faults name the link "a-b" (order-insensitive) and
// apply to multicast EVENT frames; addressed retransmissions pass through so
// the repair path can always make progress.
struct FaultSpec {
  std::string kind;  // drop | duplicate | reorder | crash | restart | partition
  std::string link;
  std::string broker;
  std::string space;           // drop/duplicate: restrict to one space ("" = any)
  std::uint64_t from_seq = 0;  // drop: inclusive seq range
  std::uint64_t to_seq = 0;
  std::uint64_t seq = 0;       // duplicate
  std::uint64_t window = 0;    // reorder: extra delay in [0, window]
  std::uint64_t tick = 0;      // crash/restart
  std::uint64_t from_tick = 0; // partition/reorder: active tick range (0 = open)
  std::uint64_t to_tick = 0;

  static FaultSpec from_json(const nlohmann::json& j);
};

// Deterministic discrete-event simulation of a broker deployment. The
// simulator IS the scheduler: actions are keyed (tick, insertion counter), so
// identical (seed, scenario) inputs replay byte-identically. It reuses the
// production BrokerNode and ClientSession verbatim through the Sender and
// ClientPort abstractions.
class Simulator : public Sender {
 public:
  struct Options {
    std::uint64_t link_delay = 1;
    std::uint64_t tick_limit = 200000;
    std::uint64_t gap_timeout = 20;
  };

  Simulator(FlowGraph genesis, std::uint64_t seed);
  Simulator(FlowGraph genesis, std::uint64_t seed, Options opt);
  ~Simulator() override;

  // ---- setup -----------------------------------------------------------
  // schema defaults to the genesis definition of `space`; pass one
  // explicitly when subscribing to a space added by reflection later.
  void add_client(const std::string& id, const std::string& broker,
                  const std::string& space, const std::string& mode,
                  const std::string& predicate = "", const std::string& spec = "",
                  std::uint64_t subscribe_tick = 0,
                  std::optional<Schema> schema = std::nullopt);
  void publish_at(std::uint64_t tick, const std::string& space,
                  std::vector<Value> values, const std::string& publisher = "pub");
  void meta_at(std::uint64_t tick, const std::string& kind,
               const nlohmann::json& payload);
  void add_fault(const FaultSpec& f);

  // ---- run -------------------------------------------------------------
  // Runs to quiescence (empty schedule) or the tick limit; true = quiesced.
  bool run();
  std::uint64_t now() const { return now_; }

  // ---- inspection ------------------------------------------------------
  BrokerNode* broker(const std::string& id);
  ClientSession* client(const std::string& id);
  const std::vector<std::string>& trace() const { return trace_; }
  std::string trace_text() const;
  // (space, seq) pairs acknowledged to publishers
  const std::vector<std::pair<std::string, std::uint64_t>>& acked() const {
    return acked_;
  }
  std::uint64_t total_multicast() const;

  // ---- Sender ----------------------------------------------------------
  void to_broker(const std::string& from, const std::string& peer,
                 const nlohmann::json& f) override;
  void to_client(const std::string& from, const std::string& client,
                 const nlohmann::json& f) override;

 private:
  struct BrokerRec {
    std::shared_ptr<MemLogStore::Backing> backing;
    std::unique_ptr<MemLogStore> store;
    std::unique_ptr<BrokerNode> node;
    bool up = true;
  };
  struct Port;
  struct ClientRec {
    std::string attach;
    std::unique_ptr<Port> port;
    std::unique_ptr<ClientSession> session;
  };

  FlowGraph genesis_;
  Options opt_;
  std::mt19937_64 rng_;
  std::uint64_t now_ = 0;
  std::uint64_t ctr_ = 0;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::function<void()>> schedule_;
  std::map<std::string, BrokerRec> brokers_;
  std::map<std::string, ClientRec> clients_;
  std::vector<FaultSpec> faults_;
  std::vector<std::string> trace_;
  std::vector<std::pair<std::string, std::uint64_t>> acked_;

  void at(std::uint64_t tick, std::function<void()> action);
  void record(nlohmann::json j);
  void crash(const std::string& broker);
  void restart(const std::string& broker);
  void finalize_trace(bool quiesced, std::size_t backlog);

  friend struct Port;
};

// Scenario script driver: graph, workload, clients, faults, meta changes.
struct ScenarioResult {
  bool quiesced = false;
  std::vector<std::string> trace;
};
ScenarioResult run_scenario(const nlohmann::json& scenario, std::uint64_t seed);

}  // namespace gryphon
