#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gryphon/flow_graph.hpp"
#include "gryphon/interp.hpp"
#include "gryphon/log_store.hpp"
#include "gryphon/matching.hpp"
#include "gryphon/reflection.hpp"

namespace gryphon {

// Outbound transport. The simulator implements it with scheduled, fault-
// injected deliveries; the TCP runtime with sockets. Frames addressed to a
// peer broker flow over the unique tree link toward it.
class Sender {
 public:
  virtual ~Sender() = default;
  virtual void to_broker(const std::string& from, const std::string& peer,
                         const nlohmann::json& f) = 0;
  virtual void to_client(const std::string& from, const std::string& client,
                         const nlohmann::json& f) = 0;
};

// Interest in a space, flooded to every broker so senders can decide per
// link whether an event is needed beyond it. Ordered and optimistic
// consumers need the whole sequence; the predicate shapes only the client's
// delivered view and the local match annotations.
struct Interest {
  std::string sub_id;
  std::string client;
  std::string attach_broker;
  std::string space;
  std::string mode;  // ordered | optimistic | snapshot
  std::string predicate_text;
  std::uint64_t epoch = 0;  // re-subscription generation, for flood dedup
};

// One broker: hosts its assigned spaces, sequences and persists events,
// executes arcs for locally hosted destinations, multicasts over tree links
// with link-level filtering, and serves attached clients.
class BrokerNode {
 public:
  BrokerNode(std::string id, const FlowGraph& genesis, LogStore& log, Sender& out);

  const std::string& id() const { return id_; }
  std::uint64_t graph_version() const { return graphs_.size() - 1; }
  const FlowGraph& graph() const { return *graphs_.back(); }

  // Entry point for every frame, whether from a peer broker or a client.
  void on_frame(const std::string& from, bool from_broker, const nlohmann::json& f);

  bool hosts(const std::string& space) const;
  std::uint64_t high_water(const std::string& space) const;
  const std::vector<Event>& history(const std::string& space) const;
  const InterpState* interp_state(const std::string& space) const;
  const std::vector<Event>& meta_history() const { return meta_history_; }
  const MatchTree* match_tree(const std::string& space) const;

  nlohmann::json stats() const;

  // Per-link transmission counters; multicast counts first transmissions
  // only, addressed retransmissions count separately.
  struct LinkCounter {
    std::uint64_t multicast = 0;
    std::uint64_t retransmit = 0;
  };
  const std::map<std::string, LinkCounter>& link_counters() const {
    return link_counters_;
  }

  static std::string link_key(const std::string& a, const std::string& b);

 private:
  struct HostedHistory {
    std::vector<Event> history;
    std::uint64_t next_seq = 1;
    bool durable = false;
  };

  std::string id_;
  std::vector<std::shared_ptr<const FlowGraph>> graphs_;  // version 0..n
  std::vector<MetaChange> meta_changes_;                  // confirmed, in order
  LogStore& log_;
  Sender& out_;

  std::map<std::string, HostedHistory> hosted_;
  std::map<std::string, InterpState> interp_;
  std::map<std::string, std::set<std::uint64_t>> handled_;  // multicast dedup
  std::map<std::string, std::set<std::uint64_t>> repair_requested_;
  std::map<std::string, Interest> interests_;               // by sub_id
  std::map<std::string, std::unique_ptr<MatchTree>> match_trees_;
  std::map<std::string, LinkCounter> link_counters_;

  // meta-space replica (every broker, coordinator included)
  std::vector<Event> meta_history_;
  std::map<std::uint64_t, std::pair<Event, std::string>> meta_buffer_;  // seq -> (event, arrival link)
  std::uint64_t meta_next_ = 1;
  std::string pending_install_req_;  // change installed early at the owner

  // coordinator request pipeline
  std::deque<nlohmann::json> meta_queue_;
  bool meta_busy_ = false;
  std::uint64_t req_counter_ = 0;
  struct PendingConfirm {
    std::string request_id;
    std::string kind;
    std::string payload_text;
  } pending_confirm_;

  std::map<std::uint64_t, std::vector<std::pair<std::string, nlohmann::json>>>
      stalled_;  // required graph version -> frames

  // ---- lifecycle -------------------------------------------------------
  void restore_from_log();
  HostedHistory& hosted_or_create(const std::string& space);

  // ---- event path ------------------------------------------------------
  const FlowGraph& effective_graph(const std::string& space, std::uint64_t seq) const;
  Event publish_local(const std::string& space, std::vector<Value> values,
                      const std::string& origin);
  void process_event(const std::string& space, const Event& e,
                     const std::string& from_link);
  void execute_arc(const ArcDef& a, const Event& e);
  void deliver_to_local_clients(const std::string& space, const Event& e);
  void forward_multicast(const std::string& space, const Event& e,
                         const std::string& from_link);
  bool chain_live(const FlowGraph& g, const std::string& space) const;
  bool needed_over_link(const FlowGraph& g, const std::string& peer,
                        const std::string& space, const Event& e) const;
  std::vector<std::string> neighbors(const FlowGraph& g) const;

  // ---- frame handlers --------------------------------------------------
  void dispatch(const std::string& from, bool from_broker, const nlohmann::json& f);
  void handle_publish(const std::string& from, bool from_broker, nlohmann::json f);
  void handle_subscribe(const std::string& from, bool from_broker, nlohmann::json f);
  void handle_unsubscribe(const std::string& from, bool from_broker, nlohmann::json f);
  void handle_event(const std::string& from, bool from_broker, const nlohmann::json& f);
  void handle_nack(const std::string& from, bool from_broker, nlohmann::json f);
  void handle_snapshot_request(const std::string& from, bool from_broker,
                               nlohmann::json f);
  void handle_meta_request(const std::string& from, bool from_broker, nlohmann::json f);
  void handle_meta_confirm(const nlohmann::json& f);

  // ---- reflection ------------------------------------------------------
  bool is_coordinator() const;
  void append_meta(const MetaEvent& m);
  void ingest_meta_event(const Event& e, const std::string& from_link);
  void apply_meta_record(const Event& e, bool restoring);
  void pump_meta_queue();
  void flush_stalled();

  // ---- addressed routing ----------------------------------------------
  void route_addressed(const std::string& from, nlohmann::json f);
  void send_to_broker_via(const std::string& dst_broker, const nlohmann::json& f,
                          bool retransmission);
  void send_to_client_at(const std::string& attach, const std::string& client,
                         nlohmann::json f, bool retransmission);
  void replay_to_client(const std::string& space, std::uint64_t from_seq,
                        std::uint64_t to_seq, const std::string& client,
                        const std::string& attach);
  nlohmann::json event_frame(const std::string& space, const Event& e) const;
};

}  // namespace gryphon
