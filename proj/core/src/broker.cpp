#include "gryphon/broker.hpp"

#include <algorithm>

#include "gryphon/error.hpp"
#include "gryphon/frame.hpp"

namespace gryphon {

std::string BrokerNode::link_key(const std::string& a, const std::string& b) {
  return a < b ? a + "-" + b : b + "-" + a;
}

BrokerNode::BrokerNode(std::string id, const FlowGraph& genesis, LogStore& log,
                       Sender& out)
    : id_(std::move(id)), log_(log), out_(out) {
  if (!genesis.has_broker(id_)) {
    throw Error(errc::dangling_reference, "broker " + id_ + " not in the graph");
  }
  graphs_.push_back(std::make_shared<const FlowGraph>(genesis));
  restore_from_log();
}

bool BrokerNode::is_coordinator() const {
  return graphs_.back()->coordinator() == id_;
}

bool BrokerNode::hosts(const std::string& space) const {
  const SpaceDef* s = graphs_.back()->find_space(space);
  return s && s->broker == id_;
}

std::uint64_t BrokerNode::high_water(const std::string& space) const {
  auto it = hosted_.find(space);
  return it == hosted_.end() ? 0 : it->second.next_seq - 1;
}

const std::vector<Event>& BrokerNode::history(const std::string& space) const {
  static const std::vector<Event> kEmpty;
  auto it = hosted_.find(space);
  return it == hosted_.end() ? kEmpty : it->second.history;
}

const InterpState* BrokerNode::interp_state(const std::string& space) const {
  auto it = interp_.find(space);
  return it == interp_.end() ? nullptr : &it->second;
}

const MatchTree* BrokerNode::match_tree(const std::string& space) const {
  auto it = match_trees_.find(space);
  return it == match_trees_.end() ? nullptr : it->second.get();
}

// ---------------------------------------------------------------------------
// recovery

void BrokerNode::restore_from_log() {
  std::vector<std::string> logged = log_.spaces();
  auto has_log = [&](const std::string& s) {
    return std::find(logged.begin(), logged.end(), s) != logged.end();
  };

  // the meta replica first, so added spaces exist before their logs replay
  if (has_log(kMetaSpace)) {
    for (const Event& e : replay_log(log_, kMetaSpace, meta_schema())) {
      apply_meta_record(e, /*restoring=*/true);
      meta_next_ = *e.seq + 1;
    }
  }

  const FlowGraph& g = *graphs_.back();
  for (const SpaceDef& s : g.spaces()) {
    if (s.broker != id_) continue;
    if (s.kind == SpaceKind::History) {
      HostedHistory h;
      h.durable = s.durable;
      if (s.name == kMetaSpace) {
        h.history = meta_history_;
        h.next_seq = meta_history_.size() + 1;
      } else if (s.durable && has_log(s.name)) {
        h.history = replay_log(log_, s.name, s.schema);
        h.next_seq = h.history.size() + 1;
      }
      for (const Event& e : h.history) handled_[s.name].insert(*e.seq);
      hosted_.emplace(s.name, std::move(h));
    }
  }
  // interpretation states re-fold from co-hosted source histories; a remote
  // or non-durable source leaves the state empty until new events arrive
  for (const SpaceDef& s : g.spaces()) {
    if (s.broker != id_ || s.kind != SpaceKind::Interpretation || !s.interp) continue;
    InterpState st(*s.interp);
    for (const ArcDef* a : g.in_arcs(s.name)) {
      auto src = hosted_.find(a->src);
      if (src != hosted_.end()) {
        st = interpret_history(*s.interp, src->second.history);
      }
    }
    interp_.emplace(s.name, std::move(st));
  }
}

BrokerNode::HostedHistory& BrokerNode::hosted_or_create(const std::string& space) {
  auto it = hosted_.find(space);
  if (it != hosted_.end()) return it->second;
  const SpaceDef& s = graphs_.back()->space(space);
  if (s.broker != id_ || s.kind != SpaceKind::History) {
    throw Error(errc::not_hosted, id_ + " does not host history " + space);
  }
  HostedHistory h;
  h.durable = s.durable;
  return hosted_.emplace(space, std::move(h)).first->second;
}

// ---------------------------------------------------------------------------
// graph versions

const FlowGraph& BrokerNode::effective_graph(const std::string& space,
                                             std::uint64_t seq) const {
  // the first pending barrier for this space freezes it on the older version
  for (std::size_t i = 0; i < meta_changes_.size(); ++i) {
    if (meta_changes_[i].space == space && seq < meta_changes_[i].activation) {
      return *graphs_[i];
    }
  }
  return *graphs_.back();
}

// ---------------------------------------------------------------------------
// event path

nlohmann::json BrokerNode::event_frame(const std::string& space, const Event& e) const {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : e.values) values.push_back(value_to_json(v));
  return {{"type", frame::kEvent},
          {"space", space},
          {"seq", *e.seq},
          {"values", values},
          {"origin", e.origin}};
}

Event BrokerNode::publish_local(const std::string& space, std::vector<Value> values,
                                const std::string& origin) {
  HostedHistory& h = hosted_or_create(space);
  const Schema& schema = graphs_.back()->space(space).schema;
  Event e = validate_event(schema, std::move(values), origin);
  e.seq = h.next_seq++;
  h.history.push_back(e);
  if (h.durable) {
    // durability before any propagation or publisher ACK
    log_.append(space, encode_event_record(space, e));
  }
  handled_[space].insert(*e.seq);
  if (space == kMetaSpace) {
    // the coordinator folds its own meta records before forwarding them
    apply_meta_record(e, /*restoring=*/false);
    meta_next_ = *e.seq + 1;
  }
  process_event(space, e, "");
  return e;
}

void BrokerNode::process_event(const std::string& space, const Event& e,
                               const std::string& from_link) {
  deliver_to_local_clients(space, e);
  const FlowGraph& g = effective_graph(space, *e.seq);
  for (const ArcDef* a : g.out_arcs(space)) {
    const SpaceDef& dst = g.space(a->dst);
    if (dst.broker != id_) continue;  // computed where the destination lives
    try {
      execute_arc(*a, e);
    } catch (const Error&) {
      // runtime evaluation failure (e.g. division by zero): the event is
      // dropped for this arc only, matching pre/post-rewrite behavior
    }
  }
  forward_multicast(space, e, from_link);
}

void BrokerNode::execute_arc(const ArcDef& a, const Event& e) {
  switch (a.kind) {
    case ArcKind::Select:
      if (a.predicate->eval(e)) publish_local(a.dst, e.values, e.origin);
      break;
    case ArcKind::Transform:
      publish_local(a.dst, a.transform->apply(e).values, e.origin);
      break;
    case ArcKind::Interpret: {
      auto it = interp_.find(a.dst);
      if (it == interp_.end()) {
        it = interp_.emplace(a.dst, InterpState(*a.interp)).first;
      }
      it->second.apply(e);
      break;
    }
    case ArcKind::Expand:
      break;  // expansion is on demand (snapshot path), not streaming
  }
}

void BrokerNode::deliver_to_local_clients(const std::string& space, const Event& e) {
  std::set<std::string> matched;
  auto tree = match_trees_.find(space);
  if (tree != match_trees_.end() && tree->second->size() > 0) {
    matched = tree->second->match(e);
  }
  for (const auto& [sub_id, in] : interests_) {
    if (in.space != space || in.attach_broker != id_) continue;
    nlohmann::json f = event_frame(space, e);
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& m : matched) {
      if (m.rfind(sub_id, 0) == 0) subs.push_back(m);
    }
    f["subs"] = std::move(subs);
    out_.to_client(id_, in.client, f);
  }
}

std::vector<std::string> BrokerNode::neighbors(const FlowGraph& g) const {
  std::vector<std::string> out;
  for (const auto& [a, b] : g.links()) {
    if (a == id_) out.push_back(b);
    if (b == id_) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool BrokerNode::chain_live(const FlowGraph& g, const std::string& space) const {
  const SpaceDef& s = g.space(space);
  if (s.durable || s.kind == SpaceKind::Interpretation) return true;
  for (const auto& [sub_id, in] : interests_) {
    if (in.space == space) return true;
  }
  for (const ArcDef* a : g.out_arcs(space)) {
    if (chain_live(g, a->dst)) return true;
  }
  return false;
}

bool BrokerNode::needed_over_link(const FlowGraph& g, const std::string& peer,
                                  const std::string& space, const Event& e) const {
  if (space == kMetaSpace) return true;  // every broker replicates the meta space
  auto in_subtree = [&](const std::string& broker) {
    return broker != id_ && g.next_hop(id_, broker) == peer;
  };
  for (const auto& [sub_id, in] : interests_) {
    if (in.space == space && in_subtree(in.attach_broker)) return true;
  }
  for (const ArcDef* a : g.out_arcs(space)) {
    const SpaceDef& dst = g.space(a->dst);
    if (!in_subtree(dst.broker)) continue;
    if (a->kind == ArcKind::Select && !a->predicate->eval(e)) continue;
    if (chain_live(g, a->dst)) return true;
  }
  return false;
}

void BrokerNode::forward_multicast(const std::string& space, const Event& e,
                                   const std::string& from_link) {
  const FlowGraph& g = effective_graph(space, *e.seq);
  nlohmann::json f = event_frame(space, e);
  f["gv"] = graph_version();
  for (const std::string& peer : neighbors(g)) {
    std::string link = link_key(id_, peer);
    if (link == from_link) continue;
    if (!needed_over_link(g, peer, space, e)) continue;
    link_counters_[link].multicast++;
    out_.to_broker(id_, peer, f);
  }
}

// ---------------------------------------------------------------------------
// addressed routing

void BrokerNode::send_to_broker_via(const std::string& dst_broker,
                                    const nlohmann::json& f, bool retransmission) {
  std::string hop = graphs_.back()->next_hop(id_, dst_broker);
  if (hop.empty()) return;
  if (retransmission) link_counters_[link_key(id_, hop)].retransmit++;
  out_.to_broker(id_, hop, f);
}

void BrokerNode::send_to_client_at(const std::string& attach,
                                   const std::string& client, nlohmann::json f,
                                   bool retransmission) {
  if (attach == id_) {
    out_.to_client(id_, client, f);
    return;
  }
  f["addressed"] = {{"broker", attach}, {"client", client}};
  send_to_broker_via(attach, f, retransmission);
}

void BrokerNode::route_addressed(const std::string& from, nlohmann::json f) {
  nlohmann::json a = f.at("addressed");
  std::string dstb = a.at("broker").get<std::string>();
  if (dstb != id_) {
    std::string hop = graphs_.back()->next_hop(id_, dstb);
    if (!hop.empty()) out_.to_broker(id_, hop, f);
    return;
  }
  f.erase("addressed");
  if (a.contains("client")) {
    out_.to_client(id_, a.at("client").get<std::string>(), f);
    return;
  }
  dispatch(from, true, f);
}

void BrokerNode::replay_to_client(const std::string& space, std::uint64_t from_seq,
                                  std::uint64_t to_seq, const std::string& client,
                                  const std::string& attach) {
  const auto& h = hosted_.at(space).history;
  for (std::uint64_t q = from_seq; q <= to_seq && q >= 1; ++q) {
    if (q > h.size()) break;
    nlohmann::json f = event_frame(space, h[q - 1]);
    f["retransmit"] = true;
    send_to_client_at(attach, client, std::move(f), /*retransmission=*/true);
  }
}

// ---------------------------------------------------------------------------
// frame handlers

void BrokerNode::on_frame(const std::string& from, bool from_broker,
                          const nlohmann::json& f) {
  if (f.contains("addressed")) {
    route_addressed(from, f);
    return;
  }
  dispatch(from, from_broker, f);
}

void BrokerNode::dispatch(const std::string& from, bool from_broker,
                          const nlohmann::json& f) {
  std::string type = f.at("type").get<std::string>();
  if (type == frame::kPublish) {
    handle_publish(from, from_broker, f);
  } else if (type == frame::kSubscribe) {
    handle_subscribe(from, from_broker, f);
  } else if (type == frame::kUnsubscribe) {
    handle_unsubscribe(from, from_broker, f);
  } else if (type == frame::kEvent) {
    handle_event(from, from_broker, f);
  } else if (type == frame::kNack) {
    handle_nack(from, from_broker, f);
  } else if (type == frame::kSnapshot) {
    handle_snapshot_request(from, from_broker, f);
  } else if (type == frame::kMetaRequest) {
    handle_meta_request(from, from_broker, f);
  } else if (type == frame::kMetaConfirm) {
    handle_meta_confirm(f);
  } else if (type == frame::kStats) {
    if (!from_broker) {
      nlohmann::json reply = stats();
      reply["type"] = frame::kStats;
      out_.to_client(id_, from, reply);
    }
  } else if (type == frame::kConnect || type == frame::kAck) {
    // connection bookkeeping lives in the transport layer
  } else if (!from_broker) {
    out_.to_client(id_, from,
                   {{"type", frame::kError},
                    {"code", errc::unknown_type},
                    {"message", "unknown frame type " + type}});
  }
}

void BrokerNode::handle_publish(const std::string& from, bool from_broker,
                                nlohmann::json f) {
  std::string space = f.at("space").get<std::string>();
  if (!f.contains("attach")) f["attach"] = id_;
  const SpaceDef* s = graphs_.back()->find_space(space);
  if (!s) {
    if (!from_broker) {
      out_.to_client(id_, from, {{"type", frame::kError},
                                 {"code", errc::dangling_reference},
                                 {"message", "no such space " + space}});
    }
    return;
  }
  if (s->broker != id_) {
    f["addressed"] = {{"broker", s->broker}};
    send_to_broker_via(s->broker, f, false);
    return;
  }
  std::vector<Value> values;
  const Schema& schema = s->schema;
  try {
    if (s->kind != SpaceKind::History) {
      throw Error(errc::kind_mismatch, "cannot publish into an interpretation");
    }
    for (std::size_t i = 0; i < schema.arity(); ++i) {
      values.push_back(value_from_json(f.at("values").at(i), schema.at(i).type));
    }
    if (f.at("values").size() != schema.arity()) {
      throw Error(errc::arity_mismatch, "publish arity mismatch");
    }
  } catch (const Error& err) {
    nlohmann::json reply{{"type", frame::kError},
                         {"code", err.code()},
                         {"message", err.what()}};
    send_to_client_at(f.value("attach", id_), f.value("publisher", from),
                      std::move(reply), false);
    return;
  }
  Event e = publish_local(space, std::move(values), f.value("publisher", from));
  nlohmann::json ack{{"type", frame::kAck}, {"space", space}, {"seq", *e.seq}};
  send_to_client_at(f.value("attach", id_), f.value("publisher", from),
                    std::move(ack), false);
}

void BrokerNode::handle_subscribe(const std::string& from, bool from_broker,
                                  nlohmann::json f) {
  Interest in;
  in.sub_id = f.at("sub_id").get<std::string>();
  in.client = f.at("client").get<std::string>();
  in.space = f.at("space").get<std::string>();
  in.mode = f.value("mode", "ordered");
  in.predicate_text = f.value("predicate", "");
  in.epoch = f.value("epoch", std::uint64_t{1});
  in.attach_broker = from_broker ? f.value("attach", id_) : id_;
  f["attach"] = in.attach_broker;

  const SpaceDef* s = graphs_.back()->find_space(in.space);
  if (!s) {
    if (!from_broker) {
      out_.to_client(id_, from, {{"type", frame::kError},
                                 {"code", errc::dangling_reference},
                                 {"message", "no such space " + in.space}});
    }
    return;
  }

  auto known = interests_.find(in.sub_id);
  bool fresh = known == interests_.end() || known->second.epoch < in.epoch;
  bool local = !from_broker;
  if (!fresh && !local) return;  // flood already seen

  if (known != interests_.end()) {
    auto tree = match_trees_.find(known->second.space);
    if (tree != match_trees_.end()) {
      // one entry for a single disjunct, id@1.. for several
      std::vector<std::string> doomed;
      if (tree->second->contains(in.sub_id)) doomed.push_back(in.sub_id);
      for (int i = 1;; ++i) {
        std::string candidate = in.sub_id + "@" + std::to_string(i);
        if (!tree->second->contains(candidate)) break;
        doomed.push_back(candidate);
      }
      for (const auto& d : doomed) tree->second->remove(d);
    }
    interests_.erase(known);
  }
  interests_.emplace(in.sub_id, in);

  if (in.attach_broker == id_) {
    Predicate p = in.predicate_text.empty()
                      ? Predicate::match_all(s->schema)
                      : Predicate::parse(in.predicate_text, s->schema);
    auto tree = match_trees_.find(in.space);
    if (tree == match_trees_.end()) {
      tree = match_trees_.emplace(in.space, std::make_unique<MatchTree>(s->schema))
                 .first;
    }
    for (const auto& sub : subscriptions_from(p, in.client, in.sub_id)) {
      if (!tree->second->contains(sub.sub_id)) tree->second->add(sub);
    }
  }

  // catch-up for a resuming cursor
  std::uint64_t cursor = f.value("cursor", std::uint64_t{0});
  if (in.attach_broker == id_) {
    if (in.mode == "snapshot" || (in.mode == "optimistic" && cursor > 0)) {
      nlohmann::json req{{"type", frame::kSnapshot},
                         {"client", in.client},
                         {"space", in.space},
                         {"spec", f.value("spec", "")},
                         {"cursor", cursor}};
      handle_snapshot_request(in.client, false, std::move(req));
    } else if (in.mode == "ordered") {
      if (hosts(in.space)) {
        if (cursor < high_water(in.space)) {
          replay_to_client(in.space, cursor + 1, high_water(in.space), in.client, id_);
        }
      } else {
        nlohmann::json nack{{"type", frame::kNack},
                            {"client", in.client},
                            {"attach", id_},
                            {"space", in.space},
                            {"from", cursor + 1},
                            {"to", 0}};
        nack["addressed"] = {{"broker", s->broker}};
        send_to_broker_via(s->broker, nack, false);
      }
    }
  }

  // flood the interest over the tree
  for (const std::string& peer : neighbors(*graphs_.back())) {
    if (from_broker && link_key(id_, peer) == link_key(id_, from)) continue;
    out_.to_broker(id_, peer, f);
  }
}

void BrokerNode::handle_unsubscribe(const std::string& from, bool from_broker,
                                    nlohmann::json f) {
  std::string sub_id = f.at("sub_id").get<std::string>();
  auto it = interests_.find(sub_id);
  if (it == interests_.end()) return;  // flood already seen
  auto tree = match_trees_.find(it->second.space);
  if (tree != match_trees_.end()) {
    // remove every disjunct entry registered under this sub id
    std::vector<std::string> doomed;
    if (tree->second->contains(sub_id)) doomed.push_back(sub_id);
    for (int i = 1;; ++i) {
      std::string candidate = sub_id + "@" + std::to_string(i);
      if (!tree->second->contains(candidate)) break;
      doomed.push_back(candidate);
    }
    for (const auto& d : doomed) tree->second->remove(d);
  }
  interests_.erase(it);
  for (const std::string& peer : neighbors(*graphs_.back())) {
    if (from_broker && link_key(id_, peer) == link_key(id_, from)) continue;
    out_.to_broker(id_, peer, f);
  }
}

void BrokerNode::handle_event(const std::string& from, bool from_broker,
                              const nlohmann::json& f) {
  std::string space = f.at("space").get<std::string>();
  std::uint64_t gv = f.value("gv", std::uint64_t{0});
  if (space != kMetaSpace && gv > graph_version()) {
    // stale graph: hold until the meta event carrying the change arrives
    stalled_[gv].emplace_back(from, f);
    return;
  }
  const SpaceDef* s = graphs_.back()->find_space(space);
  if (!s) return;
  std::uint64_t seq = f.at("seq").get<std::uint64_t>();
  if (!handled_[space].insert(seq).second) return;  // duplicate absorbed
  if (from_broker && space != kMetaSpace && s->broker != id_) {
    // a gap below this seq means an earlier multicast was lost on the way
    // here; pull the missing range from the host as addressed retransmits
    const auto& have = handled_[space];
    auto& asked = repair_requested_[space];
    std::uint64_t run_start = 0;
    auto flush = [&](std::uint64_t end_exclusive) {
      if (run_start == 0) return;
      nlohmann::json nack{{"type", frame::kNack},
                          {"space", space},
                          {"from", run_start},
                          {"to", end_exclusive - 1},
                          {"broker", id_}};
      nack["addressed"] = {{"broker", s->broker}};
      send_to_broker_via(s->broker, nack, false);
      run_start = 0;
    };
    for (std::uint64_t q = 1; q < seq; ++q) {
      if (have.count(q) || asked.count(q)) {
        flush(q);
        continue;
      }
      asked.insert(q);
      if (run_start == 0) run_start = q;
    }
    flush(seq);
  }
  std::vector<Value> values;
  for (std::size_t i = 0; i < s->schema.arity(); ++i) {
    values.push_back(value_from_json(f.at("values").at(i), s->schema.at(i).type));
  }
  Event e = validate_event(s->schema, std::move(values), f.value("origin", ""));
  e.seq = seq;
  std::string from_link = from_broker ? link_key(id_, from) : "";
  if (space == kMetaSpace) {
    ingest_meta_event(e, from_link);
    return;
  }
  process_event(space, e, from_link);
}

void BrokerNode::handle_nack(const std::string& from, bool from_broker,
                             nlohmann::json f) {
  std::string space = f.at("space").get<std::string>();
  if (!from_broker) f["attach"] = id_;
  const SpaceDef* s = graphs_.back()->find_space(space);
  if (!s) return;
  if (s->broker != id_) {
    f["addressed"] = {{"broker", s->broker}};
    send_to_broker_via(s->broker, f, false);
    return;
  }
  std::uint64_t from_seq = f.at("from").get<std::uint64_t>();
  std::uint64_t to_seq = f.at("to").get<std::uint64_t>();
  if (to_seq == 0) to_seq = high_water(space);
  if (f.contains("broker")) {
    // a peer broker repairing its replica (meta space or a multicast gap)
    std::string peer = f.at("broker").get<std::string>();
    const auto& h = hosted_.at(space).history;
    for (std::uint64_t q = from_seq; q <= to_seq && q <= h.size(); ++q) {
      nlohmann::json ef = event_frame(space, h[q - 1]);
      ef["gv"] = graph_version();
      ef["addressed"] = {{"broker", peer}};
      send_to_broker_via(peer, ef, /*retransmission=*/true);
    }
    return;
  }
  replay_to_client(space, from_seq, to_seq, f.at("client").get<std::string>(),
                   f.value("attach", id_));
}

void BrokerNode::handle_snapshot_request(const std::string& from, bool from_broker,
                                         nlohmann::json f) {
  std::string space = f.at("space").get<std::string>();
  if (!from_broker) f["attach"] = id_;
  const SpaceDef* s = graphs_.back()->find_space(space);
  if (!s) return;
  if (s->broker != id_) {
    f["addressed"] = {{"broker", s->broker}};
    send_to_broker_via(s->broker, f, false);
    return;
  }
  std::string client = f.at("client").get<std::string>();
  std::string attach = f.value("attach", id_);
  std::uint64_t cursor = f.value("cursor", std::uint64_t{0});
  const auto& h = hosted_.at(space).history;
  std::uint64_t high = h.size();
  std::string spec_text = f.value("spec", "");
  InterpSpec spec;
  if (!spec_text.empty()) {
    try {
      spec = InterpSpec::parse(spec_text, s->schema);
    } catch (const Error& err) {
      send_to_client_at(attach, client,
                        {{"type", frame::kError},
                         {"code", err.code()},
                         {"message", err.what()}},
                        false);
      return;
    }
  }
  if (spec_text.empty() || !spec.expandable()) {
    // no usable interpretation: full replay of the missed suffix
    replay_to_client(space, cursor + 1, high, client, attach);
    return;
  }
  std::span<const Event> suffix(h.data() + cursor, high - cursor);
  std::vector<Event> delta = compress_history(spec, suffix);
  nlohmann::json jevents = nlohmann::json::array();
  for (const Event& e : delta) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& v : e.values) row.push_back(value_to_json(v));
    jevents.push_back(std::move(row));
  }
  nlohmann::json full_state = interpret_history(spec, h).to_json();
  nlohmann::json reply{{"type", frame::kSnapshot}, {"space", space}, {"floor", high}};
  if (full_state.dump().size() < jevents.dump().size()) {
    reply["state"] = std::move(full_state);
  } else {
    reply["events"] = std::move(jevents);
  }
  send_to_client_at(attach, client, std::move(reply), /*retransmission=*/true);
}

// ---------------------------------------------------------------------------
// reflection

void BrokerNode::append_meta(const MetaEvent& m) {
  publish_local(kMetaSpace, meta_to_event(m).values, "coordinator");
}

void BrokerNode::ingest_meta_event(const Event& e, const std::string& from_link) {
  if (*e.seq < meta_next_) return;
  meta_buffer_.emplace(*e.seq, std::make_pair(e, from_link));
  while (!meta_buffer_.empty() && meta_buffer_.begin()->first == meta_next_) {
    auto [ev, link] = meta_buffer_.begin()->second;
    meta_buffer_.erase(meta_buffer_.begin());
    ++meta_next_;
    apply_meta_record(ev, /*restoring=*/false);
    deliver_to_local_clients(kMetaSpace, ev);
    forward_multicast(kMetaSpace, ev, link);
  }
  if (!meta_buffer_.empty()) {
    // pull the missing prefix from the coordinator
    nlohmann::json nack{{"type", frame::kNack},
                        {"broker", id_},
                        {"space", kMetaSpace},
                        {"from", meta_next_},
                        {"to", meta_buffer_.begin()->first - 1}};
    const std::string& coord = graphs_.back()->coordinator();
    nack["addressed"] = {{"broker", coord}};
    send_to_broker_via(coord, nack, false);
  }
}

void BrokerNode::apply_meta_record(const Event& e, bool restoring) {
  meta_history_.push_back(e);
  if (!restoring && !hosts(kMetaSpace)) {
    // replicas persist their own copy; the coordinator's is its hosted log
    log_.append(kMetaSpace, encode_event_record(kMetaSpace, e));
  }
  MetaEvent m = meta_from_event(e);
  if (m.status != meta::kConfirmed) return;
  if (!pending_install_req_.empty() && pending_install_req_ == m.request_id) {
    pending_install_req_.clear();  // installed early at the barrier owner
    return;
  }
  auto [space, activation] = parse_activation(m.activation_text);
  nlohmann::json payload = nlohmann::json::parse(m.payload_text);
  FlowGraph next = apply_change(*graphs_.back(), m.kind, payload);
  graphs_.push_back(std::make_shared<const FlowGraph>(std::move(next)));
  meta_changes_.push_back({m.request_id, m.kind, payload, space, activation});
  flush_stalled();
}

void BrokerNode::flush_stalled() {
  while (!stalled_.empty() && stalled_.begin()->first <= graph_version()) {
    auto frames = std::move(stalled_.begin()->second);
    stalled_.erase(stalled_.begin());
    for (auto& [from, f] : frames) handle_event(from, true, f);
  }
}

void BrokerNode::handle_meta_request(const std::string& from, bool from_broker,
                                     nlohmann::json f) {
  if (f.value("phase", "") == "prepare") {
    // barrier owner: pick the activation seq and install the change early so
    // events sequenced past the barrier route on the new graph immediately
    std::string request_id = f.at("request_id").get<std::string>();
    std::string kind = f.at("kind").get<std::string>();
    nlohmann::json payload = f.at("payload");
    std::string space = f.at("affected").get<std::string>();
    std::uint64_t activation = hosted_or_create(space).next_seq;
    FlowGraph next = apply_change(*graphs_.back(), kind, payload);
    graphs_.push_back(std::make_shared<const FlowGraph>(std::move(next)));
    meta_changes_.push_back({request_id, kind, payload, space, activation});
    pending_install_req_ = request_id;
    flush_stalled();
    nlohmann::json confirm{{"type", frame::kMetaConfirm},
                           {"request_id", request_id},
                           {"space", space},
                           {"activation", activation}};
    const std::string& coord = graphs_.back()->coordinator();
    confirm["addressed"] = {{"broker", coord}};
    send_to_broker_via(coord, confirm, false);
    return;
  }
  if (!is_coordinator()) {
    const std::string& coord = graphs_.back()->coordinator();
    f["addressed"] = {{"broker", coord}};
    send_to_broker_via(coord, f, false);
    return;
  }
  if (!f.contains("request_id") || f.at("request_id").get<std::string>().empty()) {
    f["request_id"] = "req-" + std::to_string(++req_counter_);
  }
  meta_queue_.push_back(std::move(f));
  pump_meta_queue();
}

void BrokerNode::pump_meta_queue() {
  while (!meta_busy_ && !meta_queue_.empty()) {
    nlohmann::json f = std::move(meta_queue_.front());
    meta_queue_.pop_front();
    std::string request_id = f.at("request_id").get<std::string>();
    std::string kind = f.value("kind", "");
    nlohmann::json payload = f.value("payload", nlohmann::json::object());
    std::string payload_text = payload.dump();
    append_meta({request_id, kind, payload_text, meta::kRequested, "", {}});
    std::string affected;
    try {
      (void)apply_change(*graphs_.back(), kind, payload);
      affected = affected_space(*graphs_.back(), kind, payload);
    } catch (const Error& err) {
      append_meta({request_id, kind, payload_text,
                   std::string(meta::kRejected) + ":" + err.code(), "", {}});
      continue;
    } catch (const nlohmann::json::exception&) {
      append_meta({request_id, kind, payload_text,
                   std::string(meta::kRejected) + ":" + errc::parse, "", {}});
      continue;
    }
    if (affected.empty()) {
      append_meta({request_id, kind, payload_text, meta::kConfirmed, "", {}});
      continue;
    }
    const SpaceDef& s = graphs_.back()->space(affected);
    if (s.broker == id_) {
      std::uint64_t activation = hosted_or_create(affected).next_seq;
      append_meta({request_id, kind, payload_text, meta::kConfirmed,
                   render_activation(affected, activation), {}});
      continue;
    }
    nlohmann::json prepare{{"type", frame::kMetaRequest},
                           {"phase", "prepare"},
                           {"request_id", request_id},
                           {"kind", kind},
                           {"payload", payload},
                           {"affected", affected}};
    prepare["addressed"] = {{"broker", s.broker}};
    send_to_broker_via(s.broker, prepare, false);
    meta_busy_ = true;  // resumes on META_CONFIRM
    pending_confirm_ = {request_id, kind, payload_text};
  }
}

void BrokerNode::handle_meta_confirm(const nlohmann::json& f) {
  if (!meta_busy_) return;
  std::string request_id = f.at("request_id").get<std::string>();
  if (request_id != pending_confirm_.request_id) return;
  append_meta({request_id, pending_confirm_.kind, pending_confirm_.payload_text,
               meta::kConfirmed,
               render_activation(f.at("space").get<std::string>(),
                                 f.at("activation").get<std::uint64_t>()),
               {}});
  meta_busy_ = false;
  pump_meta_queue();
}

// ---------------------------------------------------------------------------

nlohmann::json BrokerNode::stats() const {
  nlohmann::json spaces = nlohmann::json::object();
  for (const auto& [name, h] : hosted_) {
    spaces[name] = {{"seq", h.next_seq - 1}, {"durable", h.durable}};
  }
  for (const auto& [name, st] : interp_) {
    spaces[name] = {{"rows", st.rows().size()}};
  }
  nlohmann::json match = nlohmann::json::object();
  for (const auto& [name, tree] : match_trees_) {
    match[name] = tree->stats_json();
  }
  nlohmann::json links = nlohmann::json::object();
  for (const auto& [link, c] : link_counters_) {
    links[link] = {{"multicast", c.multicast}, {"retransmit", c.retransmit}};
  }
  return {{"broker", id_},
          {"version", graph_version()},
          {"spaces", spaces},
          {"interests", interests_.size()},
          {"match", match},
          {"links", links}};
}

}  // namespace gryphon
