#include "gryphon/simnet.hpp"

#include <algorithm>

#include "gryphon/error.hpp"
#include "gryphon/frame.hpp"

namespace gryphon {

FaultSpec FaultSpec::from_json(const nlohmann::json& j) {
  FaultSpec f;
  f.kind = j.at("kind").get<std::string>();
  f.link = j.value("link", "");
  f.broker = j.value("broker", "");
  f.space = j.value("space", "");
  f.from_seq = j.value("from_seq", std::uint64_t{0});
  f.to_seq = j.value("to_seq", std::uint64_t{0});
  f.seq = j.value("seq", std::uint64_t{0});
  f.window = j.value("window", std::uint64_t{0});
  f.tick = j.value("tick", std::uint64_t{0});
  f.from_tick = j.value("from_tick", std::uint64_t{0});
  f.to_tick = j.value("to_tick", std::uint64_t{0});
  // normalize "a-b" so lookups are order-insensitive
  auto dash = f.link.find('-');
  if (dash != std::string::npos) {
    f.link = BrokerNode::link_key(f.link.substr(0, dash), f.link.substr(dash + 1));
  }
  return f;
}

struct Simulator::Port : ClientPort {
  Simulator* sim;
  std::string client;
  std::string attach;

  void send(const nlohmann::json& f) override {
    nlohmann::json copy = f;
    std::string c = client, a = attach;
    sim->at(sim->now_ + sim->opt_.link_delay, [sim = sim, c, a, copy] {
      auto it = sim->brokers_.find(a);
      if (it == sim->brokers_.end() || !it->second.up) return;
      it->second.node->on_frame(c, false, copy);
    });
  }
  void schedule_timer(std::uint64_t delay, std::uint64_t token) override {
    std::string c = client;
    sim->at(sim->now_ + delay, [sim = sim, c, token] {
      auto it = sim->clients_.find(c);
      if (it != sim->clients_.end()) it->second.session->on_timer(token);
    });
  }
  void on_deliver(const std::string& c, const nlohmann::json& rec) override {
    nlohmann::json r = rec;
    r["type"] = "deliver";
    sim->record(std::move(r));
  }
};

Simulator::Simulator(FlowGraph genesis, std::uint64_t seed)
    : Simulator(std::move(genesis), seed, Options{}) {}

Simulator::Simulator(FlowGraph genesis, std::uint64_t seed, Options opt)
    : genesis_(std::move(genesis)), opt_(opt), rng_(seed) {
  for (const std::string& b : genesis_.brokers()) {
    BrokerRec rec;
    rec.backing = std::make_shared<MemLogStore::Backing>();
    rec.store = std::make_unique<MemLogStore>(rec.backing);
    auto [it, ok] = brokers_.emplace(b, std::move(rec));
    it->second.node = std::make_unique<BrokerNode>(b, genesis_, *it->second.store, *this);
  }
}

Simulator::~Simulator() = default;

void Simulator::at(std::uint64_t tick, std::function<void()> action) {
  schedule_.emplace(std::make_pair(tick, ctr_++), std::move(action));
}

void Simulator::record(nlohmann::json j) {
  j["tick"] = now_;
  trace_.push_back(j.dump());
}

void Simulator::add_client(const std::string& id, const std::string& broker,
                           const std::string& space, const std::string& mode,
                           const std::string& predicate, const std::string& spec,
                           std::uint64_t subscribe_tick,
                           std::optional<Schema> schema) {
  auto it = clients_.find(id);
  if (it == clients_.end()) {
    ClientRec rec;
    rec.attach = broker;
    rec.port = std::make_unique<Port>();
    rec.port->sim = this;
    rec.port->client = id;
    rec.port->attach = broker;
    rec.session = std::make_unique<ClientSession>(id, *rec.port, opt_.gap_timeout);
    it = clients_.emplace(id, std::move(rec)).first;
  }
  Schema s = schema ? *schema : genesis_.space(space).schema;
  ClientSession* session = it->second.session.get();
  at(subscribe_tick, [session, space, mode, s, predicate, spec] {
    session->subscribe(space, mode, s, predicate, spec);
  });
}

void Simulator::publish_at(std::uint64_t tick, const std::string& space,
                           std::vector<Value> values, const std::string& publisher) {
  at(tick, [this, space, values, publisher] {
    const SpaceDef* def = nullptr;
    for (const auto& [id, rec] : brokers_) {
      if (rec.up && rec.node->graph().find_space(space)) {
        def = rec.node->graph().find_space(space);
        break;
      }
    }
    if (!def) return;
    auto it = brokers_.find(def->broker);
    nlohmann::json jv = nlohmann::json::array();
    for (const auto& v : values) jv.push_back(value_to_json(v));
    nlohmann::json f{{"type", frame::kPublish},
                     {"space", space},
                     {"values", std::move(jv)},
                     {"publisher", publisher}};
    record({{"type", "publish"}, {"space", space}, {"publisher", publisher}});
    if (it == brokers_.end() || !it->second.up) {
      // host down: the publish is lost and, crucially, never acknowledged
      record({{"type", "publish-lost"}, {"space", space}});
      return;
    }
    it->second.node->on_frame(publisher, false, f);
  });
}

void Simulator::meta_at(std::uint64_t tick, const std::string& kind,
                        const nlohmann::json& payload) {
  at(tick, [this, kind, payload] {
    const std::string& coord = genesis_.coordinator();
    auto it = brokers_.find(coord);
    if (it == brokers_.end() || !it->second.up) return;
    record({{"type", "meta-submit"}, {"kind", kind}});
    it->second.node->on_frame("meta-cli", false,
                              {{"type", frame::kMetaRequest},
                               {"kind", kind},
                               {"payload", payload}});
  });
}

void Simulator::add_fault(const FaultSpec& f) {
  if (f.kind == "crash") {
    at(f.tick, [this, b = f.broker] { crash(b); });
  } else if (f.kind == "restart") {
    at(f.tick, [this, b = f.broker] { restart(b); });
  } else {
    faults_.push_back(f);
  }
}

void Simulator::crash(const std::string& broker) {
  auto it = brokers_.find(broker);
  if (it == brokers_.end() || !it->second.up) return;
  record({{"type", "crash"}, {"broker", broker}});
  it->second.up = false;
  it->second.node.reset();
  it->second.store.reset();
}

void Simulator::restart(const std::string& broker) {
  auto it = brokers_.find(broker);
  if (it == brokers_.end() || it->second.up) return;
  record({{"type", "restart"}, {"broker", broker}});
  it->second.store = std::make_unique<MemLogStore>(it->second.backing);
  it->second.node =
      std::make_unique<BrokerNode>(broker, genesis_, *it->second.store, *this);
  it->second.up = true;
  // every client re-announces its interest so flooded tables repopulate
  at(now_ + 1, [this] {
    for (auto& [id, rec] : clients_) rec.session->resubscribe();
  });
}

void Simulator::to_broker(const std::string& from, const std::string& peer,
                          const nlohmann::json& f) {
  auto sender = brokers_.find(from);
  if (sender == brokers_.end() || !sender->second.up) return;
  std::string link = BrokerNode::link_key(from, peer);
  bool addressed = f.contains("addressed") || f.value("retransmit", false);
  std::uint64_t delay = opt_.link_delay;
  int copies = 1;
  bool is_event = f.value("type", "") == frame::kEvent;
  std::uint64_t seq = is_event ? f.value("seq", std::uint64_t{0}) : 0;
  std::string space = is_event ? f.value("space", "") : "";
  for (const auto& fault : faults_) {
    if (fault.link != link) continue;
    bool in_window = now_ >= fault.from_tick &&
                     (fault.to_tick == 0 || now_ <= fault.to_tick);
    if (fault.kind == "partition" && in_window) {
      record({{"type", "dead-letter"}, {"link", link}});
      return;
    }
    if (!is_event || addressed) continue;  // repair traffic passes through
    bool space_ok = fault.space.empty() || fault.space == space;
    if (fault.kind == "drop" && space_ok && seq >= fault.from_seq &&
        seq <= fault.to_seq && in_window) {
      record({{"type", "fault-drop"}, {"link", link}, {"space", space}, {"seq", seq}});
      return;
    }
    if (fault.kind == "duplicate" && space_ok && seq == fault.seq && in_window) {
      copies = 2;
    }
    if (fault.kind == "reorder" && in_window && fault.window > 0) {
      delay += rng_() % (fault.window + 1);
    }
  }
  for (int i = 0; i < copies; ++i) {
    nlohmann::json copy = f;
    at(now_ + delay, [this, from, peer, copy] {
      auto it = brokers_.find(peer);
      if (it == brokers_.end() || !it->second.up) return;
      it->second.node->on_frame(from, true, copy);
    });
  }
}

void Simulator::to_client(const std::string& from, const std::string& client,
                          const nlohmann::json& f) {
  nlohmann::json copy = f;
  at(now_ + opt_.link_delay, [this, client, copy] {
    if (copy.value("type", "") == frame::kAck) {
      record({{"type", "ack"},
              {"client", client},
              {"space", copy.at("space")},
              {"seq", copy.at("seq")}});
      acked_.emplace_back(copy.at("space").get<std::string>(),
                          copy.at("seq").get<std::uint64_t>());
    }
    if (copy.value("type", "") == frame::kError) {
      record({{"type", "error"}, {"client", client}, {"code", copy.value("code", "")}});
    }
    auto it = clients_.find(client);
    if (it != clients_.end()) it->second.session->on_frame(copy);
  });
}

bool Simulator::run() {
  while (!schedule_.empty()) {
    auto it = schedule_.begin();
    if (it->first.first > opt_.tick_limit) {
      finalize_trace(false, schedule_.size());
      return false;
    }
    now_ = it->first.first;
    auto action = std::move(it->second);
    schedule_.erase(it);
    action();
  }
  finalize_trace(true, 0);
  return true;
}

void Simulator::finalize_trace(bool quiesced, std::size_t backlog) {
  for (const auto& [id, rec] : clients_) {
    nlohmann::json fin{{"type", "final-client"},
                       {"client", id},
                       {"deliveries", rec.session->delivered().size()},
                       {"settled", rec.session->settled()}};
    record(std::move(fin));
  }
  for (const auto& [id, rec] : brokers_) {
    nlohmann::json links = nlohmann::json::object();
    if (rec.up) {
      for (const auto& [link, c] : rec.node->link_counters()) {
        links[link] = {{"multicast", c.multicast}, {"retransmit", c.retransmit}};
      }
    }
    record({{"type", "final-broker"}, {"broker", id}, {"up", rec.up}, {"links", links}});
  }
  record({{"type", "end"}, {"quiesced", quiesced}, {"backlog", backlog}});
}

BrokerNode* Simulator::broker(const std::string& id) {
  auto it = brokers_.find(id);
  return it == brokers_.end() || !it->second.up ? nullptr : it->second.node.get();
}

ClientSession* Simulator::client(const std::string& id) {
  auto it = clients_.find(id);
  return it == clients_.end() ? nullptr : it->second.session.get();
}

std::string Simulator::trace_text() const {
  std::string out;
  for (const auto& line : trace_) {
    out += line;
    out += '\n';
  }
  return out;
}

std::uint64_t Simulator::total_multicast() const {
  std::uint64_t n = 0;
  for (const auto& [id, rec] : brokers_) {
    if (!rec.up) continue;
    for (const auto& [link, c] : rec.node->link_counters()) n += c.multicast;
  }
  return n;
}

ScenarioResult run_scenario(const nlohmann::json& scenario, std::uint64_t seed) {
  FlowGraph g = FlowGraph::load(scenario.at("graph"));
  Simulator::Options opt;
  opt.link_delay = scenario.value("link_delay", opt.link_delay);
  opt.tick_limit = scenario.value("tick_limit", opt.tick_limit);
  opt.gap_timeout = scenario.value("gap_timeout", opt.gap_timeout);
  Simulator sim(g, seed, opt);
  for (const auto& jc : scenario.value("clients", nlohmann::json::array())) {
    sim.add_client(jc.at("id").get<std::string>(), jc.at("broker").get<std::string>(),
                   jc.at("space").get<std::string>(), jc.value("mode", "ordered"),
                   jc.value("predicate", ""), jc.value("spec", ""),
                   jc.value("tick", std::uint64_t{0}));
  }
  for (const auto& jw : scenario.value("workload", nlohmann::json::array())) {
    std::string space = jw.at("space").get<std::string>();
    const Schema& schema = g.space(space).schema;
    std::vector<Value> values;
    for (std::size_t i = 0; i < schema.arity(); ++i) {
      values.push_back(value_from_json(jw.at("values").at(i), schema.at(i).type));
    }
    sim.publish_at(jw.at("tick").get<std::uint64_t>(), space, std::move(values),
                   jw.value("publisher", "pub"));
  }
  for (const auto& jf : scenario.value("faults", nlohmann::json::array())) {
    sim.add_fault(FaultSpec::from_json(jf));
  }
  for (const auto& jm : scenario.value("meta", nlohmann::json::array())) {
    sim.meta_at(jm.at("tick").get<std::uint64_t>(), jm.at("kind").get<std::string>(),
                jm.at("payload"));
  }
  ScenarioResult r;
  r.quiesced = sim.run();
  r.trace = sim.trace();
  return r;
}

}  // namespace gryphon
