#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gryphon/broker.hpp"
#include "gryphon/client_session.hpp"
#include "gryphon/error.hpp"
#include "gryphon/frame.hpp"
#include "gryphon/optimizer.hpp"
#include "gryphon/simnet.hpp"
#include "gryphon/stocks_demo.hpp"

using nlohmann::json;
using namespace gryphon;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::parse, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// small blocking TCP helpers (the CLI is a thin framed-protocol client)

int tcp_connect(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
    throw Error(errc::parse, "cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* p = res; p; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) throw Error("connect-failed", "cannot connect to " + host);
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

void write_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n <= 0) throw Error("write-failed", "connection lost");
    off += static_cast<std::size_t>(n);
  }
}

void send_frame(int fd, const json& f) { write_all(fd, frame::encode(f)); }

// reads until a frame is available or timeout_ms elapses (-1 = forever)
std::optional<json> read_frame(int fd, frame::Reader& r, int timeout_ms) {
  for (;;) {
    if (auto f = r.next()) return f;
    pollfd p{fd, POLLIN, 0};
    int rc = ::poll(&p, 1, timeout_ms);
    if (rc == 0) return std::nullopt;
    if (rc < 0) throw Error("poll-failed", "poll failed");
    char buf[4096];
    ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n <= 0) throw Error("read-failed", "connection closed");
    r.feed(buf, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------
// broker serve

class TcpSender : public Sender {
 public:
  std::map<std::string, std::pair<std::string, int>> peer_addrs;
  std::map<std::string, int> peer_fds;
  std::map<std::string, int> client_fds;

  void to_broker(const std::string&, const std::string& peer,
                 const json& f) override {
    int fd = peer_fd(peer);
    if (fd < 0) return;  // peer unreachable: behaves like a dead link
    try {
      send_frame(fd, f);
    } catch (const Error&) {
      ::close(fd);
      peer_fds.erase(peer);
    }
  }
  void to_client(const std::string&, const std::string& client,
                 const json& f) override {
    auto it = client_fds.find(client);
    if (it == client_fds.end()) return;
    try {
      send_frame(it->second, f);
    } catch (const Error&) {
      client_fds.erase(client);
    }
  }

 private:
  int peer_fd(const std::string& peer) {
    auto it = peer_fds.find(peer);
    if (it != peer_fds.end()) return it->second;
    auto addr = peer_addrs.find(peer);
    if (addr == peer_addrs.end()) return -1;
    try {
      int fd = tcp_connect(addr->second.first, addr->second.second);
      send_frame(fd, {{"type", frame::kConnect}, {"broker", self_id}});
      peer_fds[peer] = fd;
      if (on_outbound) on_outbound(fd, peer);  // serve loop must poll this fd too
      return fd;
    } catch (const Error&) {
      return -1;
    }
  }

 public:
  std::string self_id;
  std::function<void(int, const std::string&)> on_outbound;
};

int cmd_serve(const std::string& id, const std::string& graph_path,
              const std::string& data_dir, int port,
              const std::vector<std::string>& peer_specs) {
  FlowGraph g = FlowGraph::load_text(slurp(graph_path));
  FileLogStore store(data_dir);
  TcpSender sender;
  sender.self_id = id;
  for (const auto& spec : peer_specs) {
    auto eq = spec.find('=');
    auto colon = spec.rfind(':');
    if (eq == std::string::npos || colon == std::string::npos || colon < eq) {
      throw Error(errc::parse, "peer spec is name=host:port, got " + spec);
    }
    sender.peer_addrs[spec.substr(0, eq)] = {
        spec.substr(eq + 1, colon - eq - 1),
        std::stoi(spec.substr(colon + 1))};
  }
  BrokerNode node(id, g, store, sender);

  int listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  int one = 1;
  setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd, 16) != 0) {
    std::cerr << "cannot listen on port " << port << "\n";
    return 2;
  }
  std::cerr << "broker " << id << " serving on port " << port << "\n";

  struct Conn {
    frame::Reader reader;
    std::string who;       // client or broker id after CONNECT
    bool is_broker = false;
  };
  std::map<int, Conn> conns;
  sender.on_outbound = [&conns](int fd, const std::string& peer) {
    Conn c;
    c.who = peer;
    c.is_broker = true;
    conns.emplace(fd, std::move(c));
  };
  for (;;) {
    std::vector<pollfd> fds{{listen_fd, POLLIN, 0}};
    for (const auto& [fd, c] : conns) fds.push_back({fd, POLLIN, 0});
    if (::poll(fds.data(), fds.size(), 1000) < 0) break;
    if (fds[0].revents & POLLIN) {
      int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd >= 0) conns.emplace(fd, Conn{});
    }
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (!(fds[i].revents & POLLIN)) continue;
      int fd = fds[i].fd;
      auto it = conns.find(fd);
      if (it == conns.end()) continue;
      char buf[8192];
      ssize_t n = ::read(fd, buf, sizeof(buf));
      if (n <= 0) {
        if (!it->second.who.empty()) {
          if (it->second.is_broker) sender.peer_fds.erase(it->second.who);
          else sender.client_fds.erase(it->second.who);
        }
        ::close(fd);
        conns.erase(it);
        continue;
      }
      it->second.reader.feed(buf, static_cast<std::size_t>(n));
      try {
        while (auto f = it->second.reader.next()) {
          if (f->value("type", "") == frame::kConnect) {
            if (f->contains("broker")) {
              it->second.who = f->at("broker").get<std::string>();
              it->second.is_broker = true;
              sender.peer_fds[it->second.who] = fd;
            } else {
              it->second.who = f->value("client", "");
              sender.client_fds[it->second.who] = fd;
            }
            continue;
          }
          node.on_frame(it->second.who, it->second.is_broker, *f);
        }
      } catch (const Error& e) {
        send_frame(fd, {{"type", frame::kError},
                        {"code", e.code()},
                        {"message", e.what()}});
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// client commands

int connect_as(const std::string& host, int port, const std::string& client) {
  int fd = tcp_connect(host, port);
  send_frame(fd, {{"type", frame::kConnect}, {"client", client}});
  return fd;
}

int cmd_publish(const std::string& host, int port, const std::string& space,
                const std::string& values_text) {
  int fd = connect_as(host, port, "cli-pub");
  send_frame(fd, {{"type", frame::kPublish},
                  {"space", space},
                  {"values", json::parse(values_text)},
                  {"publisher", "cli-pub"}});
  frame::Reader r;
  auto reply = read_frame(fd, r, 5000);
  ::close(fd);
  if (!reply) {
    std::cerr << "timed out waiting for ACK\n";
    return 2;
  }
  std::cout << reply->dump() << "\n";
  return reply->value("type", "") == frame::kAck ? 0 : 1;
}

// wall-clock port: 1 simulated tick = 10 ms
class WallPort : public ClientPort {
 public:
  int fd = -1;
  std::multimap<std::chrono::steady_clock::time_point, std::uint64_t> timers;

  void send(const json& f) override { send_frame(fd, f); }
  void schedule_timer(std::uint64_t delay, std::uint64_t token) override {
    timers.emplace(std::chrono::steady_clock::now() +
                       std::chrono::milliseconds(delay * 10),
                   token);
  }
  void on_deliver(const std::string&, const json& record) override {
    std::cout << record.dump() << "\n" << std::flush;
  }
};

int cmd_subscribe(const std::string& host, int port, const std::string& space,
                  const std::string& mode, const std::string& predicate,
                  const std::string& spec, const std::string& schema_text) {
  WallPort wall;
  wall.fd = connect_as(host, port, "cli-sub");
  Schema schema = Schema::parse(schema_text);
  ClientSession session("cli-sub", wall);
  session.subscribe(space, mode, schema, predicate, spec);
  frame::Reader r;
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    while (!wall.timers.empty() && wall.timers.begin()->first <= now) {
      std::uint64_t token = wall.timers.begin()->second;
      wall.timers.erase(wall.timers.begin());
      session.on_timer(token);
    }
    if (auto f = read_frame(wall.fd, r, 50)) session.on_frame(*f);
  }
}

int cmd_meta_submit(const std::string& host, int port, const std::string& kind,
                    const std::string& payload_path) {
  int fd = connect_as(host, port, "cli-meta");
  send_frame(fd, {{"type", frame::kMetaRequest},
                  {"kind", kind},
                  {"payload", json::parse(slurp(payload_path))}});
  ::close(fd);
  std::cout << "{\"submitted\":\"" << kind << "\"}\n";
  return 0;
}

int cmd_stats(const std::string& host, int port) {
  int fd = connect_as(host, port, "cli-stats");
  send_frame(fd, {{"type", frame::kStats}});
  frame::Reader r;
  auto reply = read_frame(fd, r, 5000);
  ::close(fd);
  if (!reply) {
    std::cerr << "timed out waiting for STATS\n";
    return 2;
  }
  std::cout << reply->dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gryphon: information-flow message brokering"};
  app.require_subcommand(1);

  const char* env_id = std::getenv("GRYPHON_BROKER_ID");
  const char* env_data = std::getenv("GRYPHON_DATA_DIR");

  // broker serve
  auto* broker_cmd = app.add_subcommand("broker", "broker operations");
  auto* serve = broker_cmd->add_subcommand("serve", "run a broker");
  std::string sv_id = env_id ? env_id : "";
  std::string sv_graph, sv_data = env_data ? env_data : "data";
  int sv_port = 7070;
  std::vector<std::string> sv_peers;
  serve->add_option("--id", sv_id, "broker id (env GRYPHON_BROKER_ID)");
  serve->add_option("--graph", sv_graph, "graph document")->required();
  serve->add_option("--data-dir", sv_data, "log directory (env GRYPHON_DATA_DIR)");
  serve->add_option("--port", sv_port, "listen port");
  serve->add_option("--peer", sv_peers, "peer broker as name=host:port");

  // graph check / optimize
  auto* graph_cmd = app.add_subcommand("graph", "graph document operations");
  auto* check = graph_cmd->add_subcommand("check", "validate a graph document");
  std::string ck_file;
  check->add_option("file", ck_file)->required();
  auto* optimize = graph_cmd->add_subcommand("optimize", "rewrite a graph document");
  std::string op_in, op_out;
  bool op_report = false;
  std::vector<std::string> op_pins;
  optimize->add_option("file", op_in)->required();
  optimize->add_option("-o,--output", op_out, "output path (default stdout)");
  optimize->add_flag("--report", op_report, "emit the rewrite log");
  optimize->add_option("--pin", op_pins, "space that must survive rewriting");

  // publish / subscribe / meta / stats
  std::string host = "127.0.0.1";
  int port = 7070;
  auto add_conn = [&](CLI::App* c) {
    c->add_option("--host", host);
    c->add_option("--port", port);
  };
  auto* publish = app.add_subcommand("publish", "publish one event");
  std::string pb_space, pb_values;
  publish->add_option("--space", pb_space)->required();
  publish->add_option("--values", pb_values, "JSON array of attribute values")
      ->required();
  add_conn(publish);

  auto* subscribe = app.add_subcommand("subscribe", "stream a space");
  std::string sb_space, sb_mode = "ordered", sb_pred, sb_spec, sb_schema;
  subscribe->add_option("--space", sb_space)->required();
  subscribe->add_option("--mode", sb_mode)->check(
      CLI::IsMember({"ordered", "optimistic", "snapshot"}));
  subscribe->add_option("--predicate", sb_pred);
  subscribe->add_option("--spec", sb_spec, "interpretation spec");
  subscribe->add_option("--schema", sb_schema, "space schema, e.g. t(a:int64)")
      ->required();
  add_conn(subscribe);

  auto* meta_cmd = app.add_subcommand("meta", "reflection operations");
  auto* submit = meta_cmd->add_subcommand("submit", "submit a graph change");
  std::string mt_kind, mt_payload;
  submit->add_option("--kind", mt_kind)->required();
  submit->add_option("--payload", mt_payload, "payload JSON file")->required();
  add_conn(submit);

  auto* stats = app.add_subcommand("stats", "query broker statistics");
  add_conn(stats);

  // sim run
  auto* sim_cmd = app.add_subcommand("sim", "simulator");
  auto* sim_run = sim_cmd->add_subcommand("run", "run a scenario");
  std::string sc_file, sc_trace = "trace.ldjson";
  std::uint64_t sc_seed = 1;
  sim_run->add_option("--scenario", sc_file)->required();
  sim_run->add_option("--seed", sc_seed);
  sim_run->add_option("--trace", sc_trace, "trace output path");

  // demo stocks
  auto* demo_cmd = app.add_subcommand("demo", "bundled demos");
  auto* demo_stocks = demo_cmd->add_subcommand("stocks", "the trades pipeline");
  std::string dm_fixture = "fixtures/trades_1000.csv";
  bool dm_optimized = false;
  demo_stocks->add_option("--fixture", dm_fixture, "trade CSV");
  demo_stocks->add_flag("--optimized", dm_optimized, "rewrite the graph first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (serve->parsed()) {
      if (sv_id.empty()) {
        std::cerr << "broker id required (--id or GRYPHON_BROKER_ID)\n";
        return 1;
      }
      return cmd_serve(sv_id, sv_graph, sv_data, sv_port, sv_peers);
    }
    if (check->parsed()) {
      FlowGraph::load_text(slurp(ck_file));
      std::cout << "OK\n";
      return 0;
    }
    if (optimize->parsed()) {
      FlowGraph g = FlowGraph::load_text(slurp(op_in));
      RewriteReport report;
      std::set<std::string> pinned(op_pins.begin(), op_pins.end());
      FlowGraph out = rewrite_fixpoint(g, pinned, &report);
      std::string doc = out.to_json().dump(2) + "\n";
      if (op_out.empty()) {
        std::cout << doc;
      } else {
        std::ofstream f(op_out, std::ios::binary);
        f << doc;
      }
      if (op_report) {
        json steps = json::array();
        for (const auto& s : report.steps) {
          steps.push_back({{"rule", s.rule}, {"detail", s.detail}});
        }
        std::cerr << json{{"arcs_before", report.arcs_before},
                          {"arcs_after", report.arcs_after},
                          {"steps", steps}}
                         .dump()
                  << "\n";
      }
      return 0;
    }
    if (publish->parsed()) return cmd_publish(host, port, pb_space, pb_values);
    if (subscribe->parsed()) {
      return cmd_subscribe(host, port, sb_space, sb_mode, sb_pred, sb_spec,
                           sb_schema);
    }
    if (submit->parsed()) return cmd_meta_submit(host, port, mt_kind, mt_payload);
    if (stats->parsed()) return cmd_stats(host, port);
    if (sim_run->parsed()) {
      json scenario = json::parse(slurp(sc_file));
      ScenarioResult r = run_scenario(scenario, sc_seed);
      std::ofstream f(sc_trace, std::ios::binary);
      for (const auto& line : r.trace) f << line << "\n";
      std::cout << json{{"trace", sc_trace}, {"quiesced", r.quiesced}}.dump()
                << "\n";
      return r.quiesced ? 0 : 2;
    }
    if (demo_stocks->parsed()) {
      DemoResult r = run_stocks_demo(load_trades(dm_fixture), dm_optimized);
      for (const Event& e : r.delivered) {
        json values = json::array();
        for (const Value& v : e.values) values.push_back(value_to_json(v));
        std::cout << json{{"space", "BigCapitals"},
                          {"seq", *e.seq},
                          {"values", values}}
                         .dump()
                  << "\n";
      }
      std::cerr << json{{"delivered", r.delivered.size()},
                        {"link_transmissions", r.link_transmissions}}
                       .dump()
                << "\n";
      if (dm_optimized) std::cerr << r.rewrite_report.dump() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
