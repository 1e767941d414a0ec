#include "gryphon/stocks_demo.hpp"

#include <fstream>
#include <sstream>

#include "gryphon/error.hpp"
#include "gryphon/optimizer.hpp"

namespace gryphon {

nlohmann::json stocks_graph_doc() {
  return nlohmann::json{
      {"schemas",
       {{"trade", "trade(symbol:string, price:float64, volume:int64)"},
        {"capital", "capital(symbol:string, capital:float64)"}}},
      {"brokers", {"b1", "b2", "b3"}},
      {"links", nlohmann::json::array({nlohmann::json::array({"b1", "b2"}),
                                       nlohmann::json::array({"b2", "b3"})})},
      {"spaces",
       {{{"name", "NYSE"}, {"kind", "history"}, {"schema", "trade"}, {"broker", "b1"}, {"durable", true}},
        {{"name", "NASDAQ"}, {"kind", "history"}, {"schema", "trade"}, {"broker", "b3"}, {"durable", true}},
        {{"name", "AllTrades"}, {"kind", "history"}, {"schema", "trade"}, {"broker", "b2"}},
        {{"name", "Capitals"}, {"kind", "history"}, {"schema", "capital"}, {"broker", "b2"}},
        {{"name", "BigCapitals"}, {"kind", "history"}, {"schema", "capital"}, {"broker", "b2"}, {"durable", true}}}},
      {"arcs",
       {{{"id", "nyse_all"}, {"type", "select"}, {"from", "NYSE"}, {"to", "AllTrades"}, {"predicate", "true"}},
        {{"id", "nasdaq_all"}, {"type", "select"}, {"from", "NASDAQ"}, {"to", "AllTrades"}, {"predicate", "true"}},
        {{"id", "cap"}, {"type", "transform"}, {"from", "AllTrades"}, {"to", "Capitals"}, {"transform", "symbol := symbol, capital := price * volume"}},
        {{"id", "big"}, {"type", "select"}, {"from", "Capitals"}, {"to", "BigCapitals"}, {"predicate", "capital >= 1000000.0"}}}}};
}

FlowGraph stocks_graph() { return FlowGraph::load(stocks_graph_doc()); }

std::vector<Trade> parse_trades(const std::string& csv_text) {
  std::vector<Trade> out;
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw Error(errc::parse, "bad trade row: " + line);
    }
    Trade t;
    t.symbol = line.substr(0, c1);
    t.price = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    t.volume = std::stoll(line.substr(c2 + 1));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Trade> load_trades(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::parse, "cannot open trade fixture " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trades(buf.str());
}

DemoResult run_stocks_demo(const std::vector<Trade>& trades, bool optimized) {
  FlowGraph g = stocks_graph();
  DemoResult r;
  if (optimized) {
    RewriteReport report;
    g = rewrite_fixpoint(g, {"BigCapitals"}, &report);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : report.steps) {
      steps.push_back({{"rule", s.rule}, {"detail", s.detail}});
    }
    r.rewrite_report = {{"arcs_before", report.arcs_before},
                       {"arcs_after", report.arcs_after},
                       {"steps", std::move(steps)}};
  }
  Simulator sim(g, 42);
  sim.add_client("trader", "b3", "BigCapitals", "ordered");
  std::uint64_t tick = 10;
  std::size_t i = 0;
  for (const Trade& t : trades) {
    std::vector<Value> values{t.symbol, t.price, t.volume};
    sim.publish_at(tick++, i % 2 == 0 ? "NYSE" : "NASDAQ", std::move(values),
                   "feed");
    ++i;
  }
  sim.run();
  r.delivered = sim.client("trader")->delivered_events("BigCapitals");
  r.link_transmissions = sim.total_multicast();
  r.trace = sim.trace();
  return r;
}

}  // namespace gryphon
