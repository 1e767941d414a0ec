#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gryphon/flow_graph.hpp"
#include "gryphon/simnet.hpp"

namespace gryphon {

struct Trade {
  std::string symbol;
  double price = 0;
  std::int64_t volume = 0;
};

// The bundled pipeline: NYSE and NASDAQ trade feeds merge into AllTrades,
// a transform computes capital = price * volume, and a select keeps the
// big-capital events. Deployed across three brokers b1 - b2 - b3.
nlohmann::json stocks_graph_doc();
FlowGraph stocks_graph();

// fixture rows are "symbol,price,volume", no header
std::vector<Trade> parse_trades(const std::string& csv_text);
std::vector<Trade> load_trades(const std::string& path);

struct DemoResult {
  std::vector<Event> delivered;       // the trader's BigCapitals view, in order
  std::uint64_t link_transmissions = 0;
  std::vector<std::string> trace;
  nlohmann::json rewrite_report;      // only when optimized
};

// Runs the fixture through the simulator: even rows publish into NYSE, odd
// rows into NASDAQ; one ordered client on b3 subscribes to BigCapitals.
DemoResult run_stocks_demo(const std::vector<Trade>& trades, bool optimized);

}  // namespace gryphon
