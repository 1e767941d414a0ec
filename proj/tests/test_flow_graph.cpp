#include <doctest.h>

#include "gryphon/error.hpp"
#include "gryphon/flow_graph.hpp"
#include "gryphon/stocks_demo.hpp"

using namespace gryphon;
using nlohmann::json;

namespace {
json base_doc() { return stocks_graph_doc(); }
}  // namespace

TEST_CASE("loads the bundled document and adds the implicit meta space") {
  FlowGraph g = FlowGraph::load(base_doc());
  CHECK(g.brokers() == std::vector<std::string>{"b1", "b2", "b3"});
  CHECK(g.coordinator() == "b1");
  CHECK(g.find_space("AllTrades") != nullptr);
  const SpaceDef& meta = g.space(kMetaSpace);
  CHECK(meta.durable);
  CHECK(meta.broker == "b1");
  CHECK(meta.schema.arity() == 5);
  // the implicit space is not echoed back into the document
  CHECK(g.to_json().dump().find("__meta") == std::string::npos);
  // round-trip
  FlowGraph g2 = FlowGraph::load(g.to_json());
  CHECK(g2.to_json() == g.to_json());
}

TEST_CASE("unknown document keys are rejected") {
  json doc = base_doc();
  doc["extra"] = 1;
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
  doc = base_doc();
  doc["spaces"][0]["typo"] = true;
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
}

TEST_CASE("arc type rules are enforced") {
  json doc = base_doc();
  // select with mismatched schemas
  doc["arcs"][0]["to"] = "Capitals";
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
  // dangling space reference
  doc = base_doc();
  doc["arcs"][0]["from"] = "NoSuch";
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
  // duplicate arc id
  doc = base_doc();
  doc["arcs"][1]["id"] = "nyse_all";
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
}

TEST_CASE("cycles are rejected with the offending path") {
  json doc = base_doc();
  doc["arcs"].push_back({{"id", "back"},
                         {"type", "select"},
                         {"from", "AllTrades"},
                         {"to", "NYSE"},
                         {"predicate", "true"}});
  CHECK_THROWS_WITH_AS((void)FlowGraph::load(doc), doctest::Contains("AllTrades"),
                       Error);
}

TEST_CASE("broker links must form a tree") {
  json doc = base_doc();
  doc["links"].push_back(json::array({"b1", "b3"}));  // cycle b1-b2-b3-b1
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
  doc = base_doc();
  doc["links"] = json::array({json::array({"b1", "b2"})});  // b3 disconnected
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
  doc = base_doc();
  doc["spaces"][0]["broker"] = "b9";  // placement on unknown broker
  CHECK_THROWS_AS((void)FlowGraph::load(doc), Error);
}

TEST_CASE("next_hop follows the unique tree path") {
  FlowGraph g = FlowGraph::load(base_doc());
  CHECK(g.next_hop("b1", "b3") == "b2");
  CHECK(g.next_hop("b3", "b1") == "b2");
  CHECK(g.next_hop("b2", "b3") == "b3");
  CHECK(g.next_hop("b2", "b2").empty());
}

TEST_CASE("downstream closure is deterministic and complete") {
  FlowGraph g = FlowGraph::load(base_doc());
  auto closure = g.downstream_closure("NYSE");
  std::vector<std::string> names;
  for (const auto& [arc, space] : closure) names.push_back(space->name);
  CHECK(names == std::vector<std::string>{"AllTrades", "Capitals", "BigCapitals"});
}

TEST_CASE("interpretation spaces need interpret in-arcs and vice versa") {
  json doc = base_doc();
  // interpretation spaces derive their schema from the spec
  doc["spaces"].push_back({{"name", "Stats"},
                           {"kind", "interpretation"},
                           {"interp", "key symbol; latest(price), max(price)"},
                           {"broker", "b2"}});
  doc["arcs"].push_back({{"id", "agg"},
                         {"type", "interpret"},
                         {"from", "AllTrades"},
                         {"to", "Stats"},
                         {"interp", "key symbol; latest(price), max(price)"}});
  FlowGraph g = FlowGraph::load(doc);
  CHECK(g.space("Stats").kind == SpaceKind::Interpretation);
  CHECK(g.space("Stats").interp.has_value());

  // interpret arc into a history space is a kind mismatch
  json bad = base_doc();
  bad["arcs"].push_back({{"id", "agg"},
                         {"type", "interpret"},
                         {"from", "AllTrades"},
                         {"to", "BigCapitals"},
                         {"interp", "key symbol; latest(price)"}});
  CHECK_THROWS_AS((void)FlowGraph::load(bad), Error);
}
