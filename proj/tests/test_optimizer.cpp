#include <doctest.h>

#include "gryphon/optimizer.hpp"
#include "gryphon/stocks_demo.hpp"

using namespace gryphon;
using nlohmann::json;

namespace {

json doc_two_selects() {
  return json{
      {"schemas", {{"t", "t(k:string, n:int64)"}}},
      {"brokers", {"hub"}},
      {"links", json::array()},
      {"spaces", json::array({
          {{"name", "A"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
          {{"name", "B"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}},
          {{"name", "C"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}}})},
      {"arcs", json::array({
          {{"id", "s1"}, {"type", "select"}, {"from", "A"}, {"to", "B"}, {"predicate", "n > 2"}},
          {{"id", "s2"}, {"type", "select"}, {"from", "B"}, {"to", "C"}, {"predicate", "n < 8"}}})}};
}

}  // namespace

TEST_CASE("fuse_selects collapses a select chain through an unobserved space") {
  FlowGraph g = FlowGraph::load(doc_two_selects());
  RewriteStep step;
  auto fused = try_fuse_selects(g, {"C"}, &step);
  REQUIRE(fused.has_value());
  CHECK(step.rule == "fuse_selects");
  CHECK(fused->find_space("B") == nullptr);
  REQUIRE(fused->arcs().size() == 1);
  const ArcDef& a = fused->arcs()[0];
  CHECK(a.src == "A");
  CHECK(a.dst == "C");
  auto verdict = check_graph_equivalence(g, *fused, 4, 100, 5);
  CHECK(verdict.equivalent);
}

TEST_CASE("pinned spaces block fusion") {
  FlowGraph g = FlowGraph::load(doc_two_selects());
  CHECK(!try_fuse_selects(g, {"B", "C"}).has_value());
  // a durable intermediate is implicitly pinned
  json doc = doc_two_selects();
  doc["spaces"][1]["durable"] = true;
  CHECK(!try_fuse_selects(FlowGraph::load(doc), {"C"}).has_value());
}

TEST_CASE("select pushes through a transform by substitution") {
  json doc{
      {"schemas", {{"t", "t(k:string, p:int64, v:int64)"}, {"c", "c(k:string, cap:int64)"}}},
      {"brokers", {"hub"}},
      {"links", json::array()},
      {"spaces", json::array({
          {{"name", "A"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
          {{"name", "B"}, {"kind", "history"}, {"schema", "c"}, {"broker", "hub"}},
          {{"name", "C"}, {"kind", "history"}, {"schema", "c"}, {"broker", "hub"}}})},
      {"arcs", json::array({
          {{"id", "tr"}, {"type", "transform"}, {"from", "A"}, {"to", "B"}, {"transform", "k := k, cap := p * v"}},
          {{"id", "sel"}, {"type", "select"}, {"from", "B"}, {"to", "C"}, {"predicate", "cap > 50"}}})}};
  FlowGraph g = FlowGraph::load(doc);
  RewriteStep step;
  auto pushed = try_push_select_through_transform(g, {"C"}, &step);
  REQUIRE(pushed.has_value());
  // the select now runs over the input schema, upstream of the transform
  const ArcDef* sel = nullptr;
  for (const auto& a : pushed->arcs()) {
    if (a.kind == ArcKind::Select) sel = &a;
  }
  REQUIRE(sel != nullptr);
  CHECK(sel->src == "A");
  CHECK(sel->predicate->render().find("p * v") != std::string::npos);
  auto verdict = check_graph_equivalence(g, *pushed, 4, 100, 6);
  CHECK(verdict.equivalent);
}

TEST_CASE("select pushes through a merge into each input") {
  json doc{
      {"schemas", {{"t", "t(k:string, n:int64)"}}},
      {"brokers", {"hub"}},
      {"links", json::array()},
      {"spaces", json::array({
          {{"name", "A1"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
          {{"name", "A2"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
          {{"name", "M"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}},
          {{"name", "C"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}}})},
      {"arcs", json::array({
          {{"id", "m1"}, {"type", "select"}, {"from", "A1"}, {"to", "M"}, {"predicate", "n > 0"}},
          {{"id", "m2"}, {"type", "select"}, {"from", "A2"}, {"to", "M"}, {"predicate", "n < 100"}},
          {{"id", "sel"}, {"type", "select"}, {"from", "M"}, {"to", "C"}, {"predicate", "n == 7"}}})}};
  FlowGraph g = FlowGraph::load(doc);
  auto pushed = try_push_select_through_merge(g, {"C"});
  REQUIRE(pushed.has_value());
  CHECK(pushed->find_space("M") == nullptr);
  CHECK(pushed->in_arcs("C").size() == 2);
  auto verdict = check_graph_equivalence(g, *pushed, 4, 150, 7);
  CHECK(verdict.equivalent);
}

TEST_CASE("fixpoint rewrite of the stocks graph halves its depth") {
  RewriteReport report;
  FlowGraph opt = rewrite_fixpoint(stocks_graph(), {"BigCapitals"}, &report);
  CHECK(report.arcs_before == 4);
  CHECK(report.arcs_after < report.arcs_before);
  CHECK(!report.steps.empty());
  // intermediate hops were optimized away entirely
  CHECK(opt.find_space("AllTrades") == nullptr);
  CHECK(opt.find_space("Capitals") == nullptr);
  CHECK(opt.find_space("BigCapitals") != nullptr);
  auto verdict = check_graph_equivalence(stocks_graph(), opt, 3, 200, 8);
  CHECK(verdict.equivalent);
}

TEST_CASE("equivalence checker catches a planted predicate bug") {
  FlowGraph g = FlowGraph::load(doc_two_selects());
  json mutated = doc_two_selects();
  mutated["arcs"][0]["predicate"] = "n > 3";  // off-by-one
  FlowGraph bad = FlowGraph::load(mutated);
  auto verdict = check_graph_equivalence(g, bad, 6, 200, 9);
  CHECK(!verdict.equivalent);
  CHECK(!verdict.counterexample.empty());
}
