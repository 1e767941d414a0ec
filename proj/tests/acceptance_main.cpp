// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Takes the fixtures directory as argv[1].

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gryphon/matching.hpp"
#include "gryphon/optimizer.hpp"
#include "gryphon/reflection.hpp"
#include "gryphon/simnet.hpp"
#include "gryphon/stocks_demo.hpp"

using namespace gryphon;
using nlohmann::json;

namespace {

std::string g_fixtures = "fixtures";
int g_failures = 0;

void criterion(int n, const std::string& name, const std::function<void()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  std::string failure;
  try {
    body();
  } catch (const std::exception& e) {
    failure = e.what();
  }
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
  if (failure.empty()) {
    std::printf("PASS  criterion-%02d  %-38s (%lld ms)\n", n, name.c_str(),
                static_cast<long long>(ms));
  } else {
    std::printf("FAIL  criterion-%02d  %-38s (%lld ms): %s\n", n, name.c_str(),
                static_cast<long long>(ms), failure.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

// ---------------------------------------------------------------------------
// criterion 1: arc-algebra laws over randomized histories

const Schema kLawSchema = Schema::parse("t(k:string, a:int64, b:float64)");

std::vector<Value> random_row(std::mt19937_64& rng) {
  return {std::string(1, static_cast<char>('a' + rng() % 4)),
          static_cast<std::int64_t>(static_cast<std::int64_t>(rng() % 201) - 100),
          (static_cast<double>(rng() % 2001) - 1000.0) / 10.0};
}

InterpSpec random_expandable_spec(std::mt19937_64& rng) {
  std::string text = "key k; ";
  const char* attr = rng() % 2 ? "a" : "b";
  if (rng() % 2) {
    text += std::string("latest(") + attr + ")";
    if (rng() % 2) text += std::string(", max(") + attr + ")";
    if (rng() % 2) text += std::string(", min(") + attr + ")";
  } else {
    text += std::string("count, sum(") + attr + ")";
  }
  return InterpSpec::parse(text, kLawSchema);
}

void criterion1() {
  std::mt19937_64 rng(101);
  json doc{{"schemas", {{"t", kLawSchema.render()}}},
           {"brokers", {"hub"}},
           {"links", json::array()},
           {"spaces", json::array({
               {{"name", "S1"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
               {{"name", "S2"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
               {{"name", "Sel"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}},
               {{"name", "Tr"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}},
               {{"name", "M"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}}})},
           {"arcs", json::array()}};

  for (int trial = 0; trial < 1000; ++trial) {
    std::int64_t cut = static_cast<std::int64_t>(rng() % 201) - 100;
    std::string pred = "a > " + std::to_string(cut);
    json arcs = json::array({
        {{"id", "sel"}, {"type", "select"}, {"from", "S1"}, {"to", "Sel"}, {"predicate", pred}},
        {{"id", "tr"}, {"type", "transform"}, {"from", "S1"}, {"to", "Tr"},
         {"transform", "k := k, a := a + a, b := b * 2.0"}},
        {{"id", "mg1"}, {"type", "select"}, {"from", "S1"}, {"to", "M"}, {"predicate", "true"}},
        {{"id", "mg2"}, {"type", "select"}, {"from", "S2"}, {"to", "M"}, {"predicate", "true"}}});
    doc["arcs"] = arcs;
    Simulator sim(FlowGraph::load(doc), 1000 + trial);
    int n1 = 1 + static_cast<int>(rng() % 25);
    int n2 = 1 + static_cast<int>(rng() % 10);
    std::vector<Event> h1;
    for (int i = 0; i < n1; ++i) {
      auto row = random_row(rng);
      Event e = validate_event(kLawSchema, row);
      e.seq = i + 1;
      h1.push_back(e);
      sim.publish_at(10 + i, "S1", row);
    }
    for (int i = 0; i < n2; ++i) sim.publish_at(10 + i, "S2", random_row(rng));
    require(sim.run(), "law trial did not quiesce");

    Predicate p = Predicate::parse(pred, kLawSchema);
    const auto& sel = sim.broker("hub")->history("Sel");
    const auto& src = sim.broker("hub")->history("S1");
    // select: subsequence of the source, every kept event satisfies P
    std::size_t pos = 0;
    for (const Event& e : sel) {
      require(p.eval(e), "select kept a non-matching event");
      while (pos < src.size() && src[pos].values != e.values) ++pos;
      require(pos < src.size(), "select output is not a subsequence");
      ++pos;
    }
    std::size_t expected = 0;
    for (const Event& e : src) expected += p.eval(e) ? 1 : 0;
    require(sel.size() == expected, "select dropped a matching event");
    // transform: length-preserving
    require(sim.broker("hub")->history("Tr").size() == src.size(),
            "transform is not length-preserving");
    // merge: output length is the sum of input lengths
    require(sim.broker("hub")->history("M").size() == src.size() + n2,
            "merge length mismatch");
    // interpret/expand: states_equal(interpret(expand(interpret(h))), interpret(h));
    // the expansion is re-folded through the expansion-schema path
    InterpSpec spec = random_expandable_spec(rng);
    InterpState st = interpret_history(spec, h1);
    InterpState re(spec);
    re.apply_expansion(st.expand());
    require(states_equal(st, re), "expand does not reproduce the state");
  }
}

// ---------------------------------------------------------------------------
// criteria 2 and 3: matching oracle + sub-linearity on W(N)

const Schema kMatchSchema = Schema::parse("m(a:int64, b:int64, c:int64, d:int64)");

Event random_match_event(std::mt19937_64& rng) {
  return validate_event(kMatchSchema,
                        {static_cast<std::int64_t>(rng() % 64),
                         static_cast<std::int64_t>(rng() % 64),
                         static_cast<std::int64_t>(rng() % 64),
                         static_cast<std::int64_t>(rng() % 64)});
}

// W(N): equality values drawn from 64 per attribute over 4 attributes
std::vector<Subscription> workload_w(std::mt19937_64& rng, int n, bool residuals) {
  std::vector<Subscription> subs;
  const char* names[] = {"a", "b", "c", "d"};
  for (int i = 0; i < n; ++i) {
    std::string text;
    for (int attr = 0; attr < 4; ++attr) {
      if (rng() % 2 == 0) continue;
      if (!text.empty()) text += " and ";
      text += std::string(names[attr]) + " == " + std::to_string(rng() % 64);
    }
    if (residuals && rng() % 4 == 0) {
      if (!text.empty()) text += " and ";
      text += std::string(names[rng() % 4]) + " > " + std::to_string(rng() % 64);
    }
    if (text.empty()) text = "true";
    Predicate p = Predicate::parse(text, kMatchSchema);
    for (auto& s : subscriptions_from(p, "c" + std::to_string(i), "s" + std::to_string(i))) {
      subs.push_back(std::move(s));
    }
  }
  return subs;
}

void criterion2() {
  std::mt19937_64 rng(202);
  for (int n : {16, 256, 1024, 4096}) {
    auto subs = workload_w(rng, n, true);
    MatchTree tree = MatchTree::build(subs, kMatchSchema);
    for (int i = 0; i < 10000; ++i) {
      Event e = random_match_event(rng);
      std::set<std::string> oracle;
      for (const auto& s : subs) {
        if (eval_conjunction(s.conjunction, e)) oracle.insert(s.sub_id);
      }
      require(tree.match(e) == oracle,
              "oracle mismatch at N=" + std::to_string(n));
    }
  }
}

void criterion3() {
  std::mt19937_64 rng(303);
  std::map<int, double> mean_visits;
  for (int n : {1024, 4096}) {
    auto subs = workload_w(rng, n, false);
    MatchTree tree = MatchTree::build(subs, kMatchSchema);
    tree.reset_stats();
    const int events = 10000;
    for (int i = 0; i < events; ++i) tree.match(random_match_event(rng));
    mean_visits[n] = static_cast<double>(tree.stats().node_visits) / events;
  }
  double ratio = mean_visits[4096] / mean_visits[1024];
  std::printf("      criterion-03  visits/event: N=1024 %.1f, N=4096 %.1f, "
              "growth ratio %.2f (bound 4), visits/N at 4096 %.4f (bound 0.25)\n",
              mean_visits[1024], mean_visits[4096], ratio,
              mean_visits[4096] / 4096.0);
  require(mean_visits[4096] <= 0.25 * 4096.0, "mean visits exceed 0.25 * N");
  require(ratio < 4.0, "visit growth is not sub-linear");
}

// ---------------------------------------------------------------------------
// criterion 4: stocks demo vs the one-line oracle

void criterion4() {
  auto trades = load_trades(g_fixtures + "/trades_1000.csv");
  require(trades.size() == 1000, "fixture must hold 1000 trades");
  DemoResult r = run_stocks_demo(trades, false);
  std::multiset<std::pair<std::string, double>> oracle, got;
  for (const Trade& t : trades) {
    if (t.price * t.volume >= 1000000.0) oracle.emplace(t.symbol, t.price * t.volume);
  }
  for (const Event& e : r.delivered) {
    got.emplace(std::get<std::string>(e.values[0]), std::get<double>(e.values[1]));
  }
  require(got == oracle, "delivered big capitals differ from the oracle set");
}

// ---------------------------------------------------------------------------
// criterion 5: ordered consistency under drop/dup/reorder, seeds 1..20

json chain_doc() {
  return json{
      {"schemas", {{"t", "t(k:string, n:int64)"}}},
      {"brokers", {"b1", "b2", "b3"}},
      {"links", json::array({json::array({"b1", "b2"}), json::array({"b2", "b3"})})},
      {"spaces", json::array({
          {{"name", "Src"}, {"kind", "history"}, {"schema", "t"}, {"broker", "b1"}, {"durable", true}},
          {{"name", "Rel"}, {"kind", "history"}, {"schema", "t"}, {"broker", "b3"}}})},
      {"arcs", json::array({
          {{"id", "relay"}, {"type", "select"}, {"from", "Src"}, {"to", "Rel"}, {"predicate", "true"}}})}};
}

void faulted_workload(Simulator& sim, std::mt19937_64& rng, int events) {
  for (int i = 1; i <= events; ++i) {
    sim.publish_at(10 + i, "Src",
                   {std::string(1, static_cast<char>('a' + i % 5)),
                    static_cast<std::int64_t>(i)});
  }
  for (const char* link : {"b1-b2", "b2-b3"}) {
    FaultSpec drop;
    drop.kind = "drop";
    drop.link = link;
    // keep drops off the tail: a dropped final event leaves no later event
    // to expose the gap, which is a known blind spot of NACK-based repair
    drop.from_seq = 1 + rng() % (events - 10);
    drop.to_seq = drop.from_seq + rng() % 5;
    sim.add_fault(drop);
    FaultSpec dup;
    dup.kind = "duplicate";
    dup.link = link;
    dup.seq = 1 + rng() % events;
    sim.add_fault(dup);
    FaultSpec re;
    re.kind = "reorder";
    re.link = link;
    re.window = 1 + rng() % 8;
    sim.add_fault(re);
  }
}

void criterion5() {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed * 77);
    Simulator sim(FlowGraph::load(chain_doc()), seed);
    sim.add_client("c2", "b2", "Rel", "ordered");
    sim.add_client("c3", "b3", "Rel", "ordered");
    sim.add_client("c1", "b1", "Src", "ordered");
    const int events = 60;
    faulted_workload(sim, rng, events);
    require(sim.run(), "seed " + std::to_string(seed) + " did not quiesce");
    for (const char* c : {"c1", "c2", "c3"}) {
      const std::string space = c == std::string("c1") ? "Src" : "Rel";
      auto delivered = sim.client(c)->delivered_events(space);
      require(delivered.size() == events,
              std::string(c) + " missed events at seed " + std::to_string(seed));
      for (std::size_t i = 0; i < delivered.size(); ++i) {
        require(*delivered[i].seq == i + 1,
                std::string(c) + " gap/misorder at seed " + std::to_string(seed));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// criterion 6: crash durability for every crash point

void criterion6() {
  const int publishes = 200;
  for (int crash_after = 1; crash_after <= publishes; ++crash_after) {
    Simulator sim(FlowGraph::load(chain_doc()), 600 + crash_after);
    sim.add_client("c", "b3", "Rel", "ordered");
    for (int i = 1; i <= publishes; ++i) {
      sim.publish_at(10 + i, "Src",
                     {std::string("k"), static_cast<std::int64_t>(i)});
    }
    FaultSpec crash;
    crash.kind = "crash";
    crash.broker = "b1";
    crash.tick = 10 + crash_after;  // runs after that tick's publish
    sim.add_fault(crash);
    FaultSpec restart;
    restart.kind = "restart";
    restart.broker = "b1";
    restart.tick = 10 + crash_after + 4;
    sim.add_fault(restart);
    // post-recovery traffic, published after the re-subscription flood has
    // certainly repopulated every interest table; it also exposes any gap
    // the outage left downstream so the pull-repair can close it
    for (int i = 1; i <= 3; ++i) {
      sim.publish_at(10 + publishes + 20 + i, "Src",
                     {std::string("probe"), static_cast<std::int64_t>(1000 + i)});
    }
    require(sim.run(), "crash point " + std::to_string(crash_after) + " stuck");

    std::set<std::uint64_t> acked;
    for (const auto& [space, seq] : sim.acked()) {
      if (space == "Src") acked.insert(seq);
    }
    std::set<std::uint64_t> logged, seen;
    for (const Event& e : sim.broker("b1")->history("Src")) logged.insert(*e.seq);
    for (const Event& e : sim.client("c")->delivered_events("Rel")) {
      seen.insert(*e.seq);
    }
    for (std::uint64_t seq : acked) {
      require(logged.count(seq) == 1,
              "acked seq lost from the restored log at crash point " +
                  std::to_string(crash_after));
      require(seen.count(seq) == 1,
              "acked seq missing from the client view at crash point " +
                  std::to_string(crash_after));
    }
  }
}

// ---------------------------------------------------------------------------
// criterion 7: optimistic convergence, including the late-snapshot path

void criterion7() {
  const std::string spec_text = "key k; latest(n), max(n)";
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed * 131);
    Simulator sim(FlowGraph::load(chain_doc()), seed);
    // live client rides out the faults; the late one catches up via the
    // broker's snapshot repair path
    sim.add_client("live", "b3", "Rel", "optimistic", "", spec_text);
    sim.add_client("late", "b2", "Rel", "snapshot", "", spec_text, 400);
    const int events = 80;
    faulted_workload(sim, rng, events);
    require(sim.run(), "seed " + std::to_string(seed) + " did not quiesce");
    InterpSpec spec =
        InterpSpec::parse(spec_text, Schema::parse("t(k:string, n:int64)"));
    InterpState truth = interpret_history(spec, sim.broker("b3")->history("Rel"));
    require(sim.broker("b3")->history("Rel").size() == events,
            "authoritative log incomplete at seed " + std::to_string(seed));
    for (const char* c : {"live", "late"}) {
      const InterpState* st = sim.client(c)->state("Rel");
      require(st && states_equal(*st, truth),
              std::string(c) + " diverged at seed " + std::to_string(seed));
    }
  }
}

// ---------------------------------------------------------------------------
// criterion 8: compression bound after 1000 missed events

void criterion8() {
  json doc{
      {"schemas", {{"t", "t(sym:string, v:int64)"}}},
      {"brokers", {"b1"}},
      {"links", json::array()},
      {"spaces", json::array({
          {{"name", "Quotes"}, {"kind", "history"}, {"schema", "t"}, {"broker", "b1"}, {"durable", true}}})},
      {"arcs", json::array()}};
  Simulator sim(FlowGraph::load(doc), 808);
  std::mt19937_64 rng(808);
  std::vector<Event> all;
  Schema schema = Schema::parse("t(sym:string, v:int64)");
  for (int i = 1; i <= 1000; ++i) {
    std::vector<Value> row{std::string("sym") + std::to_string(rng() % 10),
                           static_cast<std::int64_t>(rng() % 10000)};
    Event e = validate_event(schema, row);
    e.seq = i;
    all.push_back(e);
    sim.publish_at(10 + i, "Quotes", row);
  }
  // the subscriber arrives after all 1000 events were missed
  sim.add_client("c", "b1", "Quotes", "snapshot", "", "key sym; latest(v), max(v)", 2000);
  require(sim.run(), "compression scenario did not quiesce");
  std::size_t events_delivered = 0;
  for (const json& rec : sim.client("c")->delivered()) {
    if (rec.value("kind", "") == "event") ++events_delivered;
  }
  require(events_delivered <= 20,
          "snapshot delivered " + std::to_string(events_delivered) + " events");
  InterpSpec spec = InterpSpec::parse("key sym; latest(v), max(v)", schema);
  const InterpState* st = sim.client("c")->state("Quotes");
  require(st && states_equal(*st, interpret_history(spec, all)),
          "compressed state differs from the oracle");
}

// ---------------------------------------------------------------------------
// criterion 9: optimizer soundness on random graphs + demo benefit

json random_rewritable_doc(std::mt19937_64& rng) {
  auto pred = [&](const char* attr) {
    const char* ops[] = {">", "<", ">=", "<="};
    return std::string(attr) + " " + ops[rng() % 4] + " " +
           std::to_string(static_cast<std::int64_t>(rng() % 41) - 20);
  };
  json doc{
      {"schemas", {{"t", "t(k:string, x:int64, y:int64)"}}},
      {"brokers", {"hub"}},
      {"links", json::array()},
      {"spaces", json::array({
          {{"name", "A1"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
          {{"name", "A2"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}, {"durable", true}},
          {{"name", "M"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}},
          {{"name", "T"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}},
          {{"name", "Out"}, {"kind", "history"}, {"schema", "t"}, {"broker", "hub"}}})},
      {"arcs", json::array({
          {{"id", "in1"}, {"type", "select"}, {"from", "A1"}, {"to", "M"}, {"predicate", pred("x")}},
          {{"id", "in2"}, {"type", "select"}, {"from", "A2"}, {"to", "M"}, {"predicate", pred("y")}},
          {{"id", "tr"}, {"type", "transform"}, {"from", "M"}, {"to", "T"},
           {"transform", "k := k, x := x + y, y := y - x"}},
          {{"id", "out"}, {"type", "select"}, {"from", "T"}, {"to", "Out"}, {"predicate", pred(rng() % 2 ? "x" : "y")}}})}};
  return doc;
}

void criterion9() {
  std::mt19937_64 rng(909);
  for (int trial = 0; trial < 50; ++trial) {
    FlowGraph g = FlowGraph::load(random_rewritable_doc(rng));
    RewriteReport report;
    FlowGraph opt = rewrite_fixpoint(g, {"Out"}, &report);
    auto verdict = check_graph_equivalence(g, opt, 4, 250, 9000 + trial);
    require(verdict.equivalent,
            "rewrite changed semantics at trial " + std::to_string(trial) + ": " +
                verdict.counterexample);
  }
  // empirical benefit on the distributed demo
  auto trades = load_trades(g_fixtures + "/trades_1000.csv");
  DemoResult plain = run_stocks_demo(trades, false);
  DemoResult opt = run_stocks_demo(trades, true);
  require(opt.link_transmissions <= plain.link_transmissions,
          "rewrite increased link transmissions");
  std::printf("      criterion-09  demo link transmissions: %llu -> %llu\n",
              static_cast<unsigned long long>(plain.link_transmissions),
              static_cast<unsigned long long>(opt.link_transmissions));
  // planted bug: an off-by-one in a predicate constant must be caught
  std::mt19937_64 bug_rng(910);
  json clean = random_rewritable_doc(bug_rng);
  json bugged = clean;
  std::string pred = bugged["arcs"][3]["predicate"].get<std::string>();
  // nudge the final select's threshold by one
  auto pos = pred.find_last_of(' ');
  std::int64_t threshold = std::stoll(pred.substr(pos + 1));
  bugged["arcs"][3]["predicate"] = pred.substr(0, pos + 1) + std::to_string(threshold + 1);
  auto verdict = check_graph_equivalence(FlowGraph::load(clean),
                                         FlowGraph::load(bugged), 8, 400, 99);
  require(!verdict.equivalent, "planted predicate bug went undetected");
  require(!verdict.counterexample.empty(), "counterexample missing");
}

// ---------------------------------------------------------------------------
// criterion 10: reconfiguration activation barrier + unaffected clients

json reconfig_doc() {
  return json{
      {"schemas", {{"t", "t(n:int64)"}}},
      {"brokers", {"b1", "b2"}},
      {"links", json::array({json::array({"b1", "b2"})})},
      {"spaces", json::array({
          {{"name", "Src"}, {"kind", "history"}, {"schema", "t"}, {"broker", "b1"}, {"durable", true}},
          {{"name", "Dst"}, {"kind", "history"}, {"schema", "t"}, {"broker", "b2"}},
          {{"name", "NewDst"}, {"kind", "history"}, {"schema", "t"}, {"broker", "b2"}}})},
      {"arcs", json::array({
          {{"id", "d"}, {"type", "select"}, {"from", "Src"}, {"to", "Dst"}, {"predicate", "true"}}})}};
}

std::vector<std::string> client_trace(const std::vector<std::string>& trace,
                                      const std::string& client) {
  std::vector<std::string> out;
  for (const auto& line : trace) {
    if (line.find("\"client\":\"" + client + "\"") != std::string::npos &&
        line.find("\"deliver\"") != std::string::npos) {
      out.push_back(line);
    }
  }
  return out;
}

struct ReconfigRun {
  std::vector<std::string> trace;
  std::vector<Event> meta_history;
  std::vector<Event> new_dst_view;
};

ReconfigRun run_reconfig(bool with_meta) {
  Simulator sim(FlowGraph::load(reconfig_doc()), 1010);
  sim.add_client("cU", "b2", "Dst", "ordered");
  sim.add_client("cN", "b2", "NewDst", "ordered");
  for (int i = 1; i <= 14; ++i) {
    // odd events do not match the new arc's predicate
    sim.publish_at(10 + i, "Src",
                   {static_cast<std::int64_t>(i % 2 == 0 ? i : -i)});
  }
  if (with_meta) {
    sim.meta_at(17, meta::kAddArc,
                {{"arc", {{"id", "nd"}, {"type", "select"}, {"from", "Src"},
                          {"to", "NewDst"}, {"predicate", "n > 0"}}}});
  }
  require(sim.run(), "reconfiguration run did not quiesce");
  ReconfigRun r;
  r.trace = sim.trace();
  r.meta_history = sim.broker("b1")->meta_history();
  r.new_dst_view = sim.client("cN")->delivered_events("NewDst");
  return r;
}

void criterion10() {
  ReconfigRun run = run_reconfig(true);
  std::uint64_t activation = 0;
  for (const Event& e : run.meta_history) {
    MetaEvent m = meta_from_event(e);
    if (m.status == meta::kConfirmed) activation = parse_activation(m.activation_text).second;
  }
  require(activation > 1 && activation <= 14, "activation barrier out of range");
  // exact barrier semantics on the new consumer: only events at or after the
  // barrier may route, and only when they match the new arc's predicate
  std::set<std::uint64_t> expected;
  for (std::uint64_t s = activation; s <= 14; ++s) {
    if (s % 2 == 0) expected.insert(s);
  }
  std::set<std::uint64_t> got;
  for (const Event& e : run.new_dst_view) {
    got.insert(static_cast<std::uint64_t>(std::get<std::int64_t>(e.values[0])));
  }
  require(got == expected, "activation barrier not exact");
  require(expected.count(activation - 1) == 0 && got.count(activation - 1) == 0,
          "pre-activation event leaked through the new arc");

  // the unaffected client's delivery trace is byte-identical to the control
  ReconfigRun control = run_reconfig(false);
  require(client_trace(run.trace, "cU") == client_trace(control.trace, "cU"),
          "reconfiguration disturbed an unaffected client");
}

// ---------------------------------------------------------------------------
// criterion 11: trace determinism across re-runs

void criterion11() {
  auto run_faulted = [](std::uint64_t seed) {
    std::mt19937_64 rng(seed * 7);
    Simulator sim(FlowGraph::load(chain_doc()), seed);
    sim.add_client("c3", "b3", "Rel", "ordered");
    sim.add_client("opt", "b2", "Rel", "optimistic", "", "key k; latest(n)");
    faulted_workload(sim, rng, 50);
    FaultSpec crash;
    crash.kind = "crash";
    crash.broker = "b1";
    crash.tick = 35;
    sim.add_fault(crash);
    FaultSpec restart;
    restart.kind = "restart";
    restart.broker = "b1";
    restart.tick = 42;
    sim.add_fault(restart);
    sim.run();
    return sim.trace_text();
  };
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    require(run_faulted(seed) == run_faulted(seed),
            "non-deterministic trace at seed " + std::to_string(seed));
  }
  // scripted scenarios re-run byte-identically too
  json scenario{{"graph", chain_doc()},
                {"clients", json::array({{{"id", "c"}, {"broker", "b3"}, {"space", "Rel"}, {"mode", "ordered"}}})},
                {"workload", json::array()},
                {"faults", json::array({{{"kind", "reorder"}, {"link", "b2-b3"}, {"window", 4}}})}};
  for (int i = 1; i <= 20; ++i) {
    scenario["workload"].push_back(
        {{"tick", 10 + i}, {"space", "Src"}, {"values", json::array({"k", i})}});
  }
  auto r1 = run_scenario(scenario, 5);
  auto r2 = run_scenario(scenario, 5);
  require(r1.trace == r2.trace, "run_scenario is not deterministic");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_fixtures = argv[1];
  criterion(1, "arc-algebra laws (1000 histories)", criterion1);
  criterion(2, "matching oracle equivalence", criterion2);
  criterion(3, "matching sub-linearity on W(N)", criterion3);
  criterion(4, "stocks demo fidelity", criterion4);
  criterion(5, "ordered delivery consistency", criterion5);
  criterion(6, "crash durability (200 crash points)", criterion6);
  criterion(7, "optimistic convergence", criterion7);
  criterion(8, "compression bound (<= 20 events)", criterion8);
  criterion(9, "optimizer soundness and benefit", criterion9);
  criterion(10, "reconfiguration activation barrier", criterion10);
  criterion(11, "trace determinism", criterion11);
  if (g_failures == 0) {
    std::printf("ALL 11 CRITERIA PASSED\n");
    return 0;
  }
  std::printf("%d CRITERIA FAILED\n", g_failures);
  return 1;
}
