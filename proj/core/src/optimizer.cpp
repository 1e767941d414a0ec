#include "gryphon/optimizer.hpp"

#include <algorithm>

#include "gryphon/error.hpp"
#include "gryphon/simnet.hpp"

namespace gryphon {

namespace {

bool intermediate(const FlowGraph& g, const std::string& name,
                  const std::set<std::string>& pinned) {
  if (name == kMetaSpace || pinned.count(name)) return false;
  const SpaceDef& s = g.space(name);
  return s.kind == SpaceKind::History && !s.durable;
}

void erase_space(FlowGraph::Builder& b, const std::string& name) {
  b.spaces.erase(std::remove_if(b.spaces.begin(), b.spaces.end(),
                                [&](const SpaceDef& s) { return s.name == name; }),
                 b.spaces.end());
}

void erase_arc(FlowGraph::Builder& b, const std::string& id) {
  b.arcs.erase(std::remove_if(b.arcs.begin(), b.arcs.end(),
                              [&](const ArcDef& a) { return a.id == id; }),
               b.arcs.end());
}

std::string unique_arc_id(const FlowGraph& g, const std::string& base) {
  if (!g.find_arc(base)) return base;
  for (int i = 2;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!g.find_arc(candidate)) return candidate;
  }
}

std::string unique_space_name(const FlowGraph& g, const std::string& base) {
  if (!g.find_space(base)) return base;
  for (int i = 2;; ++i) {
    std::string candidate = base + std::to_string(i);
    if (!g.find_space(candidate)) return candidate;
  }
}

ArcDef select_arc(std::string id, std::string src, std::string dst, Predicate p) {
  ArcDef a;
  a.id = std::move(id);
  a.kind = ArcKind::Select;
  a.src = std::move(src);
  a.dst = std::move(dst);
  a.op_text = p.render();
  a.predicate = std::move(p);
  return a;
}

bool contains_div(const ArithExpr& e) {
  if (e.op == ArithExpr::Op::Div) return true;
  if (e.lhs && contains_div(*e.lhs)) return true;
  if (e.rhs && contains_div(*e.rhs)) return true;
  return false;
}

}  // namespace

std::optional<FlowGraph> try_fuse_selects(const FlowGraph& g,
                                          const std::set<std::string>& pinned,
                                          RewriteStep* step) {
  for (const ArcDef& a1 : g.arcs()) {
    if (a1.kind != ArcKind::Select) continue;
    const std::string& B = a1.dst;
    if (!intermediate(g, B, pinned)) continue;
    auto in = g.in_arcs(B);
    auto out = g.out_arcs(B);
    if (in.size() != 1 || out.size() != 1) continue;
    const ArcDef* a2 = out.front();
    if (a2->kind != ArcKind::Select) continue;
    if (a2->dst == a1.src) continue;  // would fold into a self-loop
    Predicate fused =
        conjoin(*a1.predicate, *a2->predicate, g.space(a1.src).schema);
    FlowGraph::Builder b = FlowGraph::Builder::from(g);
    erase_arc(b, a1.id);
    erase_arc(b, a2->id);
    erase_space(b, B);
    b.arcs.push_back(select_arc(unique_arc_id(g, a1.id + "." + a2->id), a1.src,
                                a2->dst, std::move(fused)));
    if (step) {
      *step = {"fuse_selects", a1.id + " + " + a2->id + " across " + B};
    }
    return b.validated();
  }
  return std::nullopt;
}

std::optional<FlowGraph> try_push_select_through_transform(
    const FlowGraph& g, const std::set<std::string>& pinned, RewriteStep* step) {
  for (const ArcDef& t : g.arcs()) {
    if (t.kind != ArcKind::Transform) continue;
    const std::string& B = t.dst;
    if (!intermediate(g, B, pinned)) continue;
    auto in = g.in_arcs(B);
    auto out = g.out_arcs(B);
    if (in.size() != 1 || out.size() != 1) continue;
    const ArcDef* s = out.front();
    if (s->kind != ArcKind::Select) continue;
    const auto& bindings = t.transform->bindings();

    // substitute each output-attribute reference by its defining expression
    bool divides = false, degenerate = false;
    std::vector<Conjunction> pushed;
    for (const Conjunction& c : s->predicate->disjuncts()) {
      Conjunction nc;
      for (const Atom& at : c.atoms) {
        Atom na = at;
        na.lhs = substitute_attrs(at.lhs, bindings);
        if (na.lhs->op == ArithExpr::Op::Literal) degenerate = true;
        if (contains_div(*na.lhs)) divides = true;
        nc.atoms.push_back(std::move(na));
      }
      pushed.push_back(std::move(nc));
    }
    if (degenerate) continue;  // constant atoms do not survive re-parsing
    const Schema& input = t.transform->input_schema();
    Predicate p;
    try {
      p = Predicate::of(input, std::move(pushed));
    } catch (const Error&) {
      continue;  // substitution produced something the predicate rules reject
    }

    std::string pre = unique_space_name(g, B + "_pre");
    FlowGraph::Builder b = FlowGraph::Builder::from(g);
    SpaceDef sd;
    sd.name = pre;
    sd.kind = SpaceKind::History;
    sd.schema = g.space(t.src).schema;
    sd.broker = g.space(B).broker;
    b.spaces.push_back(std::move(sd));
    erase_arc(b, t.id);
    erase_arc(b, s->id);
    erase_space(b, B);
    b.arcs.push_back(
        select_arc(unique_arc_id(g, s->id + ".pre"), t.src, pre, std::move(p)));
    ArcDef nt;
    nt.id = t.id;
    nt.kind = ArcKind::Transform;
    nt.src = pre;
    nt.dst = s->dst;
    nt.op_text = t.transform->render();
    b.arcs.push_back(std::move(nt));
    if (step) {
      *step = {"push_select_through_transform",
               s->id + " below " + t.id + (divides ? " (division substituted)" : "")};
    }
    return b.validated();
  }
  return std::nullopt;
}

std::optional<FlowGraph> try_push_select_through_merge(
    const FlowGraph& g, const std::set<std::string>& pinned, RewriteStep* step) {
  for (const ArcDef& s : g.arcs()) {
    if (s.kind != ArcKind::Select) continue;
    const std::string& M = s.src;
    if (!intermediate(g, M, pinned)) continue;
    auto in = g.in_arcs(M);
    auto out = g.out_arcs(M);
    if (out.size() != 1 || in.empty()) continue;
    bool all_selects = std::all_of(in.begin(), in.end(), [](const ArcDef* a) {
      return a->kind == ArcKind::Select;
    });
    if (!all_selects) continue;
    bool feeds_itself = std::any_of(in.begin(), in.end(), [&](const ArcDef* a) {
      return a->src == s.dst;
    });
    if (feeds_itself) continue;
    FlowGraph::Builder b = FlowGraph::Builder::from(g);
    erase_arc(b, s.id);
    for (const ArcDef* a : in) {
      erase_arc(b, a->id);
      Predicate q = conjoin(*a->predicate, *s.predicate, g.space(a->src).schema);
      b.arcs.push_back(select_arc(unique_arc_id(g, a->id + "." + s.id), a->src,
                                  s.dst, std::move(q)));
    }
    erase_space(b, M);
    if (step) {
      *step = {"push_select_through_merge",
               s.id + " into " + std::to_string(in.size()) + " merge inputs of " + M};
    }
    return b.validated();
  }
  return std::nullopt;
}

FlowGraph rewrite_fixpoint(const FlowGraph& g, const std::set<std::string>& pinned,
                           RewriteReport* report) {
  FlowGraph cur = g;
  if (report) report->arcs_before = g.arcs().size();
  for (;;) {
    RewriteStep step;
    std::optional<FlowGraph> next = try_push_select_through_merge(cur, pinned, &step);
    if (!next) next = try_push_select_through_transform(cur, pinned, &step);
    if (!next) next = try_fuse_selects(cur, pinned, &step);
    if (!next) break;
    if (report) report->steps.push_back(step);
    cur = std::move(*next);
  }
  if (report) report->arcs_after = cur.arcs().size();
  return cur;
}

namespace {

FlowGraph collapse_single_broker(const FlowGraph& g) {
  FlowGraph::Builder b = FlowGraph::Builder::from(g);
  b.brokers = {"hub"};
  b.links.clear();
  for (auto& s : b.spaces) s.broker = "hub";
  return b.validated();
}

std::vector<std::string> graph_sinks(const FlowGraph& g) {
  std::vector<std::string> out;
  for (const auto& s : g.spaces()) {
    if (s.name != kMetaSpace && g.out_arcs(s.name).empty()) out.push_back(s.name);
  }
  return out;
}

std::vector<std::string> graph_sources(const FlowGraph& g) {
  std::vector<std::string> out;
  for (const auto& s : g.spaces()) {
    if (s.name != kMetaSpace && s.kind == SpaceKind::History &&
        g.in_arcs(s.name).empty() && !g.out_arcs(s.name).empty()) {
      out.push_back(s.name);
    }
  }
  return out;
}

Value random_value(AttrType t, std::mt19937_64& rng) {
  switch (t) {
    case AttrType::Int64:
      return static_cast<std::int64_t>(rng() % 201) - 100;
    case AttrType::Float64:
      return (static_cast<double>(rng() % 2001) - 1000.0) / 10.0;
    case AttrType::String: {
      static const char* pool[] = {"a", "b", "c", "d"};
      return std::string(pool[rng() % 4]);
    }
    case AttrType::Bool:
      return (rng() % 2) == 0;
  }
  return std::int64_t{0};
}

std::string render_history(const std::vector<Event>& events) {
  std::string out;
  for (const Event& e : events) {
    for (const Value& v : e.values) {
      out += render_value(v);
      out += ',';
    }
    out += ';';
  }
  return out;
}

}  // namespace

EquivalenceVerdict check_graph_equivalence(const FlowGraph& g1, const FlowGraph& g2,
                                           int trials, int events_per_trial,
                                           std::uint64_t seed) {
  std::vector<std::string> sources = graph_sources(g1);
  std::vector<std::string> sinks = graph_sinks(g1);
  if (graph_sources(g2) != sources || graph_sinks(g2) != sinks) {
    return {false, "source/sink sets differ"};
  }
  if (sources.empty()) return {true, ""};
  FlowGraph c1 = collapse_single_broker(g1);
  FlowGraph c2 = collapse_single_broker(g2);

  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(trial));
    // one shared workload, replayed into both graphs
    std::vector<std::pair<std::string, std::vector<Value>>> workload;
    for (int i = 0; i < events_per_trial; ++i) {
      const std::string& src = sources[rng() % sources.size()];
      const Schema& schema = g1.space(src).schema;
      std::vector<Value> values;
      for (const auto& attr : schema.attributes()) {
        values.push_back(random_value(attr.type, rng));
      }
      workload.emplace_back(src, std::move(values));
    }
    auto run_one = [&](const FlowGraph& g) {
      auto sim = std::make_unique<Simulator>(g, 1);
      for (const std::string& sink : sinks) {
        if (g.space(sink).kind == SpaceKind::History) {
          sim->add_client("chk_" + sink, "hub", sink, "ordered");
        }
      }
      std::uint64_t tick = 10;
      for (const auto& [src, values] : workload) {
        sim->publish_at(tick++, src, values);
      }
      sim->run();
      return sim;
    };
    auto s1 = run_one(c1);
    auto s2 = run_one(c2);
    for (const std::string& sink : sinks) {
      if (g1.space(sink).kind == SpaceKind::History) {
        auto h1 = s1->client("chk_" + sink)->delivered_events(sink);
        auto h2 = s2->client("chk_" + sink)->delivered_events(sink);
        if (render_history(h1) != render_history(h2)) {
          return {false, "trial " + std::to_string(trial) + ": sink " + sink +
                             " histories diverge (" + std::to_string(h1.size()) +
                             " vs " + std::to_string(h2.size()) + " events)"};
        }
      } else {
        const InterpState* st1 = s1->broker("hub")->interp_state(sink);
        const InterpState* st2 = s2->broker("hub")->interp_state(sink);
        InterpState empty1(*g1.space(sink).interp);
        InterpState empty2(*g2.space(sink).interp);
        if (!states_equal(st1 ? *st1 : empty1, st2 ? *st2 : empty2)) {
          return {false, "trial " + std::to_string(trial) + ": sink " + sink +
                             " states diverge"};
        }
      }
    }
  }
  return {true, ""};
}

}  // namespace gryphon
