#include "gryphon/flow_graph.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "gryphon/error.hpp"

namespace gryphon {

std::string_view space_kind_name(SpaceKind k) {
  return k == SpaceKind::History ? "history" : "interpretation";
}

std::string_view arc_kind_name(ArcKind k) {
  switch (k) {
    case ArcKind::Select: return "select";
    case ArcKind::Transform: return "transform";
    case ArcKind::Interpret: return "interpret";
    case ArcKind::Expand: return "expand";
  }
  return "?";
}

Schema meta_schema() {
  return Schema("__meta", {{"request_id", AttrType::String},
                           {"kind", AttrType::String},
                           {"payload", AttrType::String},
                           {"status", AttrType::String},
                           {"activation", AttrType::String}});
}

namespace {

bool attrs_equal(const Schema& a, const Schema& b) {
  return a.attributes() == b.attributes();
}

void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) ok = true;
    }
    if (!ok) {
      throw Error(errc::unknown_key, "unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

const SpaceDef* FlowGraph::find_space(std::string_view name) const {
  for (const auto& s : spaces_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const SpaceDef& FlowGraph::space(std::string_view name) const {
  const SpaceDef* s = find_space(name);
  if (!s) throw Error(errc::dangling_reference, "no such space " + std::string(name));
  return *s;
}

const ArcDef* FlowGraph::find_arc(std::string_view id) const {
  for (const auto& a : arcs_) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

bool FlowGraph::has_broker(std::string_view id) const {
  return std::find(brokers_.begin(), brokers_.end(), id) != brokers_.end();
}

const std::string& FlowGraph::coordinator() const {
  return *std::min_element(brokers_.begin(), brokers_.end());
}

std::vector<const ArcDef*> FlowGraph::out_arcs(std::string_view space) const {
  std::vector<const ArcDef*> out;
  for (const auto& a : arcs_) {
    if (a.src == space) out.push_back(&a);
  }
  return out;
}

std::vector<const ArcDef*> FlowGraph::in_arcs(std::string_view space) const {
  std::vector<const ArcDef*> out;
  for (const auto& a : arcs_) {
    if (a.dst == space) out.push_back(&a);
  }
  return out;
}

void validate_arc(const FlowGraph& g, const ArcDef& a) {
  const SpaceDef* src = g.find_space(a.src);
  const SpaceDef* dst = g.find_space(a.dst);
  if (!src || !dst) {
    throw Error(errc::dangling_reference, "arc " + a.id + " references a missing space");
  }
  switch (a.kind) {
    case ArcKind::Select:
      if (src->kind != SpaceKind::History || dst->kind != SpaceKind::History) {
        throw Error(errc::kind_mismatch, "arc " + a.id + ": select joins two histories");
      }
      if (!attrs_equal(src->schema, dst->schema)) {
        throw Error(errc::schema_mismatch,
                    "arc " + a.id + ": select endpoints must share a schema");
      }
      break;
    case ArcKind::Transform:
      if (src->kind != SpaceKind::History || dst->kind != SpaceKind::History) {
        throw Error(errc::kind_mismatch, "arc " + a.id + ": transform joins two histories");
      }
      if (!a.transform || !attrs_equal(a.transform->output_schema(), dst->schema)) {
        throw Error(errc::schema_mismatch,
                    "arc " + a.id + ": transform output must match destination schema");
      }
      break;
    case ArcKind::Interpret:
      if (src->kind != SpaceKind::History || dst->kind != SpaceKind::Interpretation) {
        throw Error(errc::kind_mismatch,
                    "arc " + a.id + ": interpret runs history -> interpretation");
      }
      if (!a.interp || !attrs_equal(a.interp->state_schema(), dst->schema)) {
        throw Error(errc::schema_mismatch,
                    "arc " + a.id + ": state schema must match destination schema");
      }
      break;
    case ArcKind::Expand:
      if (src->kind != SpaceKind::Interpretation || dst->kind != SpaceKind::History) {
        throw Error(errc::kind_mismatch,
                    "arc " + a.id + ": expand runs interpretation -> history");
      }
      if (!a.interp || !attrs_equal(a.interp->expansion_schema(), dst->schema)) {
        throw Error(errc::schema_mismatch,
                    "arc " + a.id + ": expansion schema must match destination schema");
      }
      break;
  }
}

FlowGraph FlowGraph::load_text(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(errc::parse, "graph document is not valid JSON");
  }
  return load(doc);
}

FlowGraph FlowGraph::load(const nlohmann::json& document) {
  if (!document.is_object()) throw Error(errc::parse, "graph document must be an object");
  check_keys(document, {"schemas", "spaces", "arcs", "brokers", "links"}, "document");

  FlowGraph g;
  for (auto it = document.at("schemas").begin(); it != document.at("schemas").end(); ++it) {
    Schema s = Schema::parse(it.value().get<std::string>());
    if (s.name() != it.key()) {
      throw Error(errc::parse, "schema key " + it.key() + " names " + s.name());
    }
    g.schemas_.emplace(it.key(), std::move(s));
  }
  for (const auto& b : document.at("brokers")) {
    g.brokers_.push_back(b.get<std::string>());
  }
  if (document.contains("links")) {
    for (const auto& l : document.at("links")) {
      if (!l.is_array() || l.size() != 2) {
        throw Error(errc::parse, "each link is a broker pair");
      }
      g.links_.emplace_back(l.at(0).get<std::string>(), l.at(1).get<std::string>());
    }
  }
  for (const auto& js : document.at("spaces")) {
    check_keys(js, {"name", "kind", "schema", "interp", "broker", "durable"}, "space");
    SpaceDef s;
    s.name = js.at("name").get<std::string>();
    std::string kind = js.at("kind").get<std::string>();
    if (kind == "history") {
      s.kind = SpaceKind::History;
    } else if (kind == "interpretation") {
      s.kind = SpaceKind::Interpretation;
    } else {
      throw Error(errc::parse, "space " + s.name + ": unknown kind " + kind);
    }
    s.broker = js.at("broker").get<std::string>();
    s.durable = js.value("durable", false);
    if (s.kind == SpaceKind::History) {
      std::string schema_name = js.at("schema").get<std::string>();
      auto it = g.schemas_.find(schema_name);
      if (it == g.schemas_.end()) {
        throw Error(errc::dangling_reference,
                    "space " + s.name + " uses undeclared schema " + schema_name);
      }
      s.schema = it->second;
      if (js.contains("interp")) {
        throw Error(errc::parse, "history space " + s.name + " cannot carry interp");
      }
    } else {
      s.interp_text = js.at("interp").get<std::string>();
      if (js.contains("schema")) {
        throw Error(errc::parse,
                    "interpretation space " + s.name + " derives its schema");
      }
      if (s.durable) {
        throw Error(errc::parse,
                    "interpretation space " + s.name + " cannot be durable");
      }
    }
    g.spaces_.push_back(std::move(s));
  }
  for (const auto& ja : document.at("arcs")) {
    check_keys(ja, {"id", "type", "from", "to", "predicate", "transform", "interp"},
               "arc");
    ArcDef a;
    a.id = ja.at("id").get<std::string>();
    std::string type = ja.at("type").get<std::string>();
    if (type == "select") a.kind = ArcKind::Select;
    else if (type == "transform") a.kind = ArcKind::Transform;
    else if (type == "interpret") a.kind = ArcKind::Interpret;
    else if (type == "expand") a.kind = ArcKind::Expand;
    else throw Error(errc::parse, "arc " + a.id + ": unknown type " + type);
    a.src = ja.at("from").get<std::string>();
    a.dst = ja.at("to").get<std::string>();
    if (ja.contains("predicate")) a.op_text = ja.at("predicate").get<std::string>();
    if (ja.contains("transform")) a.op_text = ja.at("transform").get<std::string>();
    if (ja.contains("interp")) a.op_text = ja.at("interp").get<std::string>();
    g.arcs_.push_back(std::move(a));
  }
  g.validate();
  return g;
}

void FlowGraph::validate() {
  if (brokers_.empty()) throw Error(errc::parse, "at least one broker required");
  if (std::set<std::string>(brokers_.begin(), brokers_.end()).size() != brokers_.size()) {
    throw Error(errc::duplicate_name, "broker ids must be unique");
  }

  // implicit meta space on the coordinator
  bool has_meta = find_space(kMetaSpace) != nullptr;
  if (!has_meta) {
    SpaceDef meta;
    meta.name = kMetaSpace;
    meta.kind = SpaceKind::History;
    meta.schema = meta_schema();
    meta.broker = coordinator();
    meta.durable = true;
    spaces_.push_back(std::move(meta));
    schemas_.emplace(kMetaSpace, meta_schema());
  }

  std::set<std::string> space_names;
  for (const auto& s : spaces_) {
    if (!space_names.insert(s.name).second) {
      throw Error(errc::duplicate_name, "space " + s.name + " defined twice");
    }
    if (!has_broker(s.broker)) {
      throw Error(errc::dangling_reference,
                  "space " + s.name + " placed on unknown broker " + s.broker);
    }
  }

  // links must form a tree over the brokers
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [a, b] : links_) {
    if (!has_broker(a) || !has_broker(b) || a == b) {
      throw Error(errc::links_not_tree, "link " + a + "-" + b + " is not a broker pair");
    }
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  if (links_.size() != brokers_.size() - 1) {
    throw Error(errc::links_not_tree, "broker links must form a spanning tree");
  }
  for (const auto& root : brokers_) {
    std::map<std::string, std::string> first_hop;  // dest -> first hop from root
    std::deque<std::pair<std::string, std::string>> q;  // (node, first hop used)
    std::set<std::string> seen{root};
    for (const auto& n : adj[root]) {
      q.emplace_back(n, n);
    }
    while (!q.empty()) {
      auto [node, hop] = q.front();
      q.pop_front();
      if (!seen.insert(node).second) {
        throw Error(errc::links_not_tree, "broker links contain a cycle");
      }
      first_hop[node] = hop;
      for (const auto& n : adj[node]) {
        if (!seen.count(n)) q.emplace_back(n, hop);
      }
    }
    if (seen.size() != brokers_.size()) {
      throw Error(errc::links_not_tree, "broker links are not connected");
    }
    routes_[root] = std::move(first_hop);
  }

  std::set<std::string> arc_ids;
  for (const auto& a : arcs_) {
    if (!arc_ids.insert(a.id).second) {
      throw Error(errc::duplicate_name, "arc " + a.id + " defined twice");
    }
    if (!find_space(a.src) || !find_space(a.dst)) {
      throw Error(errc::dangling_reference,
                  "arc " + a.id + " references a missing space");
    }
  }

  // at most one arc into an interpretation space; bind its spec first so
  // state/expansion schemas exist for the per-arc checks
  for (auto& s : spaces_) {
    if (s.kind != SpaceKind::Interpretation) continue;
    std::vector<ArcDef*> in;
    for (auto& a : arcs_) {
      if (a.dst == s.name) in.push_back(&a);
    }
    if (in.size() > 1) {
      throw Error(errc::kind_mismatch,
                  "interpretation space " + s.name + " has multiple in-arcs");
    }
    if (in.empty()) {
      if (!out_arcs(s.name).empty()) {
        throw Error(errc::dangling_reference,
                    "interpretation space " + s.name +
                        " feeds arcs but has no interpret in-arc");
      }
      continue;
    }
    ArcDef* arc = in.front();
    if (arc->kind != ArcKind::Interpret) {
      throw Error(errc::kind_mismatch,
                  "arc " + arc->id + " into interpretation space must be interpret");
    }
    const SpaceDef* src = find_space(arc->src);
    if (src->kind != SpaceKind::History) {
      throw Error(errc::kind_mismatch, "arc " + arc->id + ": interpret source must be a history");
    }
    std::string text = !arc->op_text.empty() ? arc->op_text : s.interp_text;
    if (text.empty()) {
      throw Error(errc::parse, "interpretation space " + s.name + " needs a spec");
    }
    if (!arc->op_text.empty() && !s.interp_text.empty() && arc->op_text != s.interp_text) {
      throw Error(errc::spec_mismatch,
                  "arc " + arc->id + " and space " + s.name + " disagree on the spec");
    }
    InterpSpec spec = InterpSpec::parse(text, src->schema);
    s.schema = spec.state_schema();
    s.interp = spec;
    s.interp_text = text;
    arc->interp = std::move(spec);
  }

  // bind select/transform/expand ops, then run the shared per-arc checks
  for (auto& a : arcs_) {
    const SpaceDef* src = find_space(a.src);
    switch (a.kind) {
      case ArcKind::Select:
        if (src->kind == SpaceKind::History) {
          if (a.op_text.empty() && a.predicate) a.op_text = a.predicate->render();
          a.predicate = Predicate::parse(a.op_text.empty() ? "true" : a.op_text,
                                         src->schema);
        }
        break;
      case ArcKind::Transform: {
        const SpaceDef* dst = find_space(a.dst);
        if (src->kind == SpaceKind::History && dst->kind == SpaceKind::History) {
          if (a.op_text.empty() && a.transform) a.op_text = a.transform->render();
          a.transform = Transform::parse(a.op_text, src->schema, dst->schema);
        }
        break;
      }
      case ArcKind::Expand:
        if (src->kind == SpaceKind::Interpretation && src->interp) {
          a.interp = src->interp;
        }
        break;
      case ArcKind::Interpret:
        break;  // bound above
    }
    validate_arc(*this, a);
  }

  // acyclicity over spaces
  std::map<std::string, int> indegree;
  for (const auto& s : spaces_) indegree[s.name] = 0;
  for (const auto& a : arcs_) indegree[a.dst]++;
  std::deque<std::string> ready;
  for (const auto& s : spaces_) {
    if (indegree[s.name] == 0) ready.push_back(s.name);
  }
  std::size_t emitted = 0;
  while (!ready.empty()) {
    std::string n = ready.front();
    ready.pop_front();
    ++emitted;
    for (const auto& a : arcs_) {
      if (a.src == n && --indegree[a.dst] == 0) ready.push_back(a.dst);
    }
  }
  if (emitted != spaces_.size()) {
    // walk the residual graph to report one concrete cycle
    std::string start;
    for (const auto& [name, deg] : indegree) {
      if (deg > 0) {
        start = name;
        break;
      }
    }
    std::vector<std::string> path{start};
    std::set<std::string> on_path{start};
    std::string cur = start;
    for (;;) {
      std::string next;
      for (const auto& a : arcs_) {
        if (a.src == cur && indegree[a.dst] > 0) {
          next = a.dst;
          break;
        }
      }
      if (on_path.count(next)) {
        path.push_back(next);
        break;
      }
      path.push_back(next);
      on_path.insert(next);
      cur = next;
    }
    std::string desc;
    for (const auto& p : path) desc += (desc.empty() ? "" : " -> ") + p;
    throw Error(errc::cycle, "information flow graph has a cycle: " + desc);
  }
}

std::vector<std::pair<const ArcDef*, const SpaceDef*>> FlowGraph::downstream_closure(
    std::string_view start) const {
  const SpaceDef& s0 = space(start);
  std::set<std::string> reachable{s0.name};
  std::deque<std::string> q{s0.name};
  while (!q.empty()) {
    std::string n = q.front();
    q.pop_front();
    for (const auto& a : arcs_) {
      if (a.src == n && reachable.insert(a.dst).second) q.push_back(a.dst);
    }
  }
  // Kahn over the reachable subgraph, tie-broken by space definition order
  std::map<std::string, int> indeg;
  for (const auto& n : reachable) indeg[n] = 0;
  for (const auto& a : arcs_) {
    if (reachable.count(a.src) && reachable.count(a.dst)) indeg[a.dst]++;
  }
  std::vector<std::pair<const ArcDef*, const SpaceDef*>> out;
  std::set<std::string> done;
  done.insert(s0.name);
  for (;;) {
    const SpaceDef* next = nullptr;
    for (const auto& s : spaces_) {
      if (reachable.count(s.name) && !done.count(s.name) && indeg[s.name] == 0) {
        next = &s;
        break;
      }
    }
    if (!next) {
      // spaces whose remaining in-degree comes only from emitted nodes
      bool progressed = false;
      for (const auto& s : spaces_) {
        if (!reachable.count(s.name) || done.count(s.name)) continue;
        bool all_done = true;
        for (const auto& a : arcs_) {
          if (a.dst == s.name && reachable.count(a.src) && !done.count(a.src)) {
            all_done = false;
          }
        }
        if (all_done) {
          next = &s;
          progressed = true;
          break;
        }
      }
      if (!progressed) break;
    }
    const ArcDef* via = nullptr;
    for (const auto& a : arcs_) {
      if (a.dst == next->name && (done.count(a.src) || a.src == s0.name)) {
        via = &a;
        break;
      }
    }
    out.emplace_back(via, next);
    done.insert(next->name);
  }
  return out;
}

std::string FlowGraph::next_hop(const std::string& from, const std::string& to) const {
  if (from == to) return "";
  auto it = routes_.find(from);
  if (it == routes_.end()) return "";
  auto jt = it->second.find(to);
  return jt == it->second.end() ? "" : jt->second;
}

nlohmann::json FlowGraph::to_json() const {
  nlohmann::json doc;
  doc["schemas"] = nlohmann::json::object();
  for (const auto& [name, s] : schemas_) {
    if (name == kMetaSpace) continue;
    doc["schemas"][name] = s.render();
  }
  doc["brokers"] = brokers_;
  doc["links"] = nlohmann::json::array();
  for (const auto& [a, b] : links_) doc["links"].push_back({a, b});
  doc["spaces"] = nlohmann::json::array();
  for (const auto& s : spaces_) {
    if (s.name == kMetaSpace) continue;
    nlohmann::json js{{"name", s.name},
                      {"kind", std::string(space_kind_name(s.kind))},
                      {"broker", s.broker}};
    if (s.kind == SpaceKind::History) {
      js["schema"] = s.schema.name();
      if (s.durable) js["durable"] = true;
    } else {
      js["interp"] = s.interp_text;
    }
    doc["spaces"].push_back(std::move(js));
  }
  doc["arcs"] = nlohmann::json::array();
  for (const auto& a : arcs_) {
    nlohmann::json ja{{"id", a.id},
                      {"type", std::string(arc_kind_name(a.kind))},
                      {"from", a.src},
                      {"to", a.dst}};
    switch (a.kind) {
      case ArcKind::Select:
        ja["predicate"] = a.predicate ? a.predicate->render() : a.op_text;
        break;
      case ArcKind::Transform:
        ja["transform"] = a.transform ? a.transform->render() : a.op_text;
        break;
      case ArcKind::Interpret:
        ja["interp"] = a.interp ? a.interp->render() : a.op_text;
        break;
      case ArcKind::Expand:
        break;
    }
    doc["arcs"].push_back(std::move(ja));
  }
  return doc;
}

FlowGraph::Builder FlowGraph::Builder::from(const FlowGraph& g) {
  Builder b;
  b.schemas = g.schemas_;
  b.spaces = g.spaces_;
  b.arcs = g.arcs_;
  b.brokers = g.brokers_;
  b.links = g.links_;
  return b;
}

FlowGraph FlowGraph::Builder::validated() const {
  FlowGraph g;
  g.schemas_ = schemas;
  g.spaces_ = spaces;
  g.arcs_ = arcs;
  g.brokers_ = brokers;
  g.links_ = links;
  g.validate();
  return g;
}

}  // namespace gryphon
