#include "gryphon/reflection.hpp"

#include <algorithm>

#include "gryphon/error.hpp"

namespace gryphon {

namespace {

void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw Error(errc::parse, where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) ok = true;
    }
    if (!ok) throw Error(errc::unknown_key, "unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

Event meta_to_event(const MetaEvent& m) {
  Event e = validate_event(
      meta_schema(),
      {m.request_id, m.kind, m.payload_text, m.status, m.activation_text});
  e.seq = m.seq;
  return e;
}

MetaEvent meta_from_event(const Event& e) {
  MetaEvent m;
  m.request_id = std::get<std::string>(e.values.at(0));
  m.kind = std::get<std::string>(e.values.at(1));
  m.payload_text = std::get<std::string>(e.values.at(2));
  m.status = std::get<std::string>(e.values.at(3));
  m.activation_text = std::get<std::string>(e.values.at(4));
  m.seq = e.seq;
  return m;
}

std::string render_activation(const std::string& space, std::uint64_t seq) {
  if (space.empty()) return "";
  return space + ":" + std::to_string(seq);
}

std::pair<std::string, std::uint64_t> parse_activation(const std::string& text) {
  if (text.empty()) return {"", 0};
  auto pos = text.rfind(':');
  if (pos == std::string::npos) {
    throw Error(errc::parse, "bad activation '" + text + "'");
  }
  return {text.substr(0, pos), std::stoull(text.substr(pos + 1))};
}

std::string affected_space(const FlowGraph& g, const std::string& kind,
                           const nlohmann::json& payload) {
  if (kind == meta::kAddArc) {
    // the source space's routing changes at the barrier
    return payload.at("arc").at("from").get<std::string>();
  }
  if (kind == meta::kRemoveArc) {
    const ArcDef* a = g.find_arc(payload.at("arc_id").get<std::string>());
    if (!a) {
      throw Error(errc::dangling_reference,
                  "no arc " + payload.at("arc_id").get<std::string>());
    }
    return a->src;
  }
  // add_space, remove_space, add_subscription_route: no event of an existing
  // space changes its routing mid-stream
  return "";
}

FlowGraph apply_change(const FlowGraph& g, const std::string& kind,
                       const nlohmann::json& payload) {
  FlowGraph::Builder b = FlowGraph::Builder::from(g);
  if (kind == meta::kAddSpace) {
    check_keys(payload, {"schema", "space"}, "add_space payload");
    if (payload.contains("schema")) {
      Schema s = Schema::parse(payload.at("schema").get<std::string>());
      if (!b.schemas.emplace(s.name(), s).second && b.schemas.at(s.name()) != s) {
        throw Error(errc::duplicate_name, "schema " + s.name() + " already declared");
      }
    }
    const auto& js = payload.at("space");
    check_keys(js, {"name", "kind", "schema", "interp", "broker", "durable"},
               "space fragment");
    SpaceDef s;
    s.name = js.at("name").get<std::string>();
    std::string k = js.at("kind").get<std::string>();
    if (k == "history") s.kind = SpaceKind::History;
    else if (k == "interpretation") s.kind = SpaceKind::Interpretation;
    else throw Error(errc::parse, "unknown space kind " + k);
    s.broker = js.at("broker").get<std::string>();
    s.durable = js.value("durable", false);
    if (s.kind == SpaceKind::History) {
      auto it = b.schemas.find(js.at("schema").get<std::string>());
      if (it == b.schemas.end()) {
        throw Error(errc::dangling_reference,
                    "space " + s.name + " uses an undeclared schema");
      }
      s.schema = it->second;
    } else {
      s.interp_text = js.at("interp").get<std::string>();
    }
    b.spaces.push_back(std::move(s));
  } else if (kind == meta::kAddArc) {
    check_keys(payload, {"arc"}, "add_arc payload");
    const auto& ja = payload.at("arc");
    check_keys(ja, {"id", "type", "from", "to", "predicate", "transform", "interp"},
               "arc fragment");
    ArcDef a;
    a.id = ja.at("id").get<std::string>();
    std::string type = ja.at("type").get<std::string>();
    if (type == "select") a.kind = ArcKind::Select;
    else if (type == "transform") a.kind = ArcKind::Transform;
    else if (type == "interpret") a.kind = ArcKind::Interpret;
    else if (type == "expand") a.kind = ArcKind::Expand;
    else throw Error(errc::parse, "unknown arc type " + type);
    a.src = ja.at("from").get<std::string>();
    a.dst = ja.at("to").get<std::string>();
    if (ja.contains("predicate")) a.op_text = ja.at("predicate").get<std::string>();
    if (ja.contains("transform")) a.op_text = ja.at("transform").get<std::string>();
    if (ja.contains("interp")) a.op_text = ja.at("interp").get<std::string>();
    b.arcs.push_back(std::move(a));
  } else if (kind == meta::kRemoveArc) {
    check_keys(payload, {"arc_id"}, "remove_arc payload");
    std::string id = payload.at("arc_id").get<std::string>();
    auto it = std::find_if(b.arcs.begin(), b.arcs.end(),
                           [&](const ArcDef& a) { return a.id == id; });
    if (it == b.arcs.end()) throw Error(errc::dangling_reference, "no arc " + id);
    b.arcs.erase(it);
  } else if (kind == meta::kRemoveSpace) {
    check_keys(payload, {"space_name"}, "remove_space payload");
    std::string name = payload.at("space_name").get<std::string>();
    if (name == kMetaSpace) {
      throw Error(errc::not_applicable, "the meta space cannot be removed");
    }
    auto it = std::find_if(b.spaces.begin(), b.spaces.end(),
                           [&](const SpaceDef& s) { return s.name == name; });
    if (it == b.spaces.end()) throw Error(errc::dangling_reference, "no space " + name);
    for (const auto& a : b.arcs) {
      if (a.src == name || a.dst == name) {
        throw Error(errc::not_applicable,
                    "space " + name + " still has arcs; remove them first");
      }
    }
    // the durable log, if any, is retained; only the definition goes
    b.spaces.erase(it);
  } else if (kind == meta::kAddSubscriptionRoute) {
    // records a routing interest in the meta history; the graph itself is
    // unchanged, but the referenced space must exist
    check_keys(payload, {"space", "client"}, "add_subscription_route payload");
    std::string name = payload.at("space").get<std::string>();
    if (!g.find_space(name)) throw Error(errc::dangling_reference, "no space " + name);
  } else {
    throw Error(errc::parse, "unknown meta kind " + kind);
  }
  return b.validated();
}

FlowGraph fold_meta(const FlowGraph& genesis, std::span<const Event> meta_history) {
  FlowGraph g = genesis;
  for (const Event& e : meta_history) {
    MetaEvent m = meta_from_event(e);
    if (m.status != meta::kConfirmed) continue;
    nlohmann::json payload = nlohmann::json::parse(m.payload_text);
    g = apply_change(g, m.kind, payload);
  }
  return g;
}

}  // namespace gryphon
