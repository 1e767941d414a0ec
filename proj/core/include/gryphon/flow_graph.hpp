#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gryphon/interp.hpp"
#include "gryphon/predicate.hpp"
#include "gryphon/transform.hpp"

namespace gryphon {

enum class SpaceKind { History, Interpretation };
enum class ArcKind { Select, Transform, Interpret, Expand };

std::string_view space_kind_name(SpaceKind k);
std::string_view arc_kind_name(ArcKind k);

// Name of the implicit, durable meta-event space hosted on the coordinator
// broker (lowest broker id). Its events are graph-change requests and
// confirmations; it is subscribable like any other space.
inline constexpr const char* kMetaSpace = "__meta";

Schema meta_schema();

struct SpaceDef {
  std::string name;
  SpaceKind kind = SpaceKind::History;
  Schema schema;  // for interpretation spaces: the induced state schema
  std::string broker;
  bool durable = false;
  // interpretation spaces only
  std::optional<InterpSpec> interp;
  std::string interp_text;  // unbound source text from the document
};

struct ArcDef {
  std::string id;
  std::string src;
  std::string dst;
  ArcKind kind = ArcKind::Select;
  std::optional<Predicate> predicate;    // select
  std::optional<Transform> transform;    // transform
  std::optional<InterpSpec> interp;      // interpret / expand
  std::string op_text;                   // source text for re-rendering
};

// Validated DAG of information spaces and arcs with broker placement. The
// broker links form a tree, so multicast routing has a unique path per
// (source, destination) pair. Immutable after load; reconfiguration builds a
// new version.
class FlowGraph {
 public:
  FlowGraph() = default;

  // Strict parser for the graph definition document; unknown keys error.
  static FlowGraph load(const nlohmann::json& document);
  static FlowGraph load_text(const std::string& text);

  const std::map<std::string, Schema>& schemas() const { return schemas_; }
  const std::vector<SpaceDef>& spaces() const { return spaces_; }
  const std::vector<ArcDef>& arcs() const { return arcs_; }
  const std::vector<std::string>& brokers() const { return brokers_; }
  const std::vector<std::pair<std::string, std::string>>& links() const {
    return links_;
  }

  const SpaceDef* find_space(std::string_view name) const;
  const SpaceDef& space(std::string_view name) const;
  const ArcDef* find_arc(std::string_view id) const;
  bool has_broker(std::string_view id) const;
  const std::string& coordinator() const;  // lowest broker id

  std::vector<const ArcDef*> out_arcs(std::string_view space) const;
  std::vector<const ArcDef*> in_arcs(std::string_view space) const;

  // Deterministic topological order of everything reachable from `space`:
  // one entry per reachable space, paired with its first reachable in-arc.
  std::vector<std::pair<const ArcDef*, const SpaceDef*>> downstream_closure(
      std::string_view space) const;

  // Next hop on the unique tree path from `from` to `to`; empty when equal.
  std::string next_hop(const std::string& from, const std::string& to) const;

  nlohmann::json to_json() const;

  // Unvalidated mutation surface for the optimizer and reflection; call
  // validated() to re-check every invariant afterwards.
  struct Builder {
    std::map<std::string, Schema> schemas;
    std::vector<SpaceDef> spaces;
    std::vector<ArcDef> arcs;
    std::vector<std::string> brokers;
    std::vector<std::pair<std::string, std::string>> links;

    static Builder from(const FlowGraph& g);
    FlowGraph validated() const;
  };

 private:
  std::map<std::string, Schema> schemas_;
  std::vector<SpaceDef> spaces_;
  std::vector<ArcDef> arcs_;
  std::vector<std::string> brokers_;
  std::vector<std::pair<std::string, std::string>> links_;
  std::map<std::string, std::map<std::string, std::string>> routes_;  // from -> to -> next hop

  void validate();
  friend ArcDef validate_arc_def(const FlowGraph&, const nlohmann::json&);
};

// Re-checks the kind/schema rules for one arc against the graph's spaces.
// Throws kind-mismatch / schema-mismatch / dangling-reference.
void validate_arc(const FlowGraph& g, const ArcDef& a);

}  // namespace gryphon
