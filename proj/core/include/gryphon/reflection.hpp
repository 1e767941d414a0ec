#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <json.hpp>

#include "gryphon/flow_graph.hpp"

namespace gryphon {

namespace meta {
inline constexpr const char* kAddSpace = "add_space";
inline constexpr const char* kAddArc = "add_arc";
inline constexpr const char* kRemoveArc = "remove_arc";
inline constexpr const char* kRemoveSpace = "remove_space";
inline constexpr const char* kAddSubscriptionRoute = "add_subscription_route";

inline constexpr const char* kRequested = "requested";
inline constexpr const char* kConfirmed = "confirmed";
inline constexpr const char* kRejected = "rejected";  // "rejected:<code>"
}  // namespace meta

// A confirmed graph change ready to install. `space` is the space whose
// routing the change alters (empty when the change has no activation barrier,
// e.g. add_space): events of that space with seq < activation follow the old
// graph, seq >= activation the new one.
struct MetaChange {
  std::string request_id;
  std::string kind;
  nlohmann::json payload;
  std::string space;
  std::uint64_t activation = 0;
};

// One record of the meta space, decoded from / encoded to the fixed schema
// [request_id, kind, payload, status, activation].
struct MetaEvent {
  std::string request_id;
  std::string kind;
  std::string payload_text;
  std::string status;                // requested | confirmed | rejected:<code>
  std::string activation_text;       // "<space>:<seq>" or ""
  std::optional<std::uint64_t> seq;  // meta-space seq once sequenced
};

Event meta_to_event(const MetaEvent& m);
MetaEvent meta_from_event(const Event& e);

std::string render_activation(const std::string& space, std::uint64_t seq);
std::pair<std::string, std::uint64_t> parse_activation(const std::string& text);

// The space whose sequencing gates the change; empty when none does.
// Throws when the payload is malformed or references a missing space.
std::string affected_space(const FlowGraph& g, const std::string& kind,
                           const nlohmann::json& payload);

// Applies one change fragment, re-running full graph validation.
// Throws (parse / dangling-reference / cycle / ...) when invalid; the error
// code becomes the rejection reason.
FlowGraph apply_change(const FlowGraph& g, const std::string& kind,
                       const nlohmann::json& payload);

// Fold of a meta history from a genesis graph: replays every confirmed meta
// event in order. The result must equal the live graph (self-description).
FlowGraph fold_meta(const FlowGraph& genesis, std::span<const Event> meta_history);

}  // namespace gryphon
