#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gryphon/flow_graph.hpp"

namespace gryphon {

struct RewriteStep {
  std::string rule;
  std::string detail;
};

struct RewriteReport {
  std::vector<RewriteStep> steps;
  std::size_t arcs_before = 0;
  std::size_t arcs_after = 0;
};

// `pinned` names spaces that must survive rewriting (subscribed sinks,
// durable observation points); the meta space is always pinned.
// Each function applies its rule once if an occurrence exists.
std::optional<FlowGraph> try_fuse_selects(const FlowGraph& g,
                                          const std::set<std::string>& pinned,
                                          RewriteStep* step = nullptr);
std::optional<FlowGraph> try_push_select_through_transform(
    const FlowGraph& g, const std::set<std::string>& pinned,
    RewriteStep* step = nullptr);
std::optional<FlowGraph> try_push_select_through_merge(
    const FlowGraph& g, const std::set<std::string>& pinned,
    RewriteStep* step = nullptr);

// Applies the rules in a fixed order (merge, transform, fuse) to a fixpoint.
// Terminates: each application strictly shrinks (merge-downstream selects,
// transform-downstream selects, select-arc count) lexicographically.
FlowGraph rewrite_fixpoint(const FlowGraph& g, const std::set<std::string>& pinned,
                           RewriteReport* report = nullptr);

struct EquivalenceVerdict {
  bool equivalent = true;
  std::string counterexample;  // first divergence, empty when equivalent
};

// Runs both graphs on `trials` random source histories (events_per_trial
// events each) through the single-broker simulator and compares every sink:
// delivered value sequences for histories, states_equal for interpretations.
EquivalenceVerdict check_graph_equivalence(const FlowGraph& g1, const FlowGraph& g2,
                                           int trials, int events_per_trial,
                                           std::uint64_t seed);

}  // namespace gryphon
