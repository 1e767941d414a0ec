#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gryphon/schema.hpp"

namespace gryphon {

enum class AggKind { Latest, Max, Min, Sum, Count };

std::string_view agg_name(AggKind k);

struct AggDef {
  std::string out_name;
  AggKind kind = AggKind::Count;
  int attr = -1;  // -1 for count
  std::string attr_name;
  bool operator==(const AggDef&) const = default;
};

// Keyed aggregates over an event history. The pair (key attrs, aggregates)
// determines the state schema: key attributes followed by aggregate columns.
class InterpSpec {
 public:
  InterpSpec() = default;

  // Grammar: [key a(, b)* ;] agg (as name)? (, agg (as name)?)*
  // where agg is latest(a) | max(a) | min(a) | sum(a) | count.
  static InterpSpec parse(std::string_view text, const Schema& input);
  static InterpSpec of(const Schema& input, std::vector<int> key_attrs,
                       std::vector<AggDef> aggs);

  const Schema& input_schema() const { return input_; }
  const std::vector<int>& key_attrs() const { return key_attrs_; }
  const std::vector<AggDef>& aggregates() const { return aggs_; }

  Schema state_schema() const;

  // Key attrs followed by the distinct aggregated input attributes.
  Schema expansion_schema() const;

  // Expandable families: {latest(a)} with optional max(a)/min(a) over one
  // attribute a, or exactly {count, sum(a)} over one attribute a.
  bool expandable() const;

  std::string render() const;

  bool operator==(const InterpSpec&) const = default;

 private:
  Schema input_;
  std::vector<int> key_attrs_;
  std::vector<AggDef> aggs_;
};

struct InterpRow {
  std::vector<Value> aggs;        // positional, one per aggregate column
  std::uint64_t last_seq = 0;     // highest seq incorporated for this key
};

class InterpState {
 public:
  InterpState() = default;
  explicit InterpState(InterpSpec spec);

  const InterpSpec& spec() const { return spec_; }
  const std::map<std::vector<Value>, InterpRow>& rows() const { return rows_; }

  // Seq-guarded incremental fold. latest updates only when e.seq exceeds the
  // key's last_seq; max/min/sum/count are order-insensitive; a seq already
  // applied is a no-op. Throws missing-seq when e carries no seq.
  void apply(const Event& e);

  // Folds an expansion delta: events are unsequenced and applied in order
  // (latest takes the running last value). Used by snapshot/compressed
  // delivery on reconnect.
  void apply_expansion(std::span<const Event> events);

  // Everything at or below `floor` counts as applied (snapshot adoption).
  void set_floor(std::uint64_t floor);
  std::uint64_t floor() const { return applied_floor_; }

  // Canonical expansion per key in lexicographic key order. Events are
  // unsequenced; interpreting the (sequenced) expansion reproduces this
  // state. Throws not-expandable.
  std::vector<Event> expand() const;

  nlohmann::json to_json() const;
  static InterpState from_json(const nlohmann::json& j, const InterpSpec& spec);

 private:
  InterpSpec spec_;
  std::map<std::vector<Value>, InterpRow> rows_;
  std::uint64_t applied_floor_ = 0;
  std::set<std::uint64_t> applied_;  // seqs above the floor already folded

  void fold_row(const std::vector<Value>& key, const Event& e, bool guard_latest);
};

InterpState init_state(const InterpSpec& spec);
InterpState interpret_history(const InterpSpec& spec, std::span<const Event> h);

// Aggregate-column equality (key sets and every cell); last_seq is excluded.
// Throws spec-mismatch when the specs differ.
bool states_equal(const InterpState& a, const InterpState& b);

std::vector<Event> expand_state(const InterpState& st);

// expand(interpret(h)): never longer than h, state-equivalent under spec.
std::vector<Event> compress_history(const InterpSpec& spec,
                                    std::span<const Event> h);

// Assigns seqs 1..n in order; helper for folding unsequenced expansions.
std::vector<Event> sequence_events(std::vector<Event> events);

}  // namespace gryphon
