#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gryphon/predicate.hpp"

namespace gryphon {

// One DNF disjunct registered for matching; a multi-disjunct Predicate
// registers as several Subscriptions sharing a client id.
struct Subscription {
  std::string sub_id;
  std::string client;
  Conjunction conjunction;
};

std::vector<Subscription> subscriptions_from(const Predicate& p,
                                             const std::string& client,
                                             const std::string& base_id);

// Shared-prefix decision tree: one level per schema attribute in schema
// order. Bare equality atoms branch by value with a * edge for subscriptions
// not constraining that attribute; every other atom attaches as a residual
// filter at the subscription's result node. Matching follows both the
// event-value edge and the * edge at each level, so node visits grow with
// shared structure, not with subscription count.
class MatchTree {
 public:
  explicit MatchTree(Schema schema);

  static MatchTree build(const std::vector<Subscription>& subs, const Schema& s);

  void add(const Subscription& s);        // throws duplicate-sub
  void remove(const std::string& sub_id); // throws unknown-sub; prunes empty nodes

  // Exactly the sub_ids whose conjunction evaluates true on e.
  std::set<std::string> match(const Event& e) const;

  std::size_t size() const { return ids_.size(); }
  bool contains(const std::string& sub_id) const { return ids_.count(sub_id) > 0; }

  struct Stats {
    std::uint64_t matches = 0;
    std::uint64_t node_visits = 0;
  };
  const Stats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  nlohmann::json stats_json() const;

 private:
  struct Entry {
    std::string sub_id;
    std::string client;
    std::vector<Atom> residual;
  };
  struct Node {
    std::map<Value, std::unique_ptr<Node>> eq;
    std::unique_ptr<Node> star;
    std::vector<Entry> results;

    bool empty() const { return eq.empty() && !star && results.empty(); }
  };

  Schema schema_;
  std::unique_ptr<Node> root_;
  std::map<std::string, std::string> ids_;  // sub_id -> client
  mutable Stats stats_;

  void match_walk(const Node& n, std::size_t level, const Event& e,
                  std::set<std::string>& out) const;
  static bool remove_walk(Node& n, const std::string& sub_id);
};

}  // namespace gryphon
