#include "gryphon/matching.hpp"

#include "gryphon/error.hpp"

namespace gryphon {

std::vector<Subscription> subscriptions_from(const Predicate& p,
                                             const std::string& client,
                                             const std::string& base_id) {
  std::vector<Subscription> out;
  const auto& disjuncts = p.disjuncts();
  for (std::size_t i = 0; i < disjuncts.size(); ++i) {
    Subscription s;
    s.sub_id = disjuncts.size() == 1 ? base_id : base_id + "@" + std::to_string(i + 1);
    s.client = client;
    s.conjunction = disjuncts[i];
    out.push_back(std::move(s));
  }
  return out;
}

MatchTree::MatchTree(Schema schema)
    : schema_(std::move(schema)), root_(std::make_unique<Node>()) {}

MatchTree MatchTree::build(const std::vector<Subscription>& subs, const Schema& s) {
  MatchTree t(s);
  for (const auto& sub : subs) t.add(sub);
  return t;
}

void MatchTree::add(const Subscription& s) {
  if (ids_.count(s.sub_id)) {
    throw Error(errc::duplicate_sub, "subscription " + s.sub_id + " already present");
  }
  // pick one bare equality atom per attribute level; the rest are residual
  std::vector<const Atom*> level_eq(schema_.arity(), nullptr);
  Entry entry{s.sub_id, s.client, {}};
  for (const auto& atom : s.conjunction.atoms) {
    bool consumed = false;
    if (atom.cmp == CmpOp::Eq && is_bare_attr(*atom.lhs)) {
      auto idx = static_cast<std::size_t>(atom.lhs->attr);
      if (!level_eq[idx] &&
          value_type(atom.rhs) == schema_.at(idx).type) {
        level_eq[idx] = &atom;
        consumed = true;
      }
    }
    if (!consumed) entry.residual.push_back(atom);
  }
  Node* n = root_.get();
  for (std::size_t level = 0; level < schema_.arity(); ++level) {
    if (level_eq[level]) {
      auto& child = n->eq[level_eq[level]->rhs];
      if (!child) child = std::make_unique<Node>();
      n = child.get();
    } else {
      if (!n->star) n->star = std::make_unique<Node>();
      n = n->star.get();
    }
  }
  n->results.push_back(std::move(entry));
  ids_.emplace(s.sub_id, s.client);
}

void MatchTree::remove(const std::string& sub_id) {
  if (!ids_.count(sub_id)) {
    throw Error(errc::unknown_sub, "subscription " + sub_id + " not present");
  }
  remove_walk(*root_, sub_id);
  ids_.erase(sub_id);
}

bool MatchTree::remove_walk(Node& n, const std::string& sub_id) {
  for (auto it = n.results.begin(); it != n.results.end(); ++it) {
    if (it->sub_id == sub_id) {
      n.results.erase(it);
      return true;
    }
  }
  for (auto it = n.eq.begin(); it != n.eq.end(); ++it) {
    if (remove_walk(*it->second, sub_id)) {
      if (it->second->empty()) n.eq.erase(it);
      return true;
    }
  }
  if (n.star && remove_walk(*n.star, sub_id)) {
    if (n.star->empty()) n.star.reset();
    return true;
  }
  return false;
}

std::set<std::string> MatchTree::match(const Event& e) const {
  std::set<std::string> out;
  ++stats_.matches;
  match_walk(*root_, 0, e, out);
  return out;
}

void MatchTree::match_walk(const Node& n, std::size_t level, const Event& e,
                           std::set<std::string>& out) const {
  ++stats_.node_visits;
  if (level == schema_.arity()) {
    for (const auto& entry : n.results) {
      bool ok = true;
      for (const auto& atom : entry.residual) {
        if (!eval_atom(atom, e)) {
          ok = false;
          break;
        }
      }
      if (ok) out.insert(entry.sub_id);
    }
    return;
  }
  auto it = n.eq.find(e.values[level]);
  if (it != n.eq.end()) match_walk(*it->second, level + 1, e, out);
  if (n.star) match_walk(*n.star, level + 1, e, out);
}

nlohmann::json MatchTree::stats_json() const {
  return {{"matches", stats_.matches},
          {"node_visits", stats_.node_visits},
          {"subs_active", ids_.size()}};
}

}  // namespace gryphon
