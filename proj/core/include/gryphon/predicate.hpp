#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gryphon/expr.hpp"

namespace gryphon {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view cmp_name(CmpOp op);

struct Atom {
  ExprPtr lhs;
  CmpOp cmp = CmpOp::Eq;
  Value rhs{};
};

bool eval_atom(const Atom& a, const Event& e);
std::string render_atom(const Atom& a);

struct Conjunction {
  std::vector<Atom> atoms;  // empty conjunction is vacuously true
};

bool eval_conjunction(const Conjunction& c, const Event& e);

// DNF over arithmetic comparison atoms, bound to one schema. `true` parses to
// the match-all predicate (a single empty conjunction).
class Predicate {
 public:
  Predicate() = default;

  static Predicate parse(std::string_view text, const Schema& s);
  static Predicate match_all(const Schema& s);
  static Predicate of(const Schema& s, std::vector<Conjunction> disjuncts);

  bool eval(const Event& e) const;
  const std::vector<Conjunction>& disjuncts() const { return disjuncts_; }
  const std::string& schema_name() const { return schema_name_; }
  bool is_match_all() const;

  std::string render() const;

 private:
  std::string schema_name_;
  std::vector<Conjunction> disjuncts_;
  void canonicalize();
};

// DNF conjunction of two predicates over the same schema (cross product of
// disjuncts, atoms deduplicated by canonical rendering).
Predicate conjoin(const Predicate& a, const Predicate& b, const Schema& s);

}  // namespace gryphon
