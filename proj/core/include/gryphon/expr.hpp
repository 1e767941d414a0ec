#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gryphon/schema.hpp"

namespace gryphon {

struct ArithExpr;
using ExprPtr = std::shared_ptr<const ArithExpr>;

// Expression tree over event attributes: literals, attribute references and
// the four arithmetic operators. String/bool attributes may appear only as
// bare references (copies or equality atoms); arithmetic is numeric only.
struct ArithExpr {
  enum class Op { Literal, Attr, Add, Sub, Mul, Div };

  Op op = Op::Literal;
  Value literal{};
  int attr = -1;
  std::string attr_name;
  ExprPtr lhs, rhs;

  static ExprPtr lit(Value v);
  static ExprPtr ref(int index, std::string name);
  static ExprPtr bin(Op op, ExprPtr l, ExprPtr r);
};

bool is_bare_attr(const ArithExpr& e);

// Throws division-by-zero on a runtime zero divisor.
Value eval_expr(const ArithExpr& e, const Event& ev);

// Static result type given a schema; throws on ill-typed trees.
AttrType expr_type(const ArithExpr& e, const Schema& s);

std::string render_expr(const ArithExpr& e);

void collect_attrs(const ArithExpr& e, std::vector<int>& out);

// Replaces each attribute reference i by by_index[i]; used by the optimizer
// to substitute transform bindings into predicates.
ExprPtr substitute_attrs(const ExprPtr& e, const std::vector<ExprPtr>& by_index);

}  // namespace gryphon
