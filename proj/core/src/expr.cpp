#include "gryphon/expr.hpp"

#include <cmath>

#include "gryphon/error.hpp"

namespace gryphon {

ExprPtr ArithExpr::lit(Value v) {
  auto e = std::make_shared<ArithExpr>();
  e->op = Op::Literal;
  e->literal = std::move(v);
  return e;
}

ExprPtr ArithExpr::ref(int index, std::string name) {
  auto e = std::make_shared<ArithExpr>();
  e->op = Op::Attr;
  e->attr = index;
  e->attr_name = std::move(name);
  return e;
}

ExprPtr ArithExpr::bin(Op op, ExprPtr l, ExprPtr r) {
  auto e = std::make_shared<ArithExpr>();
  e->op = op;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}

bool is_bare_attr(const ArithExpr& e) { return e.op == ArithExpr::Op::Attr; }

namespace {

bool value_is_zero(const Value& v) {
  if (value_type(v) == AttrType::Int64) return std::get<std::int64_t>(v) == 0;
  if (value_type(v) == AttrType::Float64) return std::get<double>(v) == 0.0;
  return false;
}

Value numeric_op(ArithExpr::Op op, const Value& a, const Value& b) {
  AttrType ta = value_type(a), tb = value_type(b);
  if (!is_numeric(ta) || !is_numeric(tb)) {
    throw Error(errc::type_mismatch, "arithmetic over non-numeric value");
  }
  if (op == ArithExpr::Op::Div && value_is_zero(b)) {
    throw Error(errc::division_by_zero, "division by zero at evaluation");
  }
  // division always promotes; otherwise int64 stays exact
  if (ta == AttrType::Int64 && tb == AttrType::Int64 && op != ArithExpr::Op::Div) {
    auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    switch (op) {
      case ArithExpr::Op::Add: return x + y;
      case ArithExpr::Op::Sub: return x - y;
      default: return x * y;
    }
  }
  double x = ta == AttrType::Int64 ? static_cast<double>(std::get<std::int64_t>(a))
                                   : std::get<double>(a);
  double y = tb == AttrType::Int64 ? static_cast<double>(std::get<std::int64_t>(b))
                                   : std::get<double>(b);
  switch (op) {
    case ArithExpr::Op::Add: return x + y;
    case ArithExpr::Op::Sub: return x - y;
    case ArithExpr::Op::Mul: return x * y;
    default: return x / y;
  }
}

int precedence(ArithExpr::Op op) {
  switch (op) {
    case ArithExpr::Op::Mul:
    case ArithExpr::Op::Div: return 2;
    case ArithExpr::Op::Add:
    case ArithExpr::Op::Sub: return 1;
    default: return 3;
  }
}

char op_char(ArithExpr::Op op) {
  switch (op) {
    case ArithExpr::Op::Add: return '+';
    case ArithExpr::Op::Sub: return '-';
    case ArithExpr::Op::Mul: return '*';
    default: return '/';
  }
}

}  // namespace

Value eval_expr(const ArithExpr& e, const Event& ev) {
  switch (e.op) {
    case ArithExpr::Op::Literal:
      return e.literal;
    case ArithExpr::Op::Attr:
      return ev.values.at(static_cast<std::size_t>(e.attr));
    default:
      return numeric_op(e.op, eval_expr(*e.lhs, ev), eval_expr(*e.rhs, ev));
  }
}

AttrType expr_type(const ArithExpr& e, const Schema& s) {
  switch (e.op) {
    case ArithExpr::Op::Literal:
      return value_type(e.literal);
    case ArithExpr::Op::Attr:
      return s.at(static_cast<std::size_t>(e.attr)).type;
    default: {
      AttrType l = expr_type(*e.lhs, s), r = expr_type(*e.rhs, s);
      if (!is_numeric(l) || !is_numeric(r)) {
        throw Error(errc::type_mismatch, "arithmetic over non-numeric attribute");
      }
      if (e.op == ArithExpr::Op::Div) return AttrType::Float64;
      return (l == AttrType::Float64 || r == AttrType::Float64) ? AttrType::Float64
                                                                : AttrType::Int64;
    }
  }
}

std::string render_expr(const ArithExpr& e) {
  switch (e.op) {
    case ArithExpr::Op::Literal:
      return render_value(e.literal);
    case ArithExpr::Op::Attr:
      return e.attr_name;
    default: {
      auto wrap = [&](const ArithExpr& sub) {
        std::string s = render_expr(sub);
        if (precedence(sub.op) < precedence(e.op)) return "(" + s + ")";
        return s;
      };
      std::string l = wrap(*e.lhs);
      // right operand of - and / needs parens at equal precedence
      std::string r = render_expr(*e.rhs);
      if (precedence(e.rhs->op) < precedence(e.op) ||
          (precedence(e.rhs->op) == precedence(e.op) &&
           (e.op == ArithExpr::Op::Sub || e.op == ArithExpr::Op::Div))) {
        r = "(" + r + ")";
      }
      return l + " " + op_char(e.op) + " " + r;
    }
  }
}

void collect_attrs(const ArithExpr& e, std::vector<int>& out) {
  switch (e.op) {
    case ArithExpr::Op::Literal:
      return;
    case ArithExpr::Op::Attr:
      out.push_back(e.attr);
      return;
    default:
      collect_attrs(*e.lhs, out);
      collect_attrs(*e.rhs, out);
  }
}

ExprPtr substitute_attrs(const ExprPtr& e, const std::vector<ExprPtr>& by_index) {
  switch (e->op) {
    case ArithExpr::Op::Literal:
      return e;
    case ArithExpr::Op::Attr:
      return by_index.at(static_cast<std::size_t>(e->attr));
    default:
      return ArithExpr::bin(e->op, substitute_attrs(e->lhs, by_index),
                            substitute_attrs(e->rhs, by_index));
  }
}

}  // namespace gryphon
