#pragma once

// Recursive-descent arithmetic expression parser shared by the predicate and
// transform grammars.

#include "gryphon/error.hpp"
#include "gryphon/expr.hpp"
#include "lexer.hpp"

namespace gryphon::detail {

ExprPtr parse_expression(Lexer& lex, const Schema& schema);

inline ExprPtr parse_factor(Lexer& lex, const Schema& schema) {
  if (lex.accept("-")) {
    ExprPtr e = parse_factor(lex, schema);
    if (e->op == ArithExpr::Op::Literal) {
      if (value_type(e->literal) == AttrType::Int64) {
        return ArithExpr::lit(-std::get<std::int64_t>(e->literal));
      }
      if (value_type(e->literal) == AttrType::Float64) {
        return ArithExpr::lit(-std::get<double>(e->literal));
      }
      throw Error(errc::type_mismatch, "unary minus on a non-numeric literal");
    }
    return ArithExpr::bin(ArithExpr::Op::Sub, ArithExpr::lit(std::int64_t{0}), e);
  }
  if (lex.accept("(")) {
    ExprPtr e = parse_expression(lex, schema);
    lex.expect(")");
    return e;
  }
  switch (lex.kind()) {
    case Tok::Int: {
      std::int64_t v = lex.int_value();
      lex.advance();
      return ArithExpr::lit(v);
    }
    case Tok::Float: {
      double v = lex.float_value();
      lex.advance();
      return ArithExpr::lit(v);
    }
    case Tok::String: {
      std::string v = lex.text();
      lex.advance();
      return ArithExpr::lit(v);
    }
    case Tok::Ident: {
      if (lex.text() == "true" || lex.text() == "false") {
        bool v = lex.text() == "true";
        lex.advance();
        return ArithExpr::lit(v);
      }
      std::string name = lex.expect_ident();
      int idx = schema.index_of(name);
      if (idx < 0) {
        throw Error(errc::unknown_attribute,
                    "attribute " + name + " not in schema " + schema.name());
      }
      return ArithExpr::ref(idx, name);
    }
    default:
      lex.fail("expected expression");
  }
}

inline ExprPtr parse_term(Lexer& lex, const Schema& schema) {
  ExprPtr e = parse_factor(lex, schema);
  for (;;) {
    ArithExpr::Op op;
    if (lex.at("*")) {
      op = ArithExpr::Op::Mul;
    } else if (lex.at("/")) {
      op = ArithExpr::Op::Div;
    } else {
      return e;
    }
    lex.advance();
    ExprPtr rhs = parse_factor(lex, schema);
    if (op == ArithExpr::Op::Div && rhs->op == ArithExpr::Op::Literal) {
      bool zero = (value_type(rhs->literal) == AttrType::Int64 &&
                   std::get<std::int64_t>(rhs->literal) == 0) ||
                  (value_type(rhs->literal) == AttrType::Float64 &&
                   std::get<double>(rhs->literal) == 0.0);
      if (zero) {
        throw Error(errc::division_by_zero, "division by a literal zero");
      }
    }
    e = ArithExpr::bin(op, e, rhs);
  }
}

inline ExprPtr parse_expression(Lexer& lex, const Schema& schema) {
  ExprPtr e = parse_term(lex, schema);
  for (;;) {
    ArithExpr::Op op;
    if (lex.at("+")) {
      op = ArithExpr::Op::Add;
    } else if (lex.at("-")) {
      op = ArithExpr::Op::Sub;
    } else {
      return e;
    }
    lex.advance();
    e = ArithExpr::bin(op, e, parse_term(lex, schema));
  }
}

}  // namespace gryphon::detail
