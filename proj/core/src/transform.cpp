#include "gryphon/transform.hpp"

#include <map>

#include "gryphon/error.hpp"
#include "expr_parser.hpp"

namespace gryphon {

Transform Transform::parse(std::string_view text, const Schema& input,
                           const Schema& output) {
  detail::Lexer lex(text);
  std::map<std::string, ExprPtr> bound;
  do {
    std::string out_name = lex.expect_ident();
    lex.expect(":=");
    ExprPtr e = detail::parse_expression(lex, input);
    if (bound.count(out_name)) {
      throw Error(errc::duplicate_attribute,
                  "output attribute " + out_name + " bound twice");
    }
    bound[out_name] = std::move(e);
  } while (lex.accept(","));
  if (lex.kind() != detail::Tok::End) lex.fail("trailing input");

  std::vector<ExprPtr> bindings;
  for (const auto& attr : output.attributes()) {
    auto it = bound.find(attr.name);
    if (it == bound.end()) {
      throw Error(errc::unknown_attribute,
                  "output attribute " + attr.name + " has no binding");
    }
    bindings.push_back(it->second);
    bound.erase(it);
  }
  if (!bound.empty()) {
    throw Error(errc::unknown_attribute, "binding for " + bound.begin()->first +
                                             " not in output schema " +
                                             output.name());
  }
  return of(input, output, std::move(bindings));
}

Transform Transform::identity(const Schema& s) {
  std::vector<ExprPtr> bindings;
  for (std::size_t i = 0; i < s.arity(); ++i) {
    bindings.push_back(ArithExpr::ref(static_cast<int>(i), s.at(i).name));
  }
  return of(s, s, std::move(bindings));
}

Transform Transform::of(Schema input, Schema output, std::vector<ExprPtr> bindings) {
  if (bindings.size() != output.arity()) {
    throw Error(errc::arity_mismatch, "one binding per output attribute required");
  }
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    AttrType bt = expr_type(*bindings[i], input);
    AttrType ot = output.at(i).type;
    bool ok = bt == ot || (bt == AttrType::Int64 && ot == AttrType::Float64);
    if (!ok) {
      throw Error(errc::type_mismatch,
                  "binding for " + output.at(i).name + " yields " +
                      std::string(type_name(bt)) + ", expected " +
                      std::string(type_name(ot)));
    }
  }
  Transform t;
  t.input_ = std::move(input);
  t.output_ = std::move(output);
  t.bindings_ = std::move(bindings);
  return t;
}

Event Transform::apply(const Event& e) const {
  Event out;
  out.values.reserve(output_.arity());
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    Value v = eval_expr(*bindings_[i], e);
    if (output_.at(i).type == AttrType::Float64 &&
        value_type(v) == AttrType::Int64) {
      v = static_cast<double>(std::get<std::int64_t>(v));
    }
    out.values.push_back(std::move(v));
  }
  out.origin = e.origin;  // seq deliberately not carried over
  return out;
}

std::string Transform::render() const {
  std::string out;
  for (std::size_t i = 0; i < bindings_.size(); ++i) {
    if (i) out += ", ";
    out += output_.at(i).name + " := " + render_expr(*bindings_[i]);
  }
  return out;
}

}  // namespace gryphon
