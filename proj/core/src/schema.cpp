#include "gryphon/schema.hpp"

#include <set>

#include "gryphon/error.hpp"
#include "lexer.hpp"

namespace gryphon {

Schema::Schema(std::string name, std::vector<Attribute> attributes)
    : name_(std::move(name)), attributes_(std::move(attributes)) {
  if (attributes_.empty()) {
    throw Error(errc::empty_attributes, "schema " + name_ + " has no attributes");
  }
  std::set<std::string> seen;
  for (const auto& a : attributes_) {
    if (!seen.insert(a.name).second) {
      throw Error(errc::duplicate_attribute,
                  "schema " + name_ + " repeats attribute " + a.name);
    }
  }
}

Schema Schema::parse(std::string_view text) {
  detail::Lexer lex(text);
  std::string name = lex.expect_ident();
  lex.expect("(");
  std::vector<Attribute> attrs;
  do {
    std::string attr = lex.expect_ident();
    lex.expect(":");
    std::string type_tok = lex.expect_ident();
    auto type = type_from_name(type_tok);
    if (!type) {
      throw Error(errc::unknown_type, "unknown type token " + type_tok);
    }
    attrs.push_back({attr, *type});
  } while (lex.accept(","));
  lex.expect(")");
  if (lex.kind() != detail::Tok::End) lex.fail("trailing input");
  return Schema(std::move(name), std::move(attrs));
}

int Schema::index_of(std::string_view attr) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == attr) return static_cast<int>(i);
  }
  return -1;
}

std::string Schema::render() const {
  std::string out = name_ + "(";
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (i) out += ", ";
    out += attributes_[i].name;
    out += ":";
    out += type_name(attributes_[i].type);
  }
  out += ")";
  return out;
}

Event validate_event(const Schema& s, std::vector<Value> values, std::string origin) {
  if (values.size() != s.arity()) {
    throw Error(errc::arity_mismatch,
                "schema " + s.name() + " expects " + std::to_string(s.arity()) +
                    " values, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (value_type(values[i]) != s.at(i).type) {
      throw Error(errc::type_mismatch,
                  "position " + std::to_string(i) + " (" + s.at(i).name +
                      ") expects " + std::string(type_name(s.at(i).type)) +
                      ", got " + std::string(type_name(value_type(values[i]))));
    }
  }
  Event e;
  e.values = std::move(values);
  e.origin = std::move(origin);
  return e;
}

}  // namespace gryphon
