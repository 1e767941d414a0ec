#include "gryphon/predicate.hpp"

#include <algorithm>
#include <climits>
#include <tuple>

#include "gryphon/error.hpp"
#include "expr_parser.hpp"

namespace gryphon {

std::string_view cmp_name(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

bool eval_atom(const Atom& a, const Event& e) {
  Value lhs = eval_expr(*a.lhs, e);
  int c = compare_values(lhs, a.rhs);
  switch (a.cmp) {
    case CmpOp::Eq: return c == 0;
    case CmpOp::Ne: return c != 0;
    case CmpOp::Lt: return c < 0;
    case CmpOp::Le: return c <= 0;
    case CmpOp::Gt: return c > 0;
    case CmpOp::Ge: return c >= 0;
  }
  return false;
}

std::string render_atom(const Atom& a) {
  return render_expr(*a.lhs) + " " + std::string(cmp_name(a.cmp)) + " " +
         render_value(a.rhs);
}

bool eval_conjunction(const Conjunction& c, const Event& e) {
  for (const auto& a : c.atoms) {
    if (!eval_atom(a, e)) return false;
  }
  return true;
}

namespace {

int cmp_rank(CmpOp op) { return static_cast<int>(op); }

int first_attr(const ArithExpr& e) {
  std::vector<int> attrs;
  collect_attrs(e, attrs);
  if (attrs.empty()) return INT_MAX;
  return *std::min_element(attrs.begin(), attrs.end());
}

void check_atom_types(const Atom& atom, const Schema& s) {
  AttrType lt = expr_type(*atom.lhs, s);  // throws on arithmetic over strings
  AttrType rt = value_type(atom.rhs);
  if (lt == AttrType::String || lt == AttrType::Bool) {
    if (!is_bare_attr(*atom.lhs)) {
      throw Error(errc::type_mismatch, "non-numeric expression in atom");
    }
    if (atom.cmp != CmpOp::Eq && atom.cmp != CmpOp::Ne) {
      throw Error(errc::type_mismatch,
                  "ordering comparison on " + std::string(type_name(lt)) +
                      " attribute " + atom.lhs->attr_name);
    }
    if (rt != lt) {
      throw Error(errc::type_mismatch, "literal type mismatch in atom " +
                                           render_atom(atom));
    }
  } else if (!is_numeric(rt)) {
    throw Error(errc::type_mismatch,
                "numeric expression compared to " + std::string(type_name(rt)));
  }
}

Atom parse_atom(detail::Lexer& lex, const Schema& s) {
  Atom atom;
  atom.lhs = detail::parse_expression(lex, s);
  if (lex.accept("=") || lex.accept("==")) {
    atom.cmp = CmpOp::Eq;
  } else if (lex.accept("!=")) {
    atom.cmp = CmpOp::Ne;
  } else if (lex.accept("<=")) {
    atom.cmp = CmpOp::Le;
  } else if (lex.accept(">=")) {
    atom.cmp = CmpOp::Ge;
  } else if (lex.accept("<")) {
    atom.cmp = CmpOp::Lt;
  } else if (lex.accept(">")) {
    atom.cmp = CmpOp::Gt;
  } else {
    lex.fail("expected comparison operator");
  }
  bool negated = lex.accept("-");
  switch (lex.kind()) {
    case detail::Tok::Int:
      atom.rhs = negated ? -lex.int_value() : lex.int_value();
      lex.advance();
      break;
    case detail::Tok::Float:
      atom.rhs = negated ? -lex.float_value() : lex.float_value();
      lex.advance();
      break;
    case detail::Tok::String:
      atom.rhs = lex.text();
      lex.advance();
      break;
    case detail::Tok::Ident:
      if (lex.text() == "true" || lex.text() == "false") {
        atom.rhs = lex.text() == "true";
        lex.advance();
        break;
      }
      [[fallthrough]];
    default:
      lex.fail("expected literal constant");
  }
  check_atom_types(atom, s);
  return atom;
}

}  // namespace

Predicate Predicate::parse(std::string_view text, const Schema& s) {
  detail::Lexer lex(text);
  if (lex.at("true")) {
    lex.advance();
    if (lex.kind() != detail::Tok::End) lex.fail("trailing input");
    return match_all(s);
  }
  std::vector<Conjunction> disjuncts;
  do {
    Conjunction conj;
    do {
      conj.atoms.push_back(parse_atom(lex, s));
    } while (lex.accept("and"));
    disjuncts.push_back(std::move(conj));
  } while (lex.accept("or"));
  if (lex.kind() != detail::Tok::End) lex.fail("trailing input");
  return of(s, std::move(disjuncts));
}

Predicate Predicate::match_all(const Schema& s) {
  Predicate p;
  p.schema_name_ = s.name();
  p.disjuncts_.push_back(Conjunction{});
  return p;
}

Predicate Predicate::of(const Schema& s, std::vector<Conjunction> disjuncts) {
  if (disjuncts.empty()) {
    throw Error(errc::parse, "predicate needs at least one disjunct");
  }
  Predicate p;
  p.schema_name_ = s.name();
  p.disjuncts_ = std::move(disjuncts);
  p.canonicalize();
  return p;
}

bool Predicate::eval(const Event& e) const {
  for (const auto& c : disjuncts_) {
    if (eval_conjunction(c, e)) return true;
  }
  return false;
}

bool Predicate::is_match_all() const {
  for (const auto& c : disjuncts_) {
    if (c.atoms.empty()) return true;
  }
  return false;
}

void Predicate::canonicalize() {
  for (auto& conj : disjuncts_) {
    std::stable_sort(conj.atoms.begin(), conj.atoms.end(),
                     [](const Atom& a, const Atom& b) {
                       auto ka = std::tuple(first_attr(*a.lhs), cmp_rank(a.cmp),
                                            render_atom(a));
                       auto kb = std::tuple(first_attr(*b.lhs), cmp_rank(b.cmp),
                                            render_atom(b));
                       return ka < kb;
                     });
    conj.atoms.erase(std::unique(conj.atoms.begin(), conj.atoms.end(),
                                 [](const Atom& a, const Atom& b) {
                                   return render_atom(a) == render_atom(b);
                                 }),
                     conj.atoms.end());
  }
  auto render_conj = [](const Conjunction& c) {
    std::string out;
    for (const auto& a : c.atoms) out += render_atom(a) + " and ";
    return out;
  };
  std::stable_sort(disjuncts_.begin(), disjuncts_.end(),
                   [&](const Conjunction& a, const Conjunction& b) {
                     return render_conj(a) < render_conj(b);
                   });
  disjuncts_.erase(std::unique(disjuncts_.begin(), disjuncts_.end(),
                               [&](const Conjunction& a, const Conjunction& b) {
                                 return render_conj(a) == render_conj(b);
                               }),
                   disjuncts_.end());
  // a vacuous disjunct swallows everything else
  if (is_match_all()) {
    disjuncts_.clear();
    disjuncts_.push_back(Conjunction{});
  }
}

std::string Predicate::render() const {
  if (is_match_all()) return "true";
  std::string out;
  for (std::size_t i = 0; i < disjuncts_.size(); ++i) {
    if (i) out += " or ";
    for (std::size_t j = 0; j < disjuncts_[i].atoms.size(); ++j) {
      if (j) out += " and ";
      out += render_atom(disjuncts_[i].atoms[j]);
    }
  }
  return out;
}

Predicate conjoin(const Predicate& a, const Predicate& b, const Schema& s) {
  std::vector<Conjunction> out;
  for (const auto& ca : a.disjuncts()) {
    for (const auto& cb : b.disjuncts()) {
      Conjunction c = ca;
      c.atoms.insert(c.atoms.end(), cb.atoms.begin(), cb.atoms.end());
      out.push_back(std::move(c));
    }
  }
  return Predicate::of(s, std::move(out));
}

}  // namespace gryphon
