#include "gryphon/interp.hpp"

#include <algorithm>
#include <set>

#include "gryphon/error.hpp"
#include "lexer.hpp"

namespace gryphon {

std::string_view agg_name(AggKind k) {
  switch (k) {
    case AggKind::Latest: return "latest";
    case AggKind::Max: return "max";
    case AggKind::Min: return "min";
    case AggKind::Sum: return "sum";
    case AggKind::Count: return "count";
  }
  return "?";
}

namespace {

AttrType agg_type(const AggDef& a, const Schema& input) {
  if (a.kind == AggKind::Count) return AttrType::Int64;
  return input.at(static_cast<std::size_t>(a.attr)).type;
}

}  // namespace

InterpSpec InterpSpec::parse(std::string_view text, const Schema& input) {
  detail::Lexer lex(text);
  std::vector<int> keys;
  if (lex.accept("key")) {
    do {
      std::string name = lex.expect_ident();
      int idx = input.index_of(name);
      if (idx < 0) {
        throw Error(errc::unknown_attribute,
                    "key attribute " + name + " not in " + input.name());
      }
      keys.push_back(idx);
    } while (lex.accept(","));
    lex.expect(";");
  }
  std::vector<AggDef> aggs;
  do {
    AggDef def;
    std::string kind = lex.expect_ident();
    if (kind == "latest") def.kind = AggKind::Latest;
    else if (kind == "max") def.kind = AggKind::Max;
    else if (kind == "min") def.kind = AggKind::Min;
    else if (kind == "sum") def.kind = AggKind::Sum;
    else if (kind == "count") def.kind = AggKind::Count;
    else lex.fail("unknown aggregate kind " + kind);
    if (def.kind != AggKind::Count) {
      lex.expect("(");
      def.attr_name = lex.expect_ident();
      def.attr = input.index_of(def.attr_name);
      lex.expect(")");
    }
    if (lex.accept("as")) {
      def.out_name = lex.expect_ident();
    } else {
      def.out_name = std::string(agg_name(def.kind));
      if (def.kind != AggKind::Count) def.out_name += "_" + def.attr_name;
    }
    aggs.push_back(std::move(def));
  } while (lex.accept(","));
  if (lex.kind() != detail::Tok::End) lex.fail("trailing input");
  return of(input, std::move(keys), std::move(aggs));
}

InterpSpec InterpSpec::of(const Schema& input, std::vector<int> key_attrs,
                          std::vector<AggDef> aggs) {
  if (aggs.empty()) {
    throw Error(errc::parse, "interpretation needs at least one aggregate");
  }
  std::set<std::string> out_names;
  for (const auto& a : aggs) {
    if (a.kind != AggKind::Count) {
      if (a.attr < 0 || a.attr >= static_cast<int>(input.arity())) {
        throw Error(errc::unknown_attribute,
                    "aggregate over missing attribute " + a.attr_name);
      }
      if (!is_numeric(input.at(static_cast<std::size_t>(a.attr)).type)) {
        throw Error(errc::type_mismatch,
                    "aggregate over non-numeric attribute " + a.attr_name);
      }
    }
    if (!out_names.insert(a.out_name).second) {
      throw Error(errc::duplicate_name, "aggregate output " + a.out_name + " repeated");
    }
  }
  for (int k : key_attrs) {
    if (k < 0 || k >= static_cast<int>(input.arity())) {
      throw Error(errc::unknown_attribute, "key attribute index out of range");
    }
    if (out_names.count(input.at(static_cast<std::size_t>(k)).name)) {
      throw Error(errc::duplicate_name,
                  "key attribute collides with aggregate output name");
    }
  }
  InterpSpec s;
  s.input_ = input;
  s.key_attrs_ = std::move(key_attrs);
  s.aggs_ = std::move(aggs);
  return s;
}

Schema InterpSpec::state_schema() const {
  std::vector<Attribute> attrs;
  for (int k : key_attrs_) attrs.push_back(input_.at(static_cast<std::size_t>(k)));
  for (const auto& a : aggs_) attrs.push_back({a.out_name, agg_type(a, input_)});
  return Schema(input_.name() + "_state", std::move(attrs));
}

Schema InterpSpec::expansion_schema() const {
  std::vector<Attribute> attrs;
  for (int k : key_attrs_) attrs.push_back(input_.at(static_cast<std::size_t>(k)));
  std::vector<int> seen;
  for (const auto& a : aggs_) {
    if (a.kind == AggKind::Count) continue;
    if (std::find(seen.begin(), seen.end(), a.attr) != seen.end()) continue;
    seen.push_back(a.attr);
    attrs.push_back(input_.at(static_cast<std::size_t>(a.attr)));
  }
  return Schema(input_.name() + "_expanded", std::move(attrs));
}

bool InterpSpec::expandable() const {
  bool has_latest = false, has_count = false, has_sum = false, other = false;
  int attr = -2;
  for (const auto& a : aggs_) {
    if (a.kind != AggKind::Count) {
      if (attr == -2) attr = a.attr;
      else if (attr != a.attr) return false;
    }
    switch (a.kind) {
      case AggKind::Latest: has_latest = true; break;
      case AggKind::Count: has_count = true; break;
      case AggKind::Sum: has_sum = true; break;
      case AggKind::Max:
      case AggKind::Min: other = true; break;
    }
  }
  if (has_latest && !has_count && !has_sum) return true;
  if (has_count && has_sum && !has_latest && !other && aggs_.size() == 2) return true;
  return false;
}

std::string InterpSpec::render() const {
  std::string out;
  if (!key_attrs_.empty()) {
    out += "key ";
    for (std::size_t i = 0; i < key_attrs_.size(); ++i) {
      if (i) out += ", ";
      out += input_.at(static_cast<std::size_t>(key_attrs_[i])).name;
    }
    out += "; ";
  }
  for (std::size_t i = 0; i < aggs_.size(); ++i) {
    if (i) out += ", ";
    out += agg_name(aggs_[i].kind);
    if (aggs_[i].kind != AggKind::Count) out += "(" + aggs_[i].attr_name + ")";
    out += " as " + aggs_[i].out_name;
  }
  return out;
}

InterpState::InterpState(InterpSpec spec) : spec_(std::move(spec)) {}

void InterpState::fold_row(const std::vector<Value>& key, const Event& e,
                           bool guard_latest) {
  std::uint64_t seq = e.seq.value_or(0);
  auto it = rows_.find(key);
  if (it == rows_.end()) {
    InterpRow row;
    for (const auto& a : spec_.aggregates()) {
      switch (a.kind) {
        case AggKind::Count:
          row.aggs.push_back(std::int64_t{1});
          break;
        default:
          row.aggs.push_back(e.values.at(static_cast<std::size_t>(a.attr)));
      }
    }
    row.last_seq = seq;
    rows_.emplace(key, std::move(row));
    return;
  }
  InterpRow& row = it->second;
  const auto& aggs = spec_.aggregates();
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    const AggDef& a = aggs[i];
    Value& cell = row.aggs[i];
    switch (a.kind) {
      case AggKind::Latest: {
        if (!guard_latest || seq > row.last_seq) {
          cell = e.values.at(static_cast<std::size_t>(a.attr));
        }
        break;
      }
      case AggKind::Max: {
        const Value& v = e.values.at(static_cast<std::size_t>(a.attr));
        if (compare_values(v, cell) > 0) cell = v;
        break;
      }
      case AggKind::Min: {
        const Value& v = e.values.at(static_cast<std::size_t>(a.attr));
        if (compare_values(v, cell) < 0) cell = v;
        break;
      }
      case AggKind::Sum: {
        const Value& v = e.values.at(static_cast<std::size_t>(a.attr));
        if (value_type(cell) == AttrType::Int64) {
          cell = std::get<std::int64_t>(cell) + std::get<std::int64_t>(v);
        } else {
          cell = std::get<double>(cell) + std::get<double>(v);
        }
        break;
      }
      case AggKind::Count:
        cell = std::get<std::int64_t>(cell) + 1;
        break;
    }
  }
  row.last_seq = std::max(row.last_seq, seq);
}

void InterpState::apply(const Event& e) {
  if (!e.seq) {
    throw Error(errc::missing_seq, "interpretation input events must be sequenced");
  }
  std::uint64_t s = *e.seq;
  if (s <= applied_floor_ || applied_.count(s)) return;  // dedup by seq
  applied_.insert(s);
  while (applied_.count(applied_floor_ + 1)) {
    applied_.erase(applied_floor_ + 1);
    ++applied_floor_;
  }
  std::vector<Value> key;
  for (int k : spec_.key_attrs()) key.push_back(e.values.at(static_cast<std::size_t>(k)));
  fold_row(key, e, /*guard_latest=*/true);
}

void InterpState::apply_expansion(std::span<const Event> events) {
  const Schema exp = spec_.expansion_schema();
  // expansion events use the expansion schema: keys first, then the single
  // aggregated attribute; remap into input positions before folding
  for (const auto& ev : events) {
    Event mapped;
    mapped.values.assign(spec_.input_schema().arity(), Value{std::int64_t{0}});
    std::size_t pos = 0;
    std::vector<Value> key;
    for (int k : spec_.key_attrs()) {
      mapped.values[static_cast<std::size_t>(k)] = ev.values.at(pos);
      key.push_back(ev.values.at(pos));
      ++pos;
    }
    for (; pos < ev.values.size(); ++pos) {
      int src = spec_.input_schema().index_of(exp.at(pos).name);
      mapped.values[static_cast<std::size_t>(src)] = ev.values.at(pos);
    }
    fold_row(key, mapped, /*guard_latest=*/false);
  }
}

void InterpState::set_floor(std::uint64_t floor) {
  if (floor <= applied_floor_) return;
  applied_floor_ = floor;
  applied_.erase(applied_.begin(), applied_.upper_bound(floor));
}

std::vector<Event> InterpState::expand() const {
  if (!spec_.expandable()) {
    throw Error(errc::not_expandable,
                "aggregate set is outside the expandable families");
  }
  const auto& aggs = spec_.aggregates();
  bool latest_family = false;
  for (const auto& a : aggs) {
    if (a.kind == AggKind::Latest) latest_family = true;
  }
  int attr = -1;
  for (const auto& a : aggs) {
    if (a.kind != AggKind::Count) attr = a.attr;
  }
  AttrType at = attr >= 0 ? spec_.input_schema().at(static_cast<std::size_t>(attr)).type
                          : AttrType::Int64;

  std::vector<Event> out;
  for (const auto& [key, row] : rows_) {
    auto emit = [&](const Value& v) {
      Event e;
      e.values = key;
      e.values.push_back(v);
      e.origin = "expand";
      out.push_back(std::move(e));
    };
    if (latest_family) {
      // min, max, latest with consecutive duplicates removed
      std::vector<Value> seq;
      for (AggKind k : {AggKind::Min, AggKind::Max, AggKind::Latest}) {
        for (std::size_t i = 0; i < aggs.size(); ++i) {
          if (aggs[i].kind == k) {
            if (seq.empty() || compare_values(seq.back(), row.aggs[i]) != 0) {
              seq.push_back(row.aggs[i]);
            }
          }
        }
      }
      for (const auto& v : seq) emit(v);
    } else {
      std::int64_t count = 0;
      Value sum;
      for (std::size_t i = 0; i < aggs.size(); ++i) {
        if (aggs[i].kind == AggKind::Count) count = std::get<std::int64_t>(row.aggs[i]);
        if (aggs[i].kind == AggKind::Sum) sum = row.aggs[i];
      }
      Value zero = at == AttrType::Int64 ? Value{std::int64_t{0}} : Value{0.0};
      for (std::int64_t i = 1; i < count; ++i) emit(zero);
      emit(sum);
    }
  }
  return out;
}

nlohmann::json InterpState::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, row] : rows_) {
    nlohmann::json jkey = nlohmann::json::array();
    for (const auto& v : key) jkey.push_back(value_to_json(v));
    nlohmann::json jaggs = nlohmann::json::array();
    for (const auto& v : row.aggs) jaggs.push_back(value_to_json(v));
    rows.push_back({{"key", jkey}, {"aggs", jaggs}, {"last_seq", row.last_seq}});
  }
  return {{"spec", spec_.render()}, {"floor", applied_floor_}, {"rows", rows}};
}

InterpState InterpState::from_json(const nlohmann::json& j, const InterpSpec& spec) {
  InterpState st(spec);
  const Schema input = spec.input_schema();
  for (const auto& jrow : j.at("rows")) {
    std::vector<Value> key;
    const auto& jkey = jrow.at("key");
    for (std::size_t i = 0; i < spec.key_attrs().size(); ++i) {
      AttrType t = input.at(static_cast<std::size_t>(spec.key_attrs()[i])).type;
      key.push_back(value_from_json(jkey.at(i), t));
    }
    InterpRow row;
    const auto& jaggs = jrow.at("aggs");
    for (std::size_t i = 0; i < spec.aggregates().size(); ++i) {
      row.aggs.push_back(value_from_json(jaggs.at(i), agg_type(spec.aggregates()[i], input)));
    }
    row.last_seq = jrow.at("last_seq").get<std::uint64_t>();
    st.rows_.emplace(std::move(key), std::move(row));
  }
  st.applied_floor_ = j.at("floor").get<std::uint64_t>();
  return st;
}

InterpState init_state(const InterpSpec& spec) { return InterpState(spec); }

InterpState interpret_history(const InterpSpec& spec, std::span<const Event> h) {
  InterpState st(spec);
  for (const auto& e : h) st.apply(e);
  return st;
}

bool states_equal(const InterpState& a, const InterpState& b) {
  if (!(a.spec() == b.spec())) {
    throw Error(errc::spec_mismatch, "states built from different specs");
  }
  const auto& ra = a.rows();
  const auto& rb = b.rows();
  if (ra.size() != rb.size()) return false;
  auto ita = ra.begin();
  auto itb = rb.begin();
  for (; ita != ra.end(); ++ita, ++itb) {
    if (ita->first != itb->first) return false;
    if (ita->second.aggs != itb->second.aggs) return false;
  }
  return true;
}

std::vector<Event> expand_state(const InterpState& st) { return st.expand(); }

std::vector<Event> compress_history(const InterpSpec& spec,
                                    std::span<const Event> h) {
  return expand_state(interpret_history(spec, h));
}

std::vector<Event> sequence_events(std::vector<Event> events) {
  std::uint64_t seq = 0;
  for (auto& e : events) e.seq = ++seq;
  return events;
}

}  // namespace gryphon
