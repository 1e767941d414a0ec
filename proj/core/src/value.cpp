#include "gryphon/value.hpp"

#include <charconv>

#include "gryphon/error.hpp"

namespace gryphon {

AttrType value_type(const Value& v) {
  switch (v.index()) {
    case 0: return AttrType::Int64;
    case 1: return AttrType::Float64;
    case 2: return AttrType::String;
    default: return AttrType::Bool;
  }
}

std::string_view type_name(AttrType t) {
  switch (t) {
    case AttrType::Int64: return "int64";
    case AttrType::Float64: return "float64";
    case AttrType::String: return "string";
    case AttrType::Bool: return "bool";
  }
  return "?";
}

std::optional<AttrType> type_from_name(std::string_view name) {
  if (name == "int64") return AttrType::Int64;
  if (name == "float64") return AttrType::Float64;
  if (name == "string") return AttrType::String;
  if (name == "bool") return AttrType::Bool;
  return std::nullopt;
}

bool is_numeric(AttrType t) {
  return t == AttrType::Int64 || t == AttrType::Float64;
}

std::string render_value(const Value& v) {
  switch (v.index()) {
    case 0:
      return std::to_string(std::get<std::int64_t>(v));
    case 1: {
      double d = std::get<double>(v);
      char buf[32];
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
      std::string s(buf, p);
      // keep floats visibly floats so renders re-parse to the same type
      if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
          s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
        s += ".0";
      }
      return s;
    }
    case 2: {
      const auto& s = std::get<std::string>(v);
      std::string out = "\"";
      for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      out += '"';
      return out;
    }
    default:
      return std::get<bool>(v) ? "true" : "false";
  }
}

nlohmann::json value_to_json(const Value& v) {
  switch (v.index()) {
    case 0: return std::get<std::int64_t>(v);
    case 1: return std::get<double>(v);
    case 2: return std::get<std::string>(v);
    default: return std::get<bool>(v);
  }
}

Value value_from_json(const nlohmann::json& j, AttrType expected) {
  switch (expected) {
    case AttrType::Int64:
      if (j.is_number_integer()) return j.get<std::int64_t>();
      break;
    case AttrType::Float64:
      if (j.is_number()) return j.get<double>();
      break;
    case AttrType::String:
      if (j.is_string()) return j.get<std::string>();
      break;
    case AttrType::Bool:
      if (j.is_boolean()) return j.get<bool>();
      break;
  }
  throw Error(errc::type_mismatch,
              "value " + j.dump() + " is not " + std::string(type_name(expected)));
}

int compare_values(const Value& a, const Value& b) {
  AttrType ta = value_type(a), tb = value_type(b);
  if (is_numeric(ta) && is_numeric(tb)) {
    if (ta == AttrType::Int64 && tb == AttrType::Int64) {
      auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
      return x < y ? -1 : x > y ? 1 : 0;
    }
    double x = ta == AttrType::Int64
                   ? static_cast<double>(std::get<std::int64_t>(a))
                   : std::get<double>(a);
    double y = tb == AttrType::Int64
                   ? static_cast<double>(std::get<std::int64_t>(b))
                   : std::get<double>(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (ta != tb) {
    throw Error(errc::type_mismatch,
                "cannot compare " + std::string(type_name(ta)) + " with " +
                    std::string(type_name(tb)));
  }
  if (ta == AttrType::String) {
    int c = std::get<std::string>(a).compare(std::get<std::string>(b));
    return c < 0 ? -1 : c > 0 ? 1 : 0;
  }
  bool x = std::get<bool>(a), y = std::get<bool>(b);
  return x == y ? 0 : (!x ? -1 : 1);
}

}  // namespace gryphon
