#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace gryphon {

enum class AttrType { Int64, Float64, String, Bool };

// Attribute values. int64 is exact, float64 is IEEE double; mixed int/float
// arithmetic promotes to float64. Comparison between promoted values is exact
// IEEE comparison, no epsilon.
using Value = std::variant<std::int64_t, double, std::string, bool>;

AttrType value_type(const Value& v);
std::string_view type_name(AttrType t);
std::optional<AttrType> type_from_name(std::string_view name);
bool is_numeric(AttrType t);

// Canonical rendering: ints plain, doubles via shortest round-trip, strings
// double-quoted with backslash escapes, bools true/false.
std::string render_value(const Value& v);

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j, AttrType expected);

// Promoting comparison for numeric values; strings/bools compare only within
// their own type. Returns <0, 0, >0.
int compare_values(const Value& a, const Value& b);

}  // namespace gryphon
