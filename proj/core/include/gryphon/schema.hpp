#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gryphon/value.hpp"

namespace gryphon {

struct Attribute {
  std::string name;
  AttrType type;
  bool operator==(const Attribute&) const = default;
};

// Ordered, typed attribute list. Order is significant: events are positional
// tuples.
class Schema {
 public:
  Schema() = default;
  Schema(std::string name, std::vector<Attribute> attributes);

  // Grammar: name(attr:type, ...)
  static Schema parse(std::string_view text);

  const std::string& name() const { return name_; }
  std::size_t arity() const { return attributes_.size(); }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  const Attribute& at(std::size_t i) const { return attributes_[i]; }

  // -1 when absent.
  int index_of(std::string_view attr) const;

  std::string render() const;

  bool operator==(const Schema&) const = default;

 private:
  std::string name_;
  std::vector<Attribute> attributes_;
};

struct Event {
  std::vector<Value> values;
  std::optional<std::uint64_t> seq;
  std::string origin;
};

// Checks arity and per-position types; returns an Event with seq unset.
Event validate_event(const Schema& s, std::vector<Value> values,
                     std::string origin = "");

}  // namespace gryphon
