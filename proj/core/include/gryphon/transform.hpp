#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gryphon/expr.hpp"

namespace gryphon {

// Per-output-attribute bindings over an input schema. Output events conform
// to the output schema; seq is never carried over (destinations re-sequence),
// origin is.
class Transform {
 public:
  Transform() = default;

  // Grammar: out := expr (, out := expr)*  — every output attribute of
  // `output` must be bound exactly once.
  static Transform parse(std::string_view text, const Schema& input,
                         const Schema& output);
  static Transform identity(const Schema& s);
  static Transform of(Schema input, Schema output, std::vector<ExprPtr> bindings);

  Event apply(const Event& e) const;

  const Schema& input_schema() const { return input_; }
  const Schema& output_schema() const { return output_; }
  const std::vector<ExprPtr>& bindings() const { return bindings_; }

  std::string render() const;

 private:
  Schema input_;
  Schema output_;
  std::vector<ExprPtr> bindings_;  // positional, one per output attribute
};

}  // namespace gryphon
