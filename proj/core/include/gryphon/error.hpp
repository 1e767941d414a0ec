#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gryphon {

// Every validation or evaluation failure carries a stable machine-readable
// code next to the human message. CLI exit codes and tests key off the code.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

namespace errc {
inline constexpr const char* parse = "parse-error";
inline constexpr const char* duplicate_attribute = "duplicate-attribute";
inline constexpr const char* unknown_type = "unknown-type";
inline constexpr const char* empty_attributes = "empty-attributes";
inline constexpr const char* arity_mismatch = "arity-mismatch";
inline constexpr const char* type_mismatch = "type-mismatch";
inline constexpr const char* unknown_attribute = "unknown-attribute";
inline constexpr const char* division_by_zero = "division-by-zero";
inline constexpr const char* missing_seq = "missing-seq";
inline constexpr const char* cycle = "cycle";
inline constexpr const char* schema_mismatch = "schema-mismatch";
inline constexpr const char* kind_mismatch = "kind-mismatch";
inline constexpr const char* dangling_reference = "dangling-reference";
inline constexpr const char* links_not_tree = "links-not-tree";
inline constexpr const char* duplicate_name = "duplicate-name";
inline constexpr const char* unknown_key = "unknown-key";
inline constexpr const char* duplicate_sub = "duplicate-sub";
inline constexpr const char* unknown_sub = "unknown-sub";
inline constexpr const char* not_expandable = "not-expandable";
inline constexpr const char* spec_mismatch = "spec-mismatch";
inline constexpr const char* not_hosted = "not-hosted";
inline constexpr const char* not_applicable = "not-applicable";
inline constexpr const char* corrupt_log = "corrupt-log";
inline constexpr const char* frame_too_large = "frame-too-large";
}  // namespace errc

}  // namespace gryphon
