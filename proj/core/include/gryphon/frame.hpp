#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gryphon {

// Wire unit: 4-byte big-endian payload length, then a UTF-8 JSON object with
// a `type` field. Payloads over 1 MiB are rejected; an unknown type draws an
// ERROR reply but keeps the connection open.
namespace frame {

inline constexpr std::size_t kMaxPayload = 1 << 20;

inline constexpr const char* kConnect = "CONNECT";
inline constexpr const char* kPublish = "PUBLISH";
inline constexpr const char* kSubscribe = "SUBSCRIBE";
inline constexpr const char* kUnsubscribe = "UNSUBSCRIBE";
inline constexpr const char* kEvent = "EVENT";
inline constexpr const char* kAck = "ACK";
inline constexpr const char* kNack = "NACK";
inline constexpr const char* kSnapshot = "SNAPSHOT";
inline constexpr const char* kMetaRequest = "META_REQUEST";
inline constexpr const char* kMetaConfirm = "META_CONFIRM";
inline constexpr const char* kStats = "STATS";
inline constexpr const char* kError = "ERROR";

bool known_type(const std::string& type);

// Throws frame-too-large.
std::string encode(const nlohmann::json& payload);

// Incremental decoder over a byte stream; feed() then drain ready frames.
class Reader {
 public:
  void feed(const char* data, std::size_t n);
  void feed(const std::string& bytes) { feed(bytes.data(), bytes.size()); }

  // Next complete frame, or nullopt when more bytes are needed.
  // Throws corrupt-log / frame-too-large on malformed input.
  std::optional<nlohmann::json> next();

  // Bytes held back that do not form a complete frame (torn tail).
  std::size_t pending_bytes() const { return buf_.size() - off_; }

 private:
  std::string buf_;
  std::size_t off_ = 0;
};

// Parses a whole log image into frames. A trailing partial frame is
// tolerated and reported via torn_bytes; a malformed frame before the tail
// throws corrupt-log.
struct LogImage {
  std::vector<nlohmann::json> frames;
  std::size_t torn_bytes = 0;
};
LogImage decode_log(const std::string& bytes);

}  // namespace frame

}  // namespace gryphon
