#include "gryphon/frame.hpp"

#include "gryphon/error.hpp"

namespace gryphon::frame {

bool known_type(const std::string& type) {
  static const char* kinds[] = {kConnect, kPublish, kSubscribe, kUnsubscribe,
                                kEvent, kAck, kNack, kSnapshot, kMetaRequest,
                                kMetaConfirm, kStats, kError};
  for (const char* k : kinds) {
    if (type == k) return true;
  }
  return false;
}

std::string encode(const nlohmann::json& payload) {
  std::string body = payload.dump();
  if (body.size() > kMaxPayload) {
    throw Error(errc::frame_too_large,
                "payload of " + std::to_string(body.size()) + " bytes exceeds 1 MiB");
  }
  std::string out;
  out.reserve(body.size() + 4);
  std::uint32_t n = static_cast<std::uint32_t>(body.size());
  out += static_cast<char>((n >> 24) & 0xff);
  out += static_cast<char>((n >> 16) & 0xff);
  out += static_cast<char>((n >> 8) & 0xff);
  out += static_cast<char>(n & 0xff);
  out += body;
  return out;
}

void Reader::feed(const char* data, std::size_t n) {
  if (off_ > 0 && off_ == buf_.size()) {
    buf_.clear();
    off_ = 0;
  }
  buf_.append(data, n);
}

std::optional<nlohmann::json> Reader::next() {
  if (buf_.size() - off_ < 4) return std::nullopt;
  auto b = [&](std::size_t i) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[off_ + i]));
  };
  std::uint32_t len = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
  if (len > kMaxPayload) {
    throw Error(errc::frame_too_large, "declared frame length exceeds 1 MiB");
  }
  if (buf_.size() - off_ - 4 < len) return std::nullopt;
  std::string body = buf_.substr(off_ + 4, len);
  off_ += 4 + len;
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("type")) {
    throw Error(errc::corrupt_log, "frame payload is not a typed JSON object");
  }
  return j;
}

LogImage decode_log(const std::string& bytes) {
  LogImage img;
  Reader r;
  r.feed(bytes);
  for (;;) {
    std::optional<nlohmann::json> f;
    try {
      f = r.next();
    } catch (const Error&) {
      // a malformed complete frame anywhere is corruption, not a torn tail
      throw Error(errc::corrupt_log, "corrupted non-trailing log frame");
    }
    if (!f) break;
    img.frames.push_back(std::move(*f));
  }
  img.torn_bytes = r.pending_bytes();
  return img;
}

}  // namespace gryphon::frame
