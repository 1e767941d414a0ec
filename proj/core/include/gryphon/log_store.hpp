#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gryphon/frame.hpp"
#include "gryphon/schema.hpp"

namespace gryphon {

// Durable storage for one broker's space logs: consecutive EVENT frames per
// space, file name `<space>.log`. ack-after-sync: append() returns only once
// the record is durable.
class LogStore {
 public:
  virtual ~LogStore() = default;
  virtual void append(const std::string& space, const std::string& frame_bytes) = 0;
  virtual std::string read(const std::string& space) const = 0;
  virtual std::vector<std::string> spaces() const = 0;
  // Replaces the log image wholesale (used when truncating a torn tail).
  virtual void rewrite(const std::string& space, const std::string& bytes) = 0;
};

class FileLogStore : public LogStore {
 public:
  explicit FileLogStore(std::filesystem::path dir);
  void append(const std::string& space, const std::string& frame_bytes) override;
  std::string read(const std::string& space) const override;
  std::vector<std::string> spaces() const override;
  void rewrite(const std::string& space, const std::string& bytes) override;

 private:
  std::filesystem::path dir_;
  std::filesystem::path path_for(const std::string& space) const;
};

// In-memory store whose backing map outlives broker crash/restart cycles in
// the simulator; share one backing per simulated machine.
class MemLogStore : public LogStore {
 public:
  using Backing = std::map<std::string, std::string>;

  explicit MemLogStore(std::shared_ptr<Backing> backing)
      : backing_(std::move(backing)) {}

  void append(const std::string& space, const std::string& frame_bytes) override {
    (*backing_)[space] += frame_bytes;
  }
  std::string read(const std::string& space) const override {
    auto it = backing_->find(space);
    return it == backing_->end() ? std::string() : it->second;
  }
  std::vector<std::string> spaces() const override {
    std::vector<std::string> out;
    for (const auto& [k, v] : *backing_) out.push_back(k);
    return out;
  }
  void rewrite(const std::string& space, const std::string& bytes) override {
    (*backing_)[space] = bytes;
  }

 private:
  std::shared_ptr<Backing> backing_;
};

// Event <-> log frame encoding shared by the broker and replay.
std::string encode_event_record(const std::string& space, const Event& e);
Event decode_event_record(const nlohmann::json& f, const Schema& s);

// Restores the longest valid prefix of a space log: trailing torn bytes are
// truncated in the store; a corrupted non-trailing frame throws corrupt-log.
std::vector<Event> replay_log(LogStore& store, const std::string& space,
                              const Schema& schema);

}  // namespace gryphon
