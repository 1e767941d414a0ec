#include "gryphon/log_store.hpp"
#include <algorithm>

#include <cstdio>
#include <fstream>

#include <unistd.h>

#include "gryphon/error.hpp"

namespace gryphon {

FileLogStore::FileLogStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path FileLogStore::path_for(const std::string& space) const {
  return dir_ / (space + ".log");
}

void FileLogStore::append(const std::string& space, const std::string& frame_bytes) {
  std::FILE* f = std::fopen(path_for(space).c_str(), "ab");
  if (!f) throw Error(errc::corrupt_log, "cannot open log for " + space);
  std::fwrite(frame_bytes.data(), 1, frame_bytes.size(), f);
  std::fflush(f);
  ::fsync(::fileno(f));
  std::fclose(f);
}

std::string FileLogStore::read(const std::string& space) const {
  std::ifstream in(path_for(space), std::ios::binary);
  if (!in) return {};
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::string> FileLogStore::spaces() const {
  std::vector<std::string> out;
  if (!std::filesystem::exists(dir_)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (e.path().extension() == ".log") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void FileLogStore::rewrite(const std::string& space, const std::string& bytes) {
  auto tmp = path_for(space);
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path_for(space));
}

std::string encode_event_record(const std::string& space, const Event& e) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : e.values) values.push_back(value_to_json(v));
  nlohmann::json j{{"type", frame::kEvent},
                   {"space", space},
                   {"seq", e.seq.value_or(0)},
                   {"values", values},
                   {"origin", e.origin}};
  return frame::encode(j);
}

Event decode_event_record(const nlohmann::json& f, const Schema& s) {
  std::vector<Value> values;
  const auto& jv = f.at("values");
  if (jv.size() != s.arity()) {
    throw Error(errc::arity_mismatch, "log record arity mismatch");
  }
  for (std::size_t i = 0; i < s.arity(); ++i) {
    values.push_back(value_from_json(jv.at(i), s.at(i).type));
  }
  Event e = validate_event(s, std::move(values), f.value("origin", ""));
  e.seq = f.at("seq").get<std::uint64_t>();
  return e;
}

std::vector<Event> replay_log(LogStore& store, const std::string& space,
                              const Schema& schema) {
  std::string bytes = store.read(space);
  frame::LogImage img = frame::decode_log(bytes);
  if (img.torn_bytes > 0) {
    store.rewrite(space, bytes.substr(0, bytes.size() - img.torn_bytes));
  }
  std::vector<Event> events;
  std::uint64_t expect = 1;
  for (const auto& f : img.frames) {
    if (f.at("type") != frame::kEvent || f.at("space") != space) {
      throw Error(errc::corrupt_log, "unexpected record in log for " + space);
    }
    Event e = decode_event_record(f, schema);
    if (e.seq != expect) {
      throw Error(errc::corrupt_log,
                  "log for " + space + " is not densely sequenced at " +
                      std::to_string(expect));
    }
    ++expect;
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace gryphon
