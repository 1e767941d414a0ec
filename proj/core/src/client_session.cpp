#include "gryphon/client_session.hpp"

#include <algorithm>

#include "gryphon/error.hpp"
#include "gryphon/frame.hpp"

namespace gryphon {

ClientSession::ClientSession(std::string id, ClientPort& port,
                             std::uint64_t gap_timeout)
    : id_(std::move(id)), port_(port), gap_timeout_(gap_timeout) {}

void ClientSession::subscribe(const std::string& space, const std::string& mode,
                              const Schema& schema,
                              const std::string& predicate_text,
                              const std::string& spec_text) {
  if (subs_.count(space)) {
    throw Error(errc::duplicate_sub, id_ + " already subscribes to " + space);
  }
  Sub s;
  s.sub_id = id_ + "#" + std::to_string(next_sub_++);
  s.space = space;
  s.mode = mode;
  s.predicate_text = predicate_text;
  s.spec_text = spec_text;
  s.schema = schema;
  if (!predicate_text.empty()) {
    s.predicate = Predicate::parse(predicate_text, schema);
  }
  if (!spec_text.empty()) {
    s.spec = InterpSpec::parse(spec_text, schema);
    s.state = InterpState(*s.spec);
  } else if (mode != "ordered") {
    throw Error(errc::spec_mismatch, mode + " subscription needs an interpretation spec");
  }
  auto [it, ok] = subs_.emplace(space, std::move(s));
  send_subscribe(it->second);
}

void ClientSession::unsubscribe(const std::string& space) {
  auto it = subs_.find(space);
  if (it == subs_.end()) throw Error(errc::unknown_sub, "not subscribed to " + space);
  port_.send({{"type", frame::kUnsubscribe},
              {"client", id_},
              {"sub_id", it->second.sub_id},
              {"space", space}});
  subs_.erase(it);
}

void ClientSession::send_subscribe(const Sub& s) {
  std::uint64_t cursor = s.mode == "ordered" ? s.cursor : s.floor;
  port_.send({{"type", frame::kSubscribe},
              {"client", id_},
              {"sub_id", s.sub_id},
              {"space", s.space},
              {"mode", s.mode},
              {"predicate", s.predicate_text},
              {"spec", s.spec_text},
              {"cursor", cursor},
              {"epoch", generation_}});
}

void ClientSession::resubscribe() {
  ++generation_;
  for (auto& [space, s] : subs_) {
    s.buffer.clear();
    s.timer_pending = false;
    s.awaiting_snapshot = false;
    s.gap_checks = 0;
    send_subscribe(s);
  }
}

std::vector<Event> ClientSession::delivered_events(const std::string& space) const {
  auto it = subs_.find(space);
  std::vector<Event> out;
  if (it == subs_.end()) return out;
  const Schema& schema = it->second.schema;
  for (const auto& r : delivered_) {
    if (r.value("kind", "") != "event" || r.at("space") != space) continue;
    std::vector<Value> values;
    for (std::size_t i = 0; i < schema.arity(); ++i) {
      values.push_back(value_from_json(r.at("values").at(i), schema.at(i).type));
    }
    Event e = validate_event(schema, std::move(values), r.value("origin", ""));
    e.seq = r.at("seq").get<std::uint64_t>();
    out.push_back(std::move(e));
  }
  return out;
}

const InterpState* ClientSession::state(const std::string& space) const {
  auto it = subs_.find(space);
  if (it == subs_.end() || !it->second.spec) return nullptr;
  return &it->second.state;
}

std::uint64_t ClientSession::cursor(const std::string& space) const {
  auto it = subs_.find(space);
  return it == subs_.end() ? 0 : it->second.cursor;
}

bool ClientSession::settled() const {
  for (const auto& [space, s] : subs_) {
    if (!s.buffer.empty() || s.awaiting_snapshot) return false;
    if (s.mode != "ordered" && has_gap(s)) return false;
  }
  return true;
}

void ClientSession::on_frame(const nlohmann::json& f) {
  std::string type = f.at("type").get<std::string>();
  if (type == frame::kEvent) {
    auto it = subs_.find(f.at("space").get<std::string>());
    if (it == subs_.end()) return;  // late frame after unsubscribe
    Sub& s = it->second;
    std::vector<Value> values;
    for (std::size_t i = 0; i < s.schema.arity(); ++i) {
      values.push_back(value_from_json(f.at("values").at(i), s.schema.at(i).type));
    }
    Event e = validate_event(s.schema, std::move(values), f.value("origin", ""));
    e.seq = f.at("seq").get<std::uint64_t>();
    handle_event(s, e);
  } else if (type == frame::kSnapshot) {
    auto it = subs_.find(f.at("space").get<std::string>());
    if (it != subs_.end()) handle_snapshot(it->second, f);
  }
  // ACK / ERROR / STATS are informational for a subscriber session
}

void ClientSession::deliver(Sub& s, const Event& e) {
  if (s.predicate && !s.predicate->eval(e)) return;
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : e.values) values.push_back(value_to_json(v));
  nlohmann::json record{{"kind", "event"},
                        {"client", id_},
                        {"space", s.space},
                        {"seq", *e.seq},
                        {"values", values},
                        {"origin", e.origin}};
  delivered_.push_back(record);
  port_.on_deliver(id_, record);
}

void ClientSession::handle_event(Sub& s, const Event& e) {
  std::uint64_t seq = *e.seq;
  if (s.mode == "ordered") {
    if (seq <= s.cursor || s.buffer.count(seq)) return;  // duplicate
    s.buffer.emplace(seq, e);
    while (!s.buffer.empty() && s.buffer.begin()->first == s.cursor + 1) {
      deliver(s, s.buffer.begin()->second);
      s.cursor = s.buffer.begin()->first;
      s.buffer.erase(s.buffer.begin());
    }
    if (s.buffer.empty()) {
      s.gap_checks = 0;
    } else if (s.buffer.size() > kBufferBound) {
      // overflow: reset the session and resume from the cursor
      s.buffer.clear();
      s.timer_pending = false;
      send_subscribe(s);
    } else {
      arm_timer(s);
    }
    return;
  }
  // optimistic / snapshot: apply immediately, seq-guarded
  if (seq <= s.floor || s.applied.count(seq)) return;
  s.state.apply(e);
  s.applied.insert(seq);
  s.high = std::max(s.high, seq);
  deliver(s, e);
  if (has_gap(s)) arm_timer(s);
}

void ClientSession::handle_snapshot(Sub& s, const nlohmann::json& f) {
  std::uint64_t floor = f.at("floor").get<std::uint64_t>();
  std::size_t n = 0;
  if (f.contains("state") && !f.at("state").is_null()) {
    if (!s.spec) return;
    s.state = InterpState::from_json(f.at("state"), *s.spec);
  } else if (f.contains("events")) {
    if (!s.spec) return;
    Schema es = s.spec->expansion_schema();
    std::vector<Event> delta;
    for (const auto& je : f.at("events")) {
      std::vector<Value> values;
      for (std::size_t i = 0; i < es.arity(); ++i) {
        values.push_back(value_from_json(je.at(i), es.at(i).type));
      }
      delta.push_back(validate_event(es, std::move(values)));
    }
    n = delta.size();
    s.state.apply_expansion(delta);
  }
  s.state.set_floor(floor);
  s.floor = std::max(s.floor, floor);
  s.high = std::max(s.high, floor);
  std::erase_if(s.applied, [&](std::uint64_t q) { return q <= s.floor; });
  s.awaiting_snapshot = false;
  s.gap_checks = 0;
  nlohmann::json record{{"kind", "snapshot"},
                        {"client", id_},
                        {"space", s.space},
                        {"floor", floor},
                        {"events", n}};
  delivered_.push_back(record);
  port_.on_deliver(id_, record);
  if (has_gap(s)) arm_timer(s);
}

bool ClientSession::has_gap(const Sub& s) const {
  if (s.mode == "ordered") return !s.buffer.empty();
  return s.applied.size() != s.high - s.floor;
}

std::pair<std::uint64_t, std::uint64_t> ClientSession::first_gap(const Sub& s) const {
  if (s.mode == "ordered") {
    return {s.cursor + 1, s.buffer.begin()->first - 1};
  }
  std::uint64_t from = 0;
  for (std::uint64_t q = s.floor + 1; q <= s.high; ++q) {
    if (s.applied.count(q)) {
      if (from) return {from, q - 1};
    } else if (!from) {
      from = q;
    }
  }
  return {from, s.high};
}

void ClientSession::arm_timer(Sub& s) {
  if (s.timer_pending) return;
  s.timer_pending = true;
  std::uint64_t token = next_timer_++;
  timer_space_[token] = s.space;
  port_.schedule_timer(gap_timeout_, token);
}

void ClientSession::request_snapshot(Sub& s) {
  s.awaiting_snapshot = true;
  port_.send({{"type", frame::kSnapshot},
              {"client", id_},
              {"space", s.space},
              {"spec", s.spec_text},
              {"cursor", s.floor}});
}

void ClientSession::on_timer(std::uint64_t token) {
  auto it = timer_space_.find(token);
  if (it == timer_space_.end()) return;
  std::string space = it->second;
  timer_space_.erase(it);
  auto st = subs_.find(space);
  if (st == subs_.end()) return;
  Sub& s = st->second;
  s.timer_pending = false;
  if (!has_gap(s)) {
    s.gap_checks = 0;
    return;
  }
  if (s.mode != "ordered" && s.gap_checks >= 2 && s.spec) {
    if (!s.awaiting_snapshot) request_snapshot(s);
    arm_timer(s);
    return;
  }
  auto [from, to] = first_gap(s);
  port_.send({{"type", frame::kNack},
              {"client", id_},
              {"space", s.space},
              {"from", from},
              {"to", to}});
  ++s.gap_checks;
  arm_timer(s);
}

}  // namespace gryphon
