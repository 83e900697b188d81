#include "fwchoice/cascade.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "fwchoice/errors.hpp"

namespace fwc {

using nlohmann::json;

const ForwardEvent* Cascade::find_event(EventId id) const {
  for (const auto& e : events) {
    if (e.event_id == id) return &e;
  }
  return nullptr;
}

const ForwardEvent* Cascade::find_user_event(UserId user) const {
  for (const auto& e : events) {
    if (e.user == user) return &e;
  }
  return nullptr;
}

std::size_t popularity_at(const Cascade& c, Timestamp t) {
  // events are time-sorted, so stop at the first event at or after t
  std::size_t n = 0;
  for (const auto& e : c.events) {
    if (e.time >= t) break;
    if (!e.is_root()) ++n;
  }
  return n;
}

std::string canonicalize_cascade(Cascade& c, std::size_t* repeats_dropped) {
  if (c.events.empty()) return "no events";

  std::unordered_set<EventId> ids;
  for (const auto& e : c.events) {
    if (!ids.insert(e.event_id).second) return "duplicate event id " + std::to_string(e.event_id);
  }

  std::sort(c.events.begin(), c.events.end(), event_before);

  std::unordered_set<UserId> seen_users;
  std::unordered_set<EventId> dropped;
  std::vector<ForwardEvent> kept;
  kept.reserve(c.events.size());
  for (const auto& e : c.events) {
    if (seen_users.insert(e.user).second) {
      kept.push_back(e);
    } else {
      dropped.insert(e.event_id);
    }
  }

  std::size_t roots = 0;
  for (const auto& e : kept) roots += e.is_root() ? 1 : 0;
  if (roots == 0) return "no root";
  if (roots > 1) return "multiple roots";

  std::unordered_map<EventId, std::size_t> position;
  for (std::size_t i = 0; i < kept.size(); ++i) position.emplace(kept[i].event_id, i);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& e = kept[i];
    if (e.is_root()) continue;
    auto it = position.find(*e.parent);
    if (it == position.end()) {
      if (dropped.count(*e.parent)) {
        return "duplicate user: event " + std::to_string(e.event_id) +
               " forwards a repeat post";
      }
      return "dangling parent: event " + std::to_string(e.event_id) + " cites " +
             std::to_string(*e.parent);
    }
    if (it->second >= i) {
      return "parent after child: event " + std::to_string(e.event_id);
    }
  }

  if (repeats_dropped) *repeats_dropped += dropped.size();
  c.events = std::move(kept);
  return {};
}

namespace {

template <typename T>
T require_integer(const json& obj, const char* key, const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) {
    throw ParseError(source, line, std::string("field '") + key + "' must be an integer");
  }
  if constexpr (std::is_unsigned_v<T>) {
    if (it->is_number_unsigned()) return it->get<T>();
    if (it->get<std::int64_t>() < 0) {
      throw ParseError(source, line, std::string("field '") + key + "' must be non-negative");
    }
  }
  return it->get<T>();
}

bool require_flag(const json& obj, const char* key, const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, std::string("missing field '") + key + "'");
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_number_integer()) {
    const auto v = it->get<std::int64_t>();
    if (v == 0 || v == 1) return v == 1;
  }
  throw ParseError(source, line, std::string("field '") + key + "' must be 0 or 1");
}

Cascade parse_cascade(const json& obj, const std::string& source, std::size_t line) {
  if (!obj.is_object()) throw ParseError(source, line, "expected a JSON object");
  Cascade c;
  c.message_id = require_integer<MessageId>(obj, "message_id", source, line);
  c.has_url = require_flag(obj, "has_url", source, line);
  c.is_hot_event = require_flag(obj, "is_hot_event", source, line);
  auto events = obj.find("events");
  if (events == obj.end() || !events->is_array()) {
    throw ParseError(source, line, "field 'events' must be an array");
  }
  c.events.reserve(events->size());
  for (const auto& ev : *events) {
    if (!ev.is_object()) throw ParseError(source, line, "event must be a JSON object");
    ForwardEvent e;
    e.event_id = require_integer<EventId>(ev, "event_id", source, line);
    e.user = require_integer<UserId>(ev, "user_id", source, line);
    e.time = require_integer<Timestamp>(ev, "time", source, line);
    auto parent = ev.find("parent_event_id");
    if (parent == ev.end()) throw ParseError(source, line, "missing field 'parent_event_id'");
    if (!parent->is_null()) {
      if (!parent->is_number_integer()) {
        throw ParseError(source, line, "field 'parent_event_id' must be an integer or null");
      }
      e.parent = parent->get<EventId>();
    }
    c.events.push_back(e);
  }
  return c;
}

}  // namespace

CascadeLoadResult read_cascades(std::istream& in, const std::string& source_name) {
  CascadeLoadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, lineno, std::string("malformed JSON: ") + e.what());
    }
    Cascade c = parse_cascade(obj, source_name, lineno);
    std::string reason = canonicalize_cascade(c, &result.repeat_forwards_dropped);
    if (!reason.empty()) {
      result.rejected.push_back({lineno, c.message_id, std::move(reason)});
      continue;
    }
    result.cascades.push_back(std::move(c));
  }
  if (in.bad()) throw IoError("read failed: " + source_name);
  return result;
}

CascadeLoadResult load_cascades(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cascades: " + path.string());
  return read_cascades(in, path.string());
}

std::string cascade_to_json_line(const Cascade& c) {
  json events = json::array();
  for (const auto& e : c.events) {
    json ev;
    ev["event_id"] = e.event_id;
    ev["user_id"] = e.user;
    ev["time"] = e.time;
    ev["parent_event_id"] = e.parent ? json(*e.parent) : json(nullptr);
    events.push_back(std::move(ev));
  }
  json obj;
  obj["message_id"] = c.message_id;
  obj["has_url"] = c.has_url ? 1 : 0;
  obj["is_hot_event"] = c.is_hot_event ? 1 : 0;
  obj["events"] = std::move(events);
  return obj.dump();
}

void write_cascades(const std::vector<Cascade>& cascades, std::ostream& out) {
  for (const auto& c : cascades) out << cascade_to_json_line(c) << '\n';
}

void save_cascades(const std::vector<Cascade>& cascades, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cascades: " + path.string());
  write_cascades(cascades, out);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace fwc
