#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fwchoice/graph.hpp"

namespace fwc {

using EventId = std::int64_t;
using MessageId = std::int64_t;
/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kTimeInfinity = std::numeric_limits<Timestamp>::max();

/// A post of one message: the original (no parent) or a forward of an earlier post.
struct ForwardEvent {
  EventId event_id = 0;
  UserId user = 0;
  Timestamp time = 0;
  std::optional<EventId> parent;

  bool is_root() const { return !parent.has_value(); }

  friend bool operator==(const ForwardEvent&, const ForwardEvent&) = default;
};

/// Canonical event order: (time, event_id).
inline bool event_before(const ForwardEvent& a, const ForwardEvent& b) {
  return a.time != b.time ? a.time < b.time : a.event_id < b.event_id;
}

/// One message and its forwarding trace. `events` is in canonical order and
/// events[0] is the original post.
struct Cascade {
  MessageId message_id = 0;
  bool has_url = false;
  bool is_hot_event = false;
  std::vector<ForwardEvent> events;

  const ForwardEvent& root() const { return events.front(); }
  Timestamp root_time() const { return events.front().time; }

  /// Event by id, or nullptr.
  const ForwardEvent* find_event(EventId id) const;
  /// The event posted by `user`, or nullptr. A user posts at most once.
  const ForwardEvent* find_user_event(UserId user) const;

  friend bool operator==(const Cascade&, const Cascade&) = default;
};

/// Forward events (parent present) with time strictly less than `t`.
std::size_t popularity_at(const Cascade& c, Timestamp t);

/// Canonicalizes and checks a cascade in place.
///
/// Repeat posts by the same user keep only the earliest one. Returns an empty
/// string on success, otherwise the rejection reason ("no events",
/// "multiple roots", "dangling parent", "duplicate event id", ...).
/// `repeats_dropped`, when given, is incremented per dropped repeat post.
std::string canonicalize_cascade(Cascade& c, std::size_t* repeats_dropped = nullptr);

struct RejectedCascade {
  std::size_t line = 0;
  MessageId message_id = 0;
  std::string reason;
};

struct CascadeLoadResult {
  std::vector<Cascade> cascades;
  std::vector<RejectedCascade> rejected;
  /// Later posts by a user already present in the same cascade, dropped.
  std::size_t repeat_forwards_dropped = 0;
};

/// Reads cascade JSONL. Malformed JSON or schema violations throw ParseError;
/// cascades violating structural invariants are skipped and listed in `rejected`.
CascadeLoadResult read_cascades(std::istream& in, const std::string& source_name);
CascadeLoadResult load_cascades(const std::filesystem::path& path);

/// One JSON object per line, events in canonical order.
void write_cascades(const std::vector<Cascade>& cascades, std::ostream& out);
void save_cascades(const std::vector<Cascade>& cascades, const std::filesystem::path& path);

std::string cascade_to_json_line(const Cascade& c);

}  // namespace fwc
