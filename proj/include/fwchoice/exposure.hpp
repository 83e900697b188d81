#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fwchoice/cascade.hpp"
#include "fwchoice/graph.hpp"

namespace fwc {

/// The posts of `message_id` that reached `user` through followees, cut off
/// strictly before the user's own post.
struct ExposureRecord {
  UserId user = 0;
  MessageId message_id = 0;
  std::vector<ForwardEvent> exposures;
  std::optional<ForwardEvent> forwarded_at;
};

/// W(k): number of (user, message) pairs with exactly k exposures.
using ExposureDistribution = std::map<std::size_t, std::size_t>;

/// One record per user exposed at least once, ordered by user id.
std::vector<ExposureRecord> compute_exposures(const FollowGraph& g, const Cascade& c);

ExposureDistribution exposure_distribution(std::span<const ExposureRecord> records);

/// Accumulates W(k) over many cascades without keeping the records.
ExposureDistribution exposure_distribution(const FollowGraph& g, std::span<const Cascade> cascades);

/// "k<TAB>W(k)" lines in ascending k, preceded by a "k\tW(k)" header.
void write_exposure_distribution(const ExposureDistribution& dist, std::ostream& out);

/// A user exposed exactly twice who then forwarded one of the two exposures.
/// Label 1 means the later exposure (Jim) was forwarded, 0 the earlier (Bob).
struct ChoiceInstance {
  MessageId message_id = 0;
  Timestamp root_time = 0;
  UserId allen = 0;
  ForwardEvent bob_event;
  ForwardEvent jim_event;
  ForwardEvent allen_event;
  int label = 0;
  /// Bob and Jim posted in the same second; roles were assigned by event id.
  bool tied_times = false;

  friend bool operator==(const ChoiceInstance&, const ChoiceInstance&) = default;
};

struct ExtractionResult {
  std::vector<ChoiceInstance> instances;
  /// Two-exposure forwarders whose parent was neither exposure.
  std::size_t dropped_foreign_parent = 0;
  /// Forwarders with more than two exposures before their post.
  std::size_t skipped_many_exposures = 0;
};

/// Instances from one cascade, ordered by allen.
ExtractionResult extract_instances(const FollowGraph& g, const Cascade& c);
/// Instances from all cascades, ordered by (message_id, allen).
ExtractionResult extract_instances(const FollowGraph& g, std::span<const Cascade> cascades);

/// TSV with header: message_id allen bob_event_id jim_event_id allen_event_id label
void write_instances(std::span<const ChoiceInstance> instances, std::ostream& out);

/// Reads instance TSV and resolves event ids against `cascades`.
/// Throws IntegrityError for unknown messages or events.
std::vector<ChoiceInstance> read_instances(std::istream& in, const std::string& source_name,
                                           std::span<const Cascade> cascades);

}  // namespace fwc
