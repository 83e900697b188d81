#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "fwchoice/cascade.hpp"
#include "fwchoice/exposure.hpp"
#include "fwchoice/graph.hpp"

namespace fwc {

inline constexpr int kNumFeatures = 16;

/// Feature k (1-based, 1..16) lives at index k-1.
using FeatureVector = Eigen::Matrix<double, kNumFeatures, 1>;

/// Number of feature groups used for ablation.
inline constexpr std::size_t kNumGroups = 4;

enum class FeatureGroup { Content = 0, Structural = 1, Temporal = 2, History = 3 };

std::string_view group_name(FeatureGroup g);
/// Accepts "Content", "Structural", "Temporal", "History" (case-insensitive).
FeatureGroup parse_group_name(std::string_view name);

/// Disjoint assignment of features 1..16 to the four groups. A group may be empty.
struct Grouping {
  std::array<std::vector<int>, kNumGroups> members;

  const std::vector<int>& operator[](FeatureGroup g) const {
    return members[static_cast<std::size_t>(g)];
  }
  std::vector<int>& operator[](FeatureGroup g) { return members[static_cast<std::size_t>(g)]; }

  /// Content {1,2,3}, Structural {4..10}, Temporal {11,12,13}, History {14,15,16}.
  static Grouping table();
  /// Moves "Bob is the original poster" to Structural and "root posted in
  /// active hours" to Temporal.
  static Grouping prose();
  /// "table" or "prose".
  static Grouping named(std::string_view name);

  /// Throws ConfigError unless groups are disjoint and cover 1..16 exactly.
  void validate() const;

  /// All features not in group `excluded`, ascending.
  std::vector<int> features_without(FeatureGroup excluded) const;

  friend bool operator==(const Grouping&, const Grouping&) = default;
};

/// Popularity bucket: [0,10) [10,100) [100,1000) [1000,10000) [10000,inf) -> 0..4.
int popularity_bucket(std::size_t popularity);

/// Local hour of day of `t` under a UTC offset in hours.
int local_hour(Timestamp t, double tz_offset_hours);

/// (forwarder, source) pairs: `forwarder` once forwarded a post by `source`.
class HistoryIndex {
 public:
  HistoryIndex() = default;

  /// Records every parent link of `c`.
  void add(const Cascade& c);

  bool forwarded(UserId forwarder, UserId source) const;
  std::size_t size() const { return pairs_.size(); }

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<UserId, UserId>& p) const noexcept {
      return std::hash<UserId>{}(p.first * 0x9E3779B97F4A7C15ULL ^ p.second);
    }
  };
  std::unordered_set<std::pair<UserId, UserId>, PairHash> pairs_;
};

/// Index over the cascades whose root time is strictly before `before`.
HistoryIndex build_history_index(std::span<const Cascade> cascades, Timestamp before);

inline constexpr double kDefaultTzOffset = 8.0;

/// Features of `allen` choosing between `bob` and `jim` in `c`. Reads only
/// events of `c` up to jim.time, so it also works on a cascade that is still
/// being simulated.
FeatureVector compute_features(const Cascade& c, const FollowGraph& g, const HistoryIndex& history,
                               UserId allen, const ForwardEvent& bob, const ForwardEvent& jim,
                               double tz_offset_hours);

/// Feature vector of one instance. Throws IntegrityError when the instance
/// does not belong to `c` or its users do not follow each other as claimed.
FeatureVector featurize(const ChoiceInstance& inst, const FollowGraph& g, const Cascade& c,
                        const HistoryIndex& history, double tz_offset_hours = kDefaultTzOffset);

/// Labeled feature matrix: one row per instance.
struct Dataset {
  Eigen::MatrixXd x;  // n x 16
  Eigen::VectorXd y;  // n, entries 0 or 1

  Eigen::Index size() const { return x.rows(); }
};

/// Featurizes every instance, building each history index from the cascades
/// rooted strictly before the instance's own cascade. Rows follow `instances`.
Dataset featurize_all(std::span<const ChoiceInstance> instances, const FollowGraph& g,
                      std::span<const Cascade> cascades, double tz_offset_hours = kDefaultTzOffset);

/// Header "label f1 ... f16" (tab separated), values with 6 decimals.
void write_features(const Dataset& data, std::ostream& out);
Dataset read_features(std::istream& in, const std::string& source_name);

}  // namespace fwc
