#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fwc {

using UserId = std::uint64_t;

/// Counters reported by the edge-list loader.
struct EdgeLoadStats {
  std::size_t lines = 0;
  std::size_t edges = 0;
  std::size_t users = 0;
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

/// Static directed follow network. An edge (a, b) means "a follows b".
///
/// Adjacency lists are kept sorted so that follows() is a binary search and
/// two graphs built from the same edge multiset compare equal regardless of
/// input order. Immutable once built.
class FollowGraph {
 public:
  FollowGraph() = default;

  /// Builds from raw pairs; drops self-loops and duplicates.
  static FollowGraph from_edges(std::span<const std::pair<UserId, UserId>> edges,
                                EdgeLoadStats* stats = nullptr);

  bool follows(UserId follower, UserId followee) const;
  std::size_t in_degree(UserId user) const;
  std::size_t out_degree(UserId user) const;

  /// Users followed by `user`, ascending. Empty for unknown users.
  std::span<const UserId> followees(UserId user) const;
  /// Users following `user`, ascending. Empty for unknown users.
  std::span<const UserId> followers(UserId user) const;

  std::size_t edge_count() const { return edge_count_; }
  std::size_t user_count() const { return users_.size(); }

  /// Every user that appears in at least one edge, ascending.
  const std::vector<UserId>& users() const { return users_; }

  /// All edges as (follower, followee), sorted.
  std::vector<std::pair<UserId, UserId>> edges() const;

  friend bool operator==(const FollowGraph& a, const FollowGraph& b);

 private:
  std::unordered_map<UserId, std::vector<UserId>> out_;
  std::unordered_map<UserId, std::vector<UserId>> in_;
  std::vector<UserId> users_;
  std::size_t edge_count_ = 0;
};

/// Reads "follower<TAB>followee" lines ('#' comments and blank lines skipped;
/// any run of spaces/tabs separates the two ids).
FollowGraph load_edges(const std::filesystem::path& path, EdgeLoadStats* stats = nullptr);
FollowGraph read_edges(std::istream& in, const std::string& source_name,
                       EdgeLoadStats* stats = nullptr);

void write_edges(const FollowGraph& g, std::ostream& out);
void save_edges(const FollowGraph& g, const std::filesystem::path& path);

}  // namespace fwc
