#include "fwchoice/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "fwchoice/errors.hpp"

namespace fwc {

namespace {

const std::vector<UserId> kNoUsers;

std::span<const UserId> lookup(const std::unordered_map<UserId, std::vector<UserId>>& adj,
                               UserId u) {
  auto it = adj.find(u);
  if (it == adj.end()) return {kNoUsers.data(), 0};
  return it->second;
}

bool parse_id(std::string_view token, UserId& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace

FollowGraph FollowGraph::from_edges(std::span<const std::pair<UserId, UserId>> edges,
                                    EdgeLoadStats* stats) {
  std::vector<std::pair<UserId, UserId>> kept;
  kept.reserve(edges.size());
  std::size_t self_loops = 0;
  for (const auto& e : edges) {
    if (e.first == e.second) {
      ++self_loops;
      continue;
    }
    kept.push_back(e);
  }
  std::sort(kept.begin(), kept.end());
  const auto before = kept.size();
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

  FollowGraph g;
  g.edge_count_ = kept.size();
  for (const auto& [a, b] : kept) {
    g.out_[a].push_back(b);  // already ascending in b for fixed a
    g.in_[b].push_back(a);
  }
  for (auto& [u, list] : g.in_) std::sort(list.begin(), list.end());

  g.users_.reserve(g.out_.size() + g.in_.size());
  for (const auto& [u, _] : g.out_) g.users_.push_back(u);
  for (const auto& [u, _] : g.in_) g.users_.push_back(u);
  std::sort(g.users_.begin(), g.users_.end());
  g.users_.erase(std::unique(g.users_.begin(), g.users_.end()), g.users_.end());

  if (stats) {
    stats->edges = g.edge_count_;
    stats->users = g.users_.size();
    stats->duplicates = before - kept.size();
    stats->self_loops = self_loops;
  }
  return g;
}

bool FollowGraph::follows(UserId follower, UserId followee) const {
  auto list = followees(follower);
  return std::binary_search(list.begin(), list.end(), followee);
}

std::size_t FollowGraph::in_degree(UserId user) const { return followers(user).size(); }
std::size_t FollowGraph::out_degree(UserId user) const { return followees(user).size(); }

std::span<const UserId> FollowGraph::followees(UserId user) const { return lookup(out_, user); }
std::span<const UserId> FollowGraph::followers(UserId user) const { return lookup(in_, user); }

std::vector<std::pair<UserId, UserId>> FollowGraph::edges() const {
  std::vector<std::pair<UserId, UserId>> out;
  out.reserve(edge_count_);
  for (UserId a : users_) {
    for (UserId b : followees(a)) out.emplace_back(a, b);
  }
  return out;
}

bool operator==(const FollowGraph& a, const FollowGraph& b) {
  return a.edge_count_ == b.edge_count_ && a.users_ == b.users_ && a.out_ == b.out_;
}

FollowGraph read_edges(std::istream& in, const std::string& source_name, EdgeLoadStats* stats) {
  std::vector<std::pair<UserId, UserId>> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::string_view rest(line);
    rest.remove_prefix(first);
    const auto sep = rest.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw ParseError(source_name, lineno, "expected two ids, found one");
    }
    std::string_view a = rest.substr(0, sep);
    rest.remove_prefix(sep);
    rest.remove_prefix(std::min(rest.find_first_not_of(" \t"), rest.size()));
    const auto end = rest.find_last_not_of(" \t");
    std::string_view b = end == std::string_view::npos ? rest.substr(0, 0) : rest.substr(0, end + 1);

    UserId follower = 0;
    UserId followee = 0;
    if (b.find_first_of(" \t") != std::string_view::npos) {
      throw ParseError(source_name, lineno, "expected exactly two ids");
    }
    if (!parse_id(a, follower) || !parse_id(b, followee)) {
      throw ParseError(source_name, lineno, "ids must be non-negative integers");
    }
    raw.emplace_back(follower, followee);
  }
  if (in.bad()) throw IoError("read failed: " + source_name);

  auto g = FollowGraph::from_edges(raw, stats);
  if (stats) stats->lines = lineno;
  return g;
}

FollowGraph load_edges(const std::filesystem::path& path, EdgeLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list: " + path.string());
  return read_edges(in, path.string(), stats);
}

void write_edges(const FollowGraph& g, std::ostream& out) {
  for (const auto& [a, b] : g.edges()) out << a << '\t' << b << '\n';
}

void save_edges(const FollowGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list: " + path.string());
  write_edges(g, out);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace fwc
