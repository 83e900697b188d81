#include "fwchoice/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "fwchoice/errors.hpp"

namespace fwc {

namespace {

constexpr std::array<std::string_view, kNumGroups> kGroupNames = {"Content", "Structural",
                                                                  "Temporal", "History"};

std::vector<int> range_of(int lo, int hi) {
  std::vector<int> v(hi - lo + 1);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

}  // namespace

std::string_view group_name(FeatureGroup g) { return kGroupNames[static_cast<std::size_t>(g)]; }

FeatureGroup parse_group_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumGroups; ++i) {
    const auto& ref = kGroupNames[i];
    if (ref.size() == name.size() &&
        std::equal(ref.begin(), ref.end(), name.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) ==
                 std::tolower(static_cast<unsigned char>(b));
        })) {
      return static_cast<FeatureGroup>(i);
    }
  }
  throw ConfigError("unknown feature group '" + std::string(name) + "'");
}

Grouping Grouping::table() {
  Grouping g;
  g[FeatureGroup::Content] = {1, 2, 3};
  g[FeatureGroup::Structural] = range_of(4, 10);
  g[FeatureGroup::Temporal] = {11, 12, 13};
  g[FeatureGroup::History] = {14, 15, 16};
  return g;
}

Grouping Grouping::prose() {
  Grouping g;
  g[FeatureGroup::Content] = {1, 2, 3};
  g[FeatureGroup::Structural] = range_of(4, 11);
  g[FeatureGroup::Temporal] = {12, 13, 14};
  g[FeatureGroup::History] = {15, 16};
  return g;
}

Grouping Grouping::named(std::string_view name) {
  if (name == "table") return table();
  if (name == "prose") return prose();
  throw ConfigError("unknown grouping '" + std::string(name) + "' (expected table or prose)");
}

void Grouping::validate() const {
  std::array<int, kNumFeatures + 1> seen{};
  for (const auto& group : members) {
    for (int f : group) {
      if (f < 1 || f > kNumFeatures) {
        throw ConfigError("feature id " + std::to_string(f) + " outside 1..16");
      }
      if (seen[f]++) throw ConfigError("feature " + std::to_string(f) + " in more than one group");
    }
  }
  for (int f = 1; f <= kNumFeatures; ++f) {
    if (!seen[f]) throw ConfigError("feature " + std::to_string(f) + " not assigned to a group");
  }
}

std::vector<int> Grouping::features_without(FeatureGroup excluded) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < kNumGroups; ++i) {
    if (i == static_cast<std::size_t>(excluded)) continue;
    out.insert(out.end(), members[i].begin(), members[i].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int popularity_bucket(std::size_t popularity) {
  int bucket = 0;
  for (std::size_t bound = 10; bucket < 4 && popularity >= bound; bound *= 10) ++bucket;
  return bucket;
}

int local_hour(Timestamp t, double tz_offset_hours) {
  constexpr Timestamp kDay = 86400;
  const Timestamp local = t + static_cast<Timestamp>(std::llround(tz_offset_hours * 3600.0));
  const Timestamp sec_of_day = ((local % kDay) + kDay) % kDay;
  return static_cast<int>(sec_of_day / 3600);
}

void HistoryIndex::add(const Cascade& c) {
  std::unordered_map<EventId, UserId> author;
  author.reserve(c.events.size());
  for (const auto& e : c.events) author.emplace(e.event_id, e.user);
  for (const auto& e : c.events) {
    if (e.is_root()) continue;
    auto it = author.find(*e.parent);
    if (it != author.end()) pairs_.emplace(e.user, it->second);
  }
}

bool HistoryIndex::forwarded(UserId forwarder, UserId source) const {
  return pairs_.count({forwarder, source}) != 0;
}

HistoryIndex build_history_index(std::span<const Cascade> cascades, Timestamp before) {
  HistoryIndex index;
  for (const auto& c : cascades) {
    if (!c.events.empty() && c.root_time() < before) index.add(c);
  }
  return index;
}

FeatureVector compute_features(const Cascade& c, const FollowGraph& g, const HistoryIndex& history,
                               UserId allen, const ForwardEvent& bob, const ForwardEvent& jim,
                               double tz_offset_hours) {
  const auto bit = [](bool b) { return b ? 1.0 : 0.0; };
  const Timestamp t2 = jim.time;

  std::size_t upto_t2 = 0;
  for (const auto& e : c.events) {
    if (e.time > t2) break;
    ++upto_t2;
  }

  const auto deg_allen = g.in_degree(allen);
  const auto deg_bob = g.in_degree(bob.user);
  const auto deg_jim = g.in_degree(jim.user);

  FeatureVector x;
  x(0) = bit(c.has_url);
  x(1) = bit(c.is_hot_event);
  x(2) = popularity_bucket(popularity_at(c, t2));
  x(3) = bit(g.follows(bob.user, jim.user));
  x(4) = bit(g.follows(jim.user, bob.user));
  x(5) = bit(g.follows(bob.user, allen));
  x(6) = bit(g.follows(jim.user, allen));
  x(7) = bit(deg_jim > deg_bob);
  x(8) = bit(deg_jim > deg_allen);
  x(9) = bit(deg_bob > deg_allen);
  x(10) = bit(bob.is_root());
  x(11) = static_cast<double>(t2 - bob.time) / 3600.0;
  // mean of consecutive gaps telescopes to (last - first) / (count - 1)
  x(12) = upto_t2 >= 2 ? static_cast<double>(t2 - c.root_time()) / 3600.0 /
                             static_cast<double>(upto_t2 - 1)
                       : 0.0;
  const int hour = local_hour(c.root_time(), tz_offset_hours);
  x(13) = bit(hour >= 10 && hour < 22);
  x(14) = bit(history.forwarded(allen, bob.user));
  x(15) = bit(history.forwarded(allen, jim.user));
  return x;
}

FeatureVector featurize(const ChoiceInstance& inst, const FollowGraph& g, const Cascade& c,
                        const HistoryIndex& history, double tz_offset_hours) {
  const auto fail = [&](const std::string& why) {
    throw IntegrityError("instance (message " + std::to_string(inst.message_id) + ", user " +
                         std::to_string(inst.allen) + "): " + why);
  };
  if (inst.message_id != c.message_id) fail("cascade has a different message id");
  for (const ForwardEvent* e : {&inst.bob_event, &inst.jim_event, &inst.allen_event}) {
    const ForwardEvent* found = c.find_event(e->event_id);
    if (!found || !(*found == *e)) fail("event " + std::to_string(e->event_id) + " not in cascade");
  }
  if (inst.allen_event.user != inst.allen) fail("allen_event posted by another user");
  if (inst.bob_event.user == inst.jim_event.user || inst.allen == inst.bob_event.user ||
      inst.allen == inst.jim_event.user) {
    fail("Bob, Jim and Allen must be distinct users");
  }
  if (event_before(inst.jim_event, inst.bob_event)) fail("Jim's post precedes Bob's");
  if (!g.follows(inst.allen, inst.bob_event.user) || !g.follows(inst.allen, inst.jim_event.user)) {
    fail("allen does not follow both exposure sources");
  }
  return compute_features(c, g, history, inst.allen, inst.bob_event, inst.jim_event,
                          tz_offset_hours);
}

Dataset featurize_all(std::span<const ChoiceInstance> instances, const FollowGraph& g,
                      std::span<const Cascade> cascades, double tz_offset_hours) {
  std::unordered_map<MessageId, const Cascade*> by_id;
  for (const auto& c : cascades) by_id.emplace(c.message_id, &c);

  std::vector<const Cascade*> by_root;
  by_root.reserve(cascades.size());
  for (const auto& c : cascades) by_root.push_back(&c);
  std::stable_sort(by_root.begin(), by_root.end(), [](const Cascade* a, const Cascade* b) {
    return a->root_time() < b->root_time();
  });

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const Cascade*> owner(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto it = by_id.find(instances[i].message_id);
    if (it == by_id.end()) {
      throw IntegrityError("instance cites unknown message " +
                           std::to_string(instances[i].message_id));
    }
    owner[i] = it->second;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return owner[a]->root_time() < owner[b]->root_time();
  });

  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(instances.size()), kNumFeatures);
  data.y.resize(static_cast<Eigen::Index>(instances.size()));

  // sweep in root-time order, growing the index with strictly earlier cascades
  HistoryIndex history;
  std::size_t added = 0;
  for (std::size_t i : order) {
    const Timestamp root = owner[i]->root_time();
    while (added < by_root.size() && by_root[added]->root_time() < root) {
      history.add(*by_root[added++]);
    }
    const auto row = static_cast<Eigen::Index>(i);
    data.x.row(row) = featurize(instances[i], g, *owner[i], history, tz_offset_hours).transpose();
    data.y(row) = instances[i].label;
  }
  return data;
}

void write_features(const Dataset& data, std::ostream& out) {
  out << "label";
  for (int k = 1; k <= kNumFeatures; ++k) out << "\tf" << k;
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << static_cast<int>(data.y(i));
    for (Eigen::Index k = 0; k < kNumFeatures; ++k) {
      std::snprintf(buf, sizeof buf, "%.6f", data.x(i, k));
      out << '\t' << buf;
    }
    out << '\n';
  }
}

Dataset read_features(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("label", 0) != 0) {
    throw ParseError(source_name, 1, "missing 'label f1 ... f16' header");
  }
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    double label = 0;
    if (!(fields >> label) || (label != 0.0 && label != 1.0)) {
      throw ParseError(source_name, lineno, "label must be 0 or 1");
    }
    labels.push_back(label);
    for (int k = 0; k < kNumFeatures; ++k) {
      double v = 0;
      if (!(fields >> v)) throw ParseError(source_name, lineno, "expected 16 feature columns");
      values.push_back(v);
    }
    std::string extra;
    if (fields >> extra) throw ParseError(source_name, lineno, "too many columns");
  }

  Dataset data;
  const auto n = static_cast<Eigen::Index>(labels.size());
  data.x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, kNumFeatures, Eigen::RowMajor>>(
      values.data(), n, kNumFeatures);
  data.y = Eigen::Map<const Eigen::VectorXd>(labels.data(), n);
  return data;
}

}  // namespace fwc
