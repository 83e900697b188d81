#include "fwchoice/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fwchoice/errors.hpp"
#include "fwchoice/logistic.hpp"

namespace fwc {

namespace {

// independent generator streams derived from one seed
enum class Stream : std::uint32_t { Graph = 1, RootTimes = 2, Cascade = 3, Instances = 4 };

std::mt19937_64 substream(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool bernoulli(std::mt19937_64& rng, double p) { return uniform01(rng) < p; }

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0,1], got " + std::to_string(p));
  }
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
}

FollowGraph uniform_graph(const SynthConfig& cfg) {
  auto rng = substream(cfg.seed, Stream::Graph);
  std::vector<std::pair<UserId, UserId>> edges;
  const std::uint64_t n = cfg.n_users;
  const std::uint64_t pairs = n * (n - 1);
  if (cfg.edge_prob <= 0.0 || pairs == 0) return FollowGraph{};
  // walk the n(n-1) ordered pairs, skipping geometric gaps between successes
  std::geometric_distribution<std::uint64_t> gap(std::min(cfg.edge_prob, 1.0));
  for (std::uint64_t k = gap(rng); k < pairs; k += 1 + gap(rng)) {
    const UserId a = k / (n - 1);
    UserId b = k % (n - 1);
    if (b >= a) ++b;
    edges.emplace_back(a, b);
  }
  return FollowGraph::from_edges(edges);
}

FollowGraph preferential_graph(const SynthConfig& cfg) {
  auto rng = substream(cfg.seed, Stream::Graph);
  std::vector<std::pair<UserId, UserId>> edges;
  // each user sits in the urn once, plus once per follower gained
  std::vector<UserId> urn;
  urn.reserve(cfg.n_users * (cfg.out_degree + 1));
  std::vector<UserId> picked;
  for (UserId u = 0; u < cfg.n_users; ++u) {
    const std::size_t want = std::min<std::size_t>(cfg.out_degree, u);
    picked.clear();
    while (picked.size() < want) {
      const UserId v = urn[rng() % urn.size()];
      if (std::find(picked.begin(), picked.end(), v) == picked.end()) picked.push_back(v);
    }
    std::size_t follow_backs = 0;
    for (UserId v : picked) {
      edges.emplace_back(u, v);
      urn.push_back(v);
      if (bernoulli(rng, cfg.reciprocity)) {
        edges.emplace_back(v, u);
        ++follow_backs;
      }
    }
    urn.insert(urn.end(), follow_backs + 1, u);
  }
  return FollowGraph::from_edges(edges);
}

struct Scheduled {
  Timestamp time;
  std::uint64_t seq;
  UserId user;
  EventId parent;
  std::uint64_t token;

  bool operator>(const Scheduled& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

struct UserState {
  std::size_t exposures = 0;
  std::size_t first = 0;  // index into cascade events
  std::uint64_t token = 0;
  bool posted = false;
};

constexpr EventId kEventStride = EventId{1} << 24;

class CascadeSimulator {
 public:
  CascadeSimulator(const FollowGraph& g, const SynthConfig& cfg, const HistoryIndex& history)
      : g_(g), cfg_(cfg), history_(history) {}

  Cascade run(MessageId message_id, UserId root_user, Timestamp root_time, std::mt19937_64& rng) {
    Cascade c;
    c.message_id = message_id;
    c.has_url = bernoulli(rng, cfg_.p_url);
    c.is_hot_event = bernoulli(rng, cfg_.p_hot);

    std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>> queue;
    std::unordered_map<UserId, UserState> users;
    std::uint64_t seq = 0;
    queue.push({root_time, seq++, root_user, -1, 0});

    const std::size_t cap = std::min<std::size_t>(cfg_.max_cascade_size, kEventStride - 1);
    std::vector<std::size_t> batch;
    while (!queue.empty() && c.events.size() < cap) {
      // emit every post of the current second before anyone reacts to it
      const Timestamp now = queue.top().time;
      batch.clear();
      while (!queue.empty() && queue.top().time == now && c.events.size() < cap) {
        const Scheduled s = queue.top();
        queue.pop();
        UserState& st = users[s.user];
        if (st.posted || st.token != s.token) continue;
        st.posted = true;
        ForwardEvent e;
        e.event_id = message_id * kEventStride + static_cast<EventId>(c.events.size());
        e.user = s.user;
        e.time = s.time;
        if (s.parent >= 0) e.parent = s.parent;
        batch.push_back(c.events.size());
        c.events.push_back(e);
      }
      for (std::size_t idx : batch) expose_followers(c, idx, users, queue, seq, rng);
    }
    return c;
  }

 private:
  Timestamp delay(std::mt19937_64& rng) const {
    const double hours = -std::log1p(-uniform01(rng)) / cfg_.delay_rate;
    return std::max<Timestamp>(1, static_cast<Timestamp>(std::ceil(hours * 3600.0)));
  }

  void expose_followers(const Cascade& c, std::size_t idx, std::unordered_map<UserId, UserState>& users,
                        std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>>& queue,
                        std::uint64_t& seq, std::mt19937_64& rng) {
    const ForwardEvent& e = c.events[idx];
    for (UserId f : g_.followers(e.user)) {
      UserState& st = users[f];
      if (st.posted) continue;
      ++st.exposures;
      if (st.exposures == 1) {
        st.first = idx;
        if (bernoulli(rng, cfg_.forward_prob)) {
          queue.push({e.time + delay(rng), seq++, f, e.event_id, st.token});
        }
      } else if (st.exposures == 2) {
        ++st.token;  // a second exposure replaces any pending forward decision
        if (bernoulli(rng, cfg_.forward_prob)) {
          const ForwardEvent& bob = c.events[st.first];
          const FeatureVector x = compute_features(c, g_, history_, f, bob, e, cfg_.tz_offset);
          double eta = cfg_.planted_beta[0];
          for (int k = 0; k < kNumFeatures; ++k) eta += cfg_.planted_beta[k + 1] * x(k);
          const EventId parent = bernoulli(rng, sigmoid(eta)) ? e.event_id : bob.event_id;
          queue.push({e.time + delay(rng), seq++, f, parent, st.token});
        }
      }
    }
  }

  const FollowGraph& g_;
  const SynthConfig& cfg_;
  const HistoryIndex& history_;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void SynthConfig::validate() const {
  check_probability(edge_prob, "edge_prob");
  check_probability(reciprocity, "reciprocity");
  check_probability(forward_prob, "forward_prob");
  check_probability(p_url, "p_url");
  check_probability(p_hot, "p_hot");
  check_probability(p_binary, "p_binary");
  check_positive(delay_rate, "delay_rate");
  check_positive(gap_mean_hours, "gap_mean_hours");
  check_positive(mean_gap_mean_hours, "mean_gap_mean_hours");
  if (time_span <= 0) throw ConfigError("time_span must be > 0");
  if (max_cascade_size < 1) throw ConfigError("max_cascade_size must be >= 1");
  for (double b : planted_beta) {
    if (!std::isfinite(b)) throw ConfigError("planted_beta entries must be finite");
  }
}

SynthConfig read_synth_config(std::istream& in, const std::string& source_name, SynthConfig base) {
  SynthConfig cfg = base;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source_name, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }

    std::istringstream v(value);
    const auto number = [&](auto& field) {
      if (!(v >> field) || !(v >> std::ws).eof()) {
        throw ParseError(source_name, lineno, "bad value for '" + key + "'");
      }
    };
    if (key == "seed") number(cfg.seed);
    else if (key == "n_users") number(cfg.n_users);
    else if (key == "edge_prob") number(cfg.edge_prob);
    else if (key == "out_degree") number(cfg.out_degree);
    else if (key == "reciprocity") number(cfg.reciprocity);
    else if (key == "n_cascades") number(cfg.n_cascades);
    else if (key == "forward_prob") number(cfg.forward_prob);
    else if (key == "delay_rate") number(cfg.delay_rate);
    else if (key == "max_cascade_size") number(cfg.max_cascade_size);
    else if (key == "start_time") number(cfg.start_time);
    else if (key == "time_span") number(cfg.time_span);
    else if (key == "tz_offset") number(cfg.tz_offset);
    else if (key == "p_url") number(cfg.p_url);
    else if (key == "p_hot") number(cfg.p_hot);
    else if (key == "p_binary") number(cfg.p_binary);
    else if (key == "gap_mean_hours") number(cfg.gap_mean_hours);
    else if (key == "mean_gap_mean_hours") number(cfg.mean_gap_mean_hours);
    else if (key == "graph_model") {
      if (value == "uniform") cfg.graph_model = GraphModel::Uniform;
      else if (value == "pa" || value == "preferential") cfg.graph_model = GraphModel::PreferentialAttachment;
      else throw ParseError(source_name, lineno, "graph_model must be uniform or pa");
    } else if (key == "planted_beta") {
      if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
        throw ParseError(source_name, lineno, "planted_beta must be [b0, b1, ..., b16]");
      }
      std::string body = value.substr(1, value.size() - 2);
      std::replace(body.begin(), body.end(), ',', ' ');
      std::istringstream items(body);
      std::size_t i = 0;
      double b = 0;
      while (items >> b) {
        if (i > kNumFeatures) break;
        cfg.planted_beta[i++] = b;
      }
      if (i != kNumFeatures + 1 || !(items >> std::ws).eof()) {
        throw ParseError(source_name, lineno, "planted_beta needs exactly 17 numbers");
      }
    } else {
      throw ParseError(source_name, lineno, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path, SynthConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synth config: " + path.string());
  return read_synth_config(in, path.string(), base);
}

FollowGraph generate_graph(const SynthConfig& cfg) {
  cfg.validate();
  return cfg.graph_model == GraphModel::Uniform ? uniform_graph(cfg) : preferential_graph(cfg);
}

std::vector<Cascade> simulate_cascades(const FollowGraph& g, const SynthConfig& cfg) {
  cfg.validate();
  if (g.user_count() == 0) throw ContractError("cannot simulate cascades on an empty graph");

  auto roots = substream(cfg.seed, Stream::RootTimes);
  struct Seed {
    Timestamp time;
    UserId user;
  };
  std::vector<Seed> seeds(cfg.n_cascades);
  for (auto& s : seeds) {
    s.time = cfg.start_time + static_cast<Timestamp>(roots() % static_cast<std::uint64_t>(cfg.time_span));
    s.user = g.users()[roots() % g.users().size()];
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const Seed& a, const Seed& b) { return a.time < b.time; });

  // sequential in root-time order so the planted rule sees the same
  // interaction history that featurization will later rebuild
  std::vector<Cascade> out;
  out.reserve(seeds.size());
  HistoryIndex history;
  std::size_t indexed = 0;
  CascadeSimulator sim(g, cfg, history);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    while (indexed < out.size() && out[indexed].root_time() < seeds[i].time) {
      history.add(out[indexed++]);
    }
    auto rng = substream(cfg.seed, Stream::Cascade, i);
    out.push_back(sim.run(static_cast<MessageId>(i + 1), seeds[i].user, seeds[i].time, rng));
  }
  return out;
}

Dataset sample_instances(const SynthConfig& cfg, std::size_t n) {
  cfg.validate();
  if (n < 1) throw ContractError("sample_instances needs n >= 1");
  auto rng = substream(cfg.seed, Stream::Instances);
  const auto exponential = [&](double mean) { return -std::log1p(-uniform01(rng)) * mean; };

  Dataset data;
  const auto rows = static_cast<Eigen::Index>(n);
  data.x.resize(rows, kNumFeatures);
  data.y.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double eta = cfg.planted_beta[0];
    for (int k = 1; k <= kNumFeatures; ++k) {
      double v = 0.0;
      if (k == 3) {
        v = static_cast<double>(rng() % 5);
      } else if (k == 12) {
        v = exponential(cfg.gap_mean_hours);
      } else if (k == 13) {
        v = exponential(cfg.mean_gap_mean_hours);
      } else {
        v = bernoulli(rng, cfg.p_binary) ? 1.0 : 0.0;
      }
      data.x(i, k - 1) = v;
      eta += cfg.planted_beta[k] * v;
    }
    data.y(i) = bernoulli(rng, sigmoid(eta)) ? 1.0 : 0.0;
  }
  return data;
}

}  // namespace fwc
