#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fwchoice/errors.hpp"
#include "fwchoice/exposure.hpp"
#include "fwchoice/synth.hpp"

using namespace fwc;

namespace {

SynthConfig small(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_users = 300;
  cfg.out_degree = 6;
  cfg.n_cascades = 40;
  cfg.forward_prob = 0.15;
  return cfg;
}

std::size_t max_in_degree(const FollowGraph& g) {
  std::size_t m = 0;
  for (UserId u : g.users()) m = std::max(m, g.in_degree(u));
  return m;
}

}  // namespace

TEST_CASE("zero edge probability gives no edges") {
  SynthConfig cfg;
  cfg.graph_model = GraphModel::Uniform;
  cfg.edge_prob = 0.0;
  CHECK(generate_graph(cfg).edge_count() == 0);
}

TEST_CASE("uniform graph density matches the edge probability") {
  SynthConfig cfg;
  cfg.graph_model = GraphModel::Uniform;
  cfg.n_users = 500;
  cfg.edge_prob = 0.02;
  const auto g = generate_graph(cfg);
  const double pairs = 500.0 * 499.0;
  const double mean = pairs * 0.02;
  const double sd = std::sqrt(pairs * 0.02 * 0.98);
  CHECK(std::abs(static_cast<double>(g.edge_count()) - mean) < 4 * sd);
  for (UserId u : g.users()) CHECK_FALSE(g.follows(u, u));
}

TEST_CASE("graphs are reproducible from the seed") {
  for (auto model : {GraphModel::Uniform, GraphModel::PreferentialAttachment}) {
    SynthConfig cfg;
    cfg.graph_model = model;
    cfg.n_users = 400;
    const auto a = generate_graph(cfg);
    CHECK(a == generate_graph(cfg));
    cfg.seed = 2;
    CHECK_FALSE(a == generate_graph(cfg));
  }
}

TEST_CASE("preferential attachment has a heavier in-degree tail than uniform") {
  SynthConfig pa;
  pa.n_users = 2000;
  pa.out_degree = 10;
  pa.reciprocity = 0.0;
  const auto gp = generate_graph(pa);

  SynthConfig un = pa;
  un.graph_model = GraphModel::Uniform;
  un.edge_prob = static_cast<double>(gp.edge_count()) / (2000.0 * 1999.0);
  const auto gu = generate_graph(un);

  CHECK(max_in_degree(gp) > 4 * max_in_degree(gu));
}

TEST_CASE("reciprocity adds follow-backs") {
  SynthConfig cfg;
  cfg.n_users = 1000;
  cfg.reciprocity = 0.0;
  const auto none = generate_graph(cfg);
  cfg.reciprocity = 0.5;
  const auto some = generate_graph(cfg);
  auto mutual = [](const FollowGraph& g) {
    std::size_t n = 0;
    for (const auto& [a, b] : g.edges()) n += g.follows(b, a) ? 1 : 0;
    return n;
  };
  CHECK(mutual(none) == 0);
  CHECK(mutual(some) > some.edge_count() / 10);
}

TEST_CASE("no forwarding leaves every cascade a lone post") {
  auto cfg = small(1);
  cfg.forward_prob = 0.0;
  const auto g = generate_graph(cfg);
  const auto cs = simulate_cascades(g, cfg);
  CHECK(cs.size() == cfg.n_cascades);
  for (const auto& c : cs) CHECK(c.events.size() == 1);
}

TEST_CASE("an empty graph is a contract violation") {
  CHECK_THROWS_AS(simulate_cascades(FollowGraph{}, small(1)), ContractError);
}

TEST_CASE("simulated cascades are valid and reproducible across 1000 seeds") {
  std::size_t total_events = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    auto cfg = small(seed);
    cfg.n_users = 60 + seed % 90;
    cfg.out_degree = 3 + seed % 5;
    cfg.n_cascades = 3 + seed % 6;
    cfg.graph_model = seed % 3 ? GraphModel::PreferentialAttachment : GraphModel::Uniform;
    cfg.edge_prob = 0.05;
    cfg.forward_prob = 0.05 + 0.3 * static_cast<double>(seed % 7) / 6.0;
    cfg.max_cascade_size = 50;
    const auto g = generate_graph(cfg);
    const auto cs = simulate_cascades(g, cfg);
    REQUIRE(cs.size() == cfg.n_cascades);

    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto& c = cs[i];
      CHECK(c.events.size() <= cfg.max_cascade_size);
      if (i > 0) CHECK(cs[i - 1].root_time() <= c.root_time());
      CHECK(c.root_time() >= cfg.start_time);
      CHECK(c.root_time() < cfg.start_time + cfg.time_span);
      Cascade copy = c;
      CHECK(canonicalize_cascade(copy) == "");
      CHECK(copy == c);
      for (const auto& e : c.events) {
        if (!e.parent) continue;
        const ForwardEvent* p = c.find_event(*e.parent);
        REQUIRE(p != nullptr);
        CHECK(g.follows(e.user, p->user));
        CHECK(e.time > p->time);
      }
      total_events += c.events.size();
    }

    if (seed % 100 == 0) {
      std::stringstream buf;
      write_cascades(cs, buf);
      const auto back = read_cascades(buf, "sim");
      CHECK(back.rejected.empty());
      CHECK(back.repeat_forwards_dropped == 0);
      CHECK(back.cascades == cs);
      CHECK(simulate_cascades(g, cfg) == cs);
    }
  }
  CHECK(total_events > 10000);
}

TEST_CASE("planted preference for the higher in-degree source shows up in the labels") {
  SynthConfig cfg;
  cfg.n_users = 2000;
  cfg.n_cascades = 400;
  cfg.forward_prob = 0.1;
  cfg.planted_beta[8] = 3.0;  // Jim has more followers than Bob
  const auto g = generate_graph(cfg);
  const auto cs = simulate_cascades(g, cfg);
  const auto ex = extract_instances(g, cs);
  REQUIRE(ex.instances.size() > 200);
  const auto d = featurize_all(ex.instances, g, cs, cfg.tz_offset);
  double pos[2] = {0, 0}, cnt[2] = {0, 0};
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const int bit = d.x(i, 7) > 0.5 ? 1 : 0;
    pos[bit] += d.y(i);
    cnt[bit] += 1;
  }
  REQUIRE(cnt[0] > 20);
  REQUIRE(cnt[1] > 20);
  CHECK(pos[1] / cnt[1] > 0.85);
  CHECK(pos[0] / cnt[0] < 0.6);
}

TEST_CASE("sampled instances with zero weights are balanced") {
  SynthConfig cfg;
  const auto d = sample_instances(cfg, 10000);
  const double rate = d.y.mean();
  CHECK(std::abs(rate - 0.5) < 3 * std::sqrt(0.25 / 10000));
  for (Eigen::Index i = 0; i < 200; ++i) {
    CHECK(d.x(i, 2) >= 0);
    CHECK(d.x(i, 2) <= 4);
    CHECK(d.x(i, 11) >= 0);
    CHECK((d.x(i, 0) == 0 || d.x(i, 0) == 1));
  }
}

TEST_CASE("sampled instances are byte-identical for the same seed") {
  SynthConfig cfg;
  cfg.planted_beta[5] = 1.0;
  std::ostringstream a, b, c;
  write_features(sample_instances(cfg, 500), a);
  write_features(sample_instances(cfg, 500), b);
  cfg.seed = 99;
  write_features(sample_instances(cfg, 500), c);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("config file parsing") {
  std::istringstream in(
      "# corpus\n"
      "seed = 7\n"
      "n_users=123\n"
      "graph_model = uniform\n"
      "forward_prob = 0.25\n"
      "planted_beta = [1, 0,0,0, 3,-3,2.5,-2.5,3,-3,2.5, 0,0,0, 0,0,0]\n");
  const auto cfg = read_synth_config(in, "cfg");
  CHECK(cfg.seed == 7);
  CHECK(cfg.n_users == 123);
  CHECK(cfg.graph_model == GraphModel::Uniform);
  CHECK(cfg.forward_prob == 0.25);
  CHECK(cfg.planted_beta[0] == 1.0);
  CHECK(cfg.planted_beta[7] == -2.5);
  CHECK(cfg.n_cascades == SynthConfig{}.n_cascades);

  auto fails = [](const std::string& text) {
    std::istringstream s(text);
    return read_synth_config(s, "bad");
  };
  CHECK_THROWS_AS(fails("colour = blue\n"), ParseError);
  CHECK_THROWS_AS(fails("seed 7\n"), ParseError);
  CHECK_THROWS_AS(fails("planted_beta = [1, 2]\n"), ParseError);
  CHECK_THROWS_AS(fails("graph_model = smallworld\n"), ParseError);
  CHECK_THROWS_AS(fails("forward_prob = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(fails("delay_rate = 0\n"), ConfigError);
}
