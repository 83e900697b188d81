#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "fwchoice/cascade.hpp"
#include "fwchoice/features.hpp"
#include "fwchoice/graph.hpp"

namespace fwc {

enum class GraphModel { Uniform, PreferentialAttachment };

/// Parameters of the synthetic follow graph, cascades and instance sampler.
/// The seed fully determines every generated artifact.
struct SynthConfig {
  std::uint64_t seed = 1;

  std::size_t n_users = 1000;
  GraphModel graph_model = GraphModel::PreferentialAttachment;
  /// Uniform model: probability of each ordered pair (a follows b).
  double edge_prob = 0.01;
  /// Preferential attachment: followees chosen by each arriving user.
  std::size_t out_degree = 10;
  /// Preferential attachment: chance a followed user follows back.
  double reciprocity = 0.2;

  std::size_t n_cascades = 200;
  /// Chance a user forwards after its first, and again after its second, exposure.
  double forward_prob = 0.1;
  /// Exponential forwarding delay, events per hour.
  double delay_rate = 1.0;
  /// Cascades stop growing at this many events.
  std::size_t max_cascade_size = 2000;
  Timestamp start_time = 1309478400;  // 2011-07-01T00:00:00Z
  Timestamp time_span = 62 * 86400;
  double tz_offset = kDefaultTzOffset;

  double p_url = 0.3;
  double p_hot = 0.2;

  /// Planted choice rule: intercept then weights for features 1..16.
  std::array<double, kNumFeatures + 1> planted_beta{};

  /// Marginals used by sample_instances: every binary feature is 1 with this
  /// probability; the popularity bucket is uniform on 0..4; both gap features
  /// are exponential with the given mean in hours.
  double p_binary = 0.5;
  double gap_mean_hours = 1.0;
  double mean_gap_mean_hours = 1.0;

  /// Throws ConfigError for probabilities outside [0,1] or non-positive rates.
  void validate() const;
};

/// Reads "key = value" lines ('#' comments); arrays as "[a, b, ...]".
/// Keys are the SynthConfig field names; graph_model is "uniform" or "pa".
/// Unlisted fields keep the values already in `base`.
SynthConfig read_synth_config(std::istream& in, const std::string& source_name,
                              SynthConfig base = {});
SynthConfig load_synth_config(const std::filesystem::path& path, SynthConfig base = {});

FollowGraph generate_graph(const SynthConfig& cfg);

/// Simulates cascades over `g`. Users forward a post they were exposed to;
/// after a second exposure the parent is drawn from the planted logistic rule
/// on the 16 features of that (first, second) exposure pair. Requires a
/// non-empty graph.
std::vector<Cascade> simulate_cascades(const FollowGraph& g, const SynthConfig& cfg);

/// n i.i.d. labeled feature vectors with y ~ Bernoulli(sigmoid(planted_beta . [1, x])).
Dataset sample_instances(const SynthConfig& cfg, std::size_t n);

}  // namespace fwc
