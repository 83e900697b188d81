#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fwchoice/exposure.hpp"
#include "fwchoice/features.hpp"
#include "fwchoice/model.hpp"

namespace fwc {

/// Confusion counts and metrics for the positive class (label 1: forwards Jim).
/// A metric whose denominator is zero is std::nullopt.
struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t n = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double threshold = 0.5;
  std::vector<int> features;
};

/// 2PR / (P + R); nullopt when P + R == 0.
std::optional<double> f1_score(double precision, double recall);

/// Metrics from counts.
EvalReport report_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Scores `predictions` (0/1) against `labels`.
EvalReport score_predictions(const Eigen::Ref<const Eigen::VectorXd>& labels,
                             const Eigen::Ref<const Eigen::VectorXd>& predictions);

/// Throws ContractError on an empty test set.
EvalReport evaluate(const ChoiceModel& m, const Dataset& test, double threshold = 0.5);

/// "undefined" for nullopt, otherwise fixed with `digits` decimals.
std::string format_metric(const std::optional<double>& v, int digits = 3);

/// train: root_time < boundary; test: the rest. Order within each side is preserved.
std::pair<std::vector<ChoiceInstance>, std::vector<ChoiceInstance>> temporal_split(
    std::span<const ChoiceInstance> instances, Timestamp boundary);

struct AblationRow {
  std::string method;
  EvalReport report;
  /// Row added for context (baselines), not a trained model.
  bool baseline = false;
};

struct AblationConfig {
  FitConfig fit;
  double threshold = 0.5;
  /// Worker cap for the independent fits; 0 or 1 runs them serially.
  unsigned threads = 1;
  bool include_baselines = true;
  std::uint64_t seed = 0;
};

/// Full model, then one retrained model per excluded group in the order
/// Content, Structural, Temporal, History; then majority-class and coin-flip
/// baselines when enabled.
std::vector<AblationRow> run_ablation(const Dataset& train, const Dataset& test,
                                      const Grouping& grouping, const AblationConfig& config = {});

/// Columns Method, Precision, Recall, F1, N.
void write_report_tsv(std::span<const AblationRow> rows, std::ostream& out);
void write_report_table(std::span<const AblationRow> rows, std::ostream& out);

}  // namespace fwc
