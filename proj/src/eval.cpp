#include "fwchoice/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <future>
#include <iomanip>
#include <ostream>
#include <random>

#include "fwchoice/errors.hpp"

namespace fwc {

std::optional<double> f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return std::nullopt;
  return 2.0 * precision * recall / (precision + recall);
}

EvalReport report_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.n = tp + fp + fn + tn;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision && r.recall) r.f1 = f1_score(*r.precision, *r.recall);
  return r;
}

EvalReport score_predictions(const Eigen::Ref<const Eigen::VectorXd>& labels,
                             const Eigen::Ref<const Eigen::VectorXd>& predictions) {
  if (labels.size() != predictions.size()) {
    throw ContractError("labels and predictions differ in length");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const bool actual = labels(i) == 1.0;
    const bool predicted = predictions(i) == 1.0;
    if (predicted) {
      ++(actual ? tp : fp);
    } else {
      ++(actual ? fn : tn);
    }
  }
  return report_from_counts(tp, fp, fn, tn);
}

EvalReport evaluate(const ChoiceModel& m, const Dataset& test, double threshold) {
  if (test.size() == 0) throw ContractError("cannot evaluate on an empty test set");
  const Eigen::VectorXd p = predict_proba_rows(m, test.x);
  const Eigen::VectorXd predicted = (p.array() >= threshold).cast<double>();
  EvalReport r = score_predictions(test.y, predicted);
  r.threshold = threshold;
  r.features = m.feature_ids;
  return r;
}

std::string format_metric(const std::optional<double>& v, int digits) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

std::pair<std::vector<ChoiceInstance>, std::vector<ChoiceInstance>> temporal_split(
    std::span<const ChoiceInstance> instances, Timestamp boundary) {
  std::pair<std::vector<ChoiceInstance>, std::vector<ChoiceInstance>> out;
  for (const auto& inst : instances) {
    (inst.root_time < boundary ? out.first : out.second).push_back(inst);
  }
  return out;
}

namespace {

constexpr std::array<const char*, kNumGroups> kWithoutNames = {
    "Without Content Features", "Without Structural Features", "Without Temporal Features",
    "Without History Features"};

AblationRow constant_baseline(const Dataset& train, const Dataset& test) {
  const double positives = train.y.sum();
  const double majority = positives * 2.0 >= static_cast<double>(train.size()) ? 1.0 : 0.0;
  AblationRow row;
  row.method = "Baseline: Majority Class";
  row.baseline = true;
  row.report = score_predictions(test.y, Eigen::VectorXd::Constant(test.size(), majority));
  return row;
}

AblationRow coin_flip_baseline(const Dataset& test, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd predicted(test.size());
  for (Eigen::Index i = 0; i < test.size(); ++i) predicted(i) = static_cast<double>(rng() >> 63);
  AblationRow row;
  row.method = "Baseline: Coin Flip";
  row.baseline = true;
  row.report = score_predictions(test.y, predicted);
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const Dataset& train, const Dataset& test,
                                      const Grouping& grouping, const AblationConfig& config) {
  grouping.validate();
  if (test.size() == 0) throw ContractError("cannot evaluate on an empty test set");

  std::vector<std::pair<std::string, std::vector<int>>> plans;
  plans.emplace_back("Our Method", FitConfig::all_features());
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    plans.emplace_back(kWithoutNames[g], grouping.features_without(static_cast<FeatureGroup>(g)));
  }

  const auto run = [&](std::size_t i) {
    FitConfig fc = config.fit;
    fc.features = plans[i].second;
    fc.grouping = grouping;
    const auto [model, report] = fit(train, fc);
    AblationRow row;
    row.method = plans[i].first;
    row.report = evaluate(model, test, config.threshold);
    return row;
  };

  std::vector<AblationRow> rows(plans.size());
  const std::size_t workers = std::max<unsigned>(config.threads, 1);
  for (std::size_t start = 0; start < plans.size(); start += workers) {
    const std::size_t end = std::min(plans.size(), start + workers);
    if (workers == 1) {
      rows[start] = run(start);
      continue;
    }
    std::vector<std::future<AblationRow>> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, run, i));
    for (std::size_t i = start; i < end; ++i) rows[i] = batch[i - start].get();
  }

  if (config.include_baselines) {
    rows.push_back(constant_baseline(train, test));
    rows.push_back(coin_flip_baseline(test, config.seed));
  }
  for (auto& r : rows) r.report.threshold = config.threshold;
  return rows;
}

void write_report_tsv(std::span<const AblationRow> rows, std::ostream& out) {
  out << "Method\tPrecision\tRecall\tF1\tN\n";
  for (const auto& r : rows) {
    out << r.method << '\t' << format_metric(r.report.precision) << '\t'
        << format_metric(r.report.recall) << '\t' << format_metric(r.report.f1) << '\t'
        << r.report.n << '\n';
  }
}

void write_report_table(std::span<const AblationRow> rows, std::ostream& out) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  const auto rule = [&] { out << std::string(width + 2 + 4 * 12, '-') << '\n'; };
  out << std::left << std::setw(static_cast<int>(width + 2)) << "Method" << std::right
      << std::setw(12) << "Precision" << std::setw(12) << "Recall" << std::setw(12) << "F1"
      << std::setw(12) << "N" << '\n';
  rule();
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width + 2)) << r.method << std::right
        << std::setw(12) << format_metric(r.report.precision) << std::setw(12)
        << format_metric(r.report.recall) << std::setw(12) << format_metric(r.report.f1)
        << std::setw(12) << r.report.n << '\n';
  }
}

}  // namespace fwc
