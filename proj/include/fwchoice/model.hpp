#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fwchoice/features.hpp"

namespace fwc {

/// z-scoring of one continuous feature.
struct FeatureScaling {
  int feature = 0;  // 1-based id
  double mean = 0.0;
  double std = 1.0;
  /// Training column had zero variance; std was forced to 1.
  bool zero_variance = false;

  friend bool operator==(const FeatureScaling&, const FeatureScaling&) = default;
};

/// Features that are z-scored inside the model: the two time gaps.
inline const std::vector<int>& continuous_features() {
  static const std::vector<int> ids = {12, 13};
  return ids;
}

/// Logistic choice model over a subset of the 16 features.
///
/// `beta(j)` multiplies feature `feature_ids[j]`; continuous features are
/// z-scored with `scaling` before the dot product.
struct ChoiceModel {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  std::vector<int> feature_ids;
  std::vector<FeatureScaling> scaling;
  Grouping grouping = Grouping::table();

  /// Picks and scales the model's columns from n x 16 raw features.
  Eigen::MatrixXd design(const Eigen::Ref<const Eigen::MatrixXd>& raw) const;

  /// Coefficients on unscaled features: [intercept, w_1..w_16], zero for unused features.
  Eigen::VectorXd raw_coefficients() const;

  /// Model with every coefficient zero over all 16 features.
  static ChoiceModel zeros();
};

/// P(label = 1 | x): Allen forwards the later exposure. `x` must have 16 entries.
double predict_proba(const ChoiceModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

/// 1 iff predict_proba >= threshold.
int classify(const ChoiceModel& m, const Eigen::Ref<const Eigen::VectorXd>& x,
             double threshold = 0.5);

/// Probabilities for every row of an n x 16 feature matrix.
Eigen::VectorXd predict_proba_rows(const ChoiceModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x);

double log_likelihood(const ChoiceModel& m, const Dataset& data);

struct FitConfig {
  double l2 = 0.0;
  double tol = 1e-8;
  std::size_t max_iter = 500;
  /// Relative-change stopping also needs the mean-gradient inf-norm below this.
  double grad_tol = 1e-4;
  /// 1-based ids of the features to train on.
  std::vector<int> features = all_features();
  Grouping grouping = Grouping::table();

  static std::vector<int> all_features();
};

struct TrainReport {
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Infinity norm of the gradient of the per-sample objective at exit.
  double gradient_norm = 0.0;
  /// Bound met by gradient_norm whenever converged is true.
  double gradient_tolerance = 0.0;
  /// Per-sample penalized objective after each accepted step (and at start).
  std::vector<double> objective_trace;
};

/// Maximum-likelihood fit by gradient ascent with Armijo backtracking.
///
/// Throws ContractError for empty data, DataError for non-finite features or
/// labels outside {0,1}, NonIdentifiableError for single-class data or
/// diverging weights when l2 == 0.
std::pair<ChoiceModel, TrainReport> fit(const Dataset& data, const FitConfig& config = {});

std::string model_to_json(const ChoiceModel& m);
ChoiceModel model_from_json(const std::string& text);
void save_model(const ChoiceModel& m, const std::filesystem::path& path);
ChoiceModel load_model(const std::filesystem::path& path);

}  // namespace fwc
