#include "fwchoice/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fwchoice/errors.hpp"
#include "fwchoice/logistic.hpp"

namespace fwc {

namespace {

// |w| beyond this on standardized inputs means p is within 1e-13 of 0 or 1:
// the unpenalized likelihood has no finite maximizer.
constexpr double kDivergenceBound = 30.0;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

Eigen::VectorXd pack(const ChoiceModel& m) {
  Eigen::VectorXd theta(m.beta.size() + 1);
  theta(0) = m.beta0;
  theta.tail(m.beta.size()) = m.beta;
  return theta;
}

void check_features(const std::vector<int>& ids) {
  if (ids.empty()) throw ConfigError("feature subset is empty");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 1 || ids[i] > kNumFeatures) {
      throw ConfigError("feature id " + std::to_string(ids[i]) + " outside 1..16");
    }
    if (i > 0 && ids[i] <= ids[i - 1]) throw ConfigError("feature ids must be strictly ascending");
  }
}

}  // namespace

std::vector<int> FitConfig::all_features() {
  std::vector<int> ids(kNumFeatures);
  std::iota(ids.begin(), ids.end(), 1);
  return ids;
}

ChoiceModel ChoiceModel::zeros() {
  ChoiceModel m;
  m.feature_ids = FitConfig::all_features();
  m.beta = Eigen::VectorXd::Zero(kNumFeatures);
  for (int f : continuous_features()) m.scaling.push_back({f, 0.0, 1.0, false});
  return m;
}

Eigen::MatrixXd ChoiceModel::design(const Eigen::Ref<const Eigen::MatrixXd>& raw) const {
  if (raw.cols() != kNumFeatures) {
    throw ContractError("expected 16 feature columns, got " + std::to_string(raw.cols()));
  }
  if (static_cast<std::size_t>(beta.size()) != feature_ids.size()) {
    throw ContractError("model has " + std::to_string(beta.size()) + " weights for " +
                        std::to_string(feature_ids.size()) + " features");
  }
  Eigen::MatrixXd z(raw.rows(), static_cast<Eigen::Index>(feature_ids.size()));
  for (std::size_t j = 0; j < feature_ids.size(); ++j) {
    z.col(static_cast<Eigen::Index>(j)) = raw.col(feature_ids[j] - 1);
  }
  for (const auto& s : scaling) {
    auto it = std::find(feature_ids.begin(), feature_ids.end(), s.feature);
    if (it == feature_ids.end()) continue;
    auto col = z.col(it - feature_ids.begin());
    col = (col.array() - s.mean) / s.std;
  }
  return z;
}

Eigen::VectorXd ChoiceModel::raw_coefficients() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kNumFeatures + 1);
  out(0) = beta0;
  for (std::size_t j = 0; j < feature_ids.size(); ++j) {
    out(feature_ids[j]) = beta(static_cast<Eigen::Index>(j));
  }
  for (const auto& s : scaling) {
    if (std::find(feature_ids.begin(), feature_ids.end(), s.feature) == feature_ids.end()) continue;
    const double w = out(s.feature);
    out(s.feature) = w / s.std;
    out(0) -= w * s.mean / s.std;
  }
  return out;
}

double predict_proba(const ChoiceModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != kNumFeatures) {
    throw ContractError("feature vector has " + std::to_string(x.size()) + " entries, expected 16");
  }
  const Eigen::MatrixXd row = x.transpose();
  return sigmoid(linear_predictor(m.design(row), pack(m))(0));
}

Eigen::VectorXd predict_proba_rows(const ChoiceModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Eigen::VectorXd eta = linear_predictor(m.design(x), pack(m));
  return eta.unaryExpr([](double e) { return sigmoid(e); });
}

int classify(const ChoiceModel& m, const Eigen::Ref<const Eigen::VectorXd>& x, double threshold) {
  return predict_proba(m, x) >= threshold ? 1 : 0;
}

double log_likelihood(const ChoiceModel& m, const Dataset& data) {
  return log_likelihood(m.design(data.x), data.y, pack(m));
}

std::pair<ChoiceModel, TrainReport> fit(const Dataset& data, const FitConfig& config) {
  const Eigen::Index n = data.size();
  if (n < 1) throw ContractError("cannot fit on an empty dataset");
  if (data.x.cols() != kNumFeatures || data.y.size() != n) {
    throw ContractError("dataset must be n x 16 with n labels");
  }
  if (!data.x.allFinite()) throw DataError("features contain NaN or infinity");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.y(i) != 0.0 && data.y(i) != 1.0) throw DataError("labels must be 0 or 1");
  }
  if (config.l2 < 0.0 || !std::isfinite(config.l2)) throw ConfigError("l2 must be >= 0");
  if (!(config.tol > 0.0)) throw ConfigError("tol must be > 0");
  check_features(config.features);
  config.grouping.validate();

  const double positives = data.y.sum();
  if (config.l2 == 0.0 && (positives == 0.0 || positives == static_cast<double>(n))) {
    throw NonIdentifiableError("all labels are " + std::to_string(positives > 0 ? 1 : 0) +
                               "; the unregularized MLE does not exist");
  }

  ChoiceModel model;
  model.feature_ids = config.features;
  model.grouping = config.grouping;
  model.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.features.size()));
  for (int f : continuous_features()) {
    if (std::find(config.features.begin(), config.features.end(), f) == config.features.end()) {
      continue;
    }
    const auto col = data.x.col(f - 1).array();
    const double mean = col.mean();
    const double sd = std::sqrt((col - mean).square().mean());
    if (sd > 0.0) {
      model.scaling.push_back({f, mean, sd, false});
    } else {
      model.scaling.push_back({f, mean, 1.0, true});
    }
  }

  const Eigen::MatrixXd z = model.design(data.x);
  const Eigen::Index dim = z.cols() + 1;
  const double inv_n = 1.0 / static_cast<double>(n);

  // per-sample objective: (ln L - l2/2 |w|^2) / n, intercept unpenalized
  const auto objective = [&](const Eigen::VectorXd& theta) {
    const double penalty = 0.5 * config.l2 * theta.tail(dim - 1).squaredNorm();
    return (log_likelihood(z, data.y, theta) - penalty) * inv_n;
  };
  const auto gradient = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd g = log_likelihood_gradient(z, data.y, theta);
    g.tail(dim - 1) -= config.l2 * theta.tail(dim - 1);
    return Eigen::VectorXd(g * inv_n);
  };

  TrainReport report;
  report.gradient_tolerance = std::max(config.tol, config.grad_tol);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  double value = objective(theta);
  Eigen::VectorXd grad = gradient(theta);
  report.objective_trace.push_back(value);

  Eigen::VectorXd prev_theta;
  Eigen::VectorXd prev_grad;
  double step = 1.0;
  std::size_t iter = 0;
  for (; iter < config.max_iter; ++iter) {
    const double gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm < config.tol) {
      report.converged = true;
      break;
    }

    // Barzilai-Borwein trial step, then halve until the Armijo condition holds
    if (iter > 0) {
      const Eigen::VectorXd s = theta - prev_theta;
      const Eigen::VectorXd r = grad - prev_grad;
      const double curvature = -s.dot(r);
      step = curvature > 0.0 ? s.squaredNorm() / curvature : step * 2.0;
      step = std::clamp(step, 1e-12, 1e12);
    }
    const double slope = grad.squaredNorm();
    Eigen::VectorXd candidate;
    double candidate_value = 0.0;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      candidate = theta + step * grad;
      candidate_value = objective(candidate);
      if (std::isfinite(candidate_value) && candidate_value >= value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // no ascent possible at machine precision
      report.converged = gnorm <= report.gradient_tolerance;
      break;
    }

    prev_theta = std::move(theta);
    prev_grad = std::move(grad);
    theta = std::move(candidate);
    grad = gradient(theta);
    const double change = std::abs(candidate_value - value) / std::max(std::abs(value), 1e-300);
    value = candidate_value;
    report.objective_trace.push_back(value);

    if (config.l2 == 0.0 && theta.tail(dim - 1).lpNorm<Eigen::Infinity>() > kDivergenceBound) {
      throw NonIdentifiableError(
          "weights diverge (|w| > " + std::to_string(kDivergenceBound) +
          "): the data are separable; retry with l2 > 0");
    }
    if (change < config.tol && grad.lpNorm<Eigen::Infinity>() <= report.gradient_tolerance) {
      ++iter;
      report.converged = true;
      break;
    }
  }

  model.beta0 = theta(0);
  model.beta = theta.tail(dim - 1);
  report.iterations = iter;
  report.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  report.log_likelihood = log_likelihood(z, data.y, theta);
  return {std::move(model), std::move(report)};
}

std::string model_to_json(const ChoiceModel& m) {
  using nlohmann::json;
  json j;
  j["beta0"] = m.beta0;
  j["beta"] = std::vector<double>(m.beta.data(), m.beta.data() + m.beta.size());
  json names = json::array();
  for (int f : m.feature_ids) names.push_back("f" + std::to_string(f));
  j["feature_names"] = std::move(names);
  json scaler = json::object();
  for (const auto& s : m.scaling) {
    scaler[std::to_string(s.feature)] = {
        {"mean", s.mean}, {"std", s.std}, {"zero_variance", s.zero_variance}};
  }
  j["scaler"] = std::move(scaler);
  json grouping = json::object();
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    grouping[std::string(group_name(static_cast<FeatureGroup>(g)))] = m.grouping.members[g];
  }
  j["grouping"] = std::move(grouping);
  return j.dump(2);
}

ChoiceModel model_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("model", 1, std::string("malformed JSON: ") + e.what());
  }
  ChoiceModel m;
  try {
    m.beta0 = j.at("beta0").get<double>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    m.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    for (const auto& name : j.at("feature_names")) {
      const auto s = name.get<std::string>();
      if (s.size() < 2 || s[0] != 'f') throw ConfigError("bad feature name '" + s + "'");
      m.feature_ids.push_back(std::stoi(s.substr(1)));
    }
    for (const auto& [key, value] : j.at("scaler").items()) {
      FeatureScaling s;
      s.feature = std::stoi(key);
      s.mean = value.at("mean").get<double>();
      s.std = value.at("std").get<double>();
      s.zero_variance = value.value("zero_variance", false);
      if (!(s.std > 0.0)) throw ConfigError("scaler std must be > 0");
      m.scaling.push_back(s);
    }
    std::sort(m.scaling.begin(), m.scaling.end(),
              [](const auto& a, const auto& b) { return a.feature < b.feature; });
    if (j.contains("grouping")) {
      Grouping g;
      for (const auto& [name, ids] : j.at("grouping").items()) {
        g[parse_group_name(name)] = ids.get<std::vector<int>>();
      }
      g.validate();
      m.grouping = std::move(g);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid model file: ") + e.what());
  }
  check_features(m.feature_ids);
  if (static_cast<std::size_t>(m.beta.size()) != m.feature_ids.size()) {
    throw ConfigError("model file: beta and feature_names differ in length");
  }
  return m;
}

void save_model(const ChoiceModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model: " + path.string());
  out << model_to_json(m) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ChoiceModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace fwc
