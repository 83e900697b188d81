#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fwchoice/errors.hpp"
#include "fwchoice/logistic.hpp"
#include "fwchoice/model.hpp"

using namespace fwc;

namespace {

// Rows shaped like real features: binaries, a 0..4 bucket, two positive gaps.
Eigen::MatrixXd random_features(std::mt19937_64& rng, Eigen::Index n) {
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> bucket(0, 4);
  std::exponential_distribution<double> gap(1.0);
  Eigen::MatrixXd x(n, kNumFeatures);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < kNumFeatures; ++k) x(i, k) = coin(rng) ? 1.0 : 0.0;
    x(i, 2) = bucket(rng);
    x(i, 11) = gap(rng);
    x(i, 12) = gap(rng);
  }
  return x;
}

Dataset labeled(std::mt19937_64& rng, const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) {
  Dataset d{x, Eigen::VectorXd(x.rows())};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double eta = theta(0);
    for (int k = 0; k < kNumFeatures; ++k) eta += theta(k + 1) * x(i, k);
    d.y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return d;
}

// Plain-loop log-likelihood with the textbook formula.
double naive_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& theta) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double eta = theta(0);
    for (Eigen::Index k = 0; k < x.cols(); ++k) eta += theta(k + 1) * x(i, k);
    const double p = 1.0 / (1.0 + std::exp(-eta));
    total += y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p);
  }
  return total;
}

}  // namespace

TEST_CASE("zero model predicts one half") {
  const auto m = ChoiceModel::zeros();
  std::mt19937_64 rng(1);
  const auto x = random_features(rng, 20);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    CHECK(predict_proba(m, x.row(i).transpose()) == 0.5);
  }
}

TEST_CASE("hand-computed probability 1/(1+e)") {
  auto m = ChoiceModel::zeros();
  m.beta0 = 1.0;
  m.beta(0) = -2.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kNumFeatures);
  x(0) = 1.0;
  CHECK(predict_proba(m, x) == doctest::Approx(0.2689414213699951).epsilon(1e-15));
  x(0) = 0.0;
  CHECK(predict_proba(m, x) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
}

TEST_CASE("probability rises with the intercept and saturates without overflow") {
  auto m = ChoiceModel::zeros();
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(kNumFeatures);
  double prev = 0.0;
  for (double b : {-800.0, -30.0, -1.0, 0.0, 1.0, 30.0}) {
    m.beta0 = b;
    const double p = predict_proba(m, x);
    CHECK(p >= prev);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
  m.beta0 = 800.0;
  CHECK(predict_proba(m, x) == 1.0);
  CHECK(log1p_exp(800.0) == 800.0);
  CHECK(log1p_exp(-800.0) == doctest::Approx(0.0));
  CHECK(sigmoid(-800.0) >= 0.0);
}

TEST_CASE("wrong-length input is rejected") {
  const auto m = ChoiceModel::zeros();
  CHECK_THROWS_AS(predict_proba(m, Eigen::VectorXd::Zero(15)), ContractError);
}

TEST_CASE("p and 1-p sum to one") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> w(-3, 3);
  auto m = ChoiceModel::zeros();
  const auto x = random_features(rng, 50);
  for (int trial = 0; trial < 20; ++trial) {
    m.beta0 = w(rng);
    for (int k = 0; k < kNumFeatures; ++k) m.beta(k) = w(rng);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double p = predict_proba(m, x.row(i).transpose());
      CHECK(p + (1.0 - p) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("log-likelihood at zero weights is -n ln 2") {
  std::mt19937_64 rng(3);
  const auto x = random_features(rng, 37);
  Dataset d = labeled(rng, x, Eigen::VectorXd::Zero(kNumFeatures + 1));
  CHECK(log_likelihood(ChoiceModel::zeros(), d) == doctest::Approx(-37 * std::log(2.0)));
}

TEST_CASE("near-perfect fit has log-likelihood just below zero") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, kNumFeatures);
  x(2, 0) = x(3, 0) = 1.0;
  Dataset d{x, Eigen::Vector4d(0, 0, 1, 1)};
  auto m = ChoiceModel::zeros();
  m.beta0 = -20;
  m.beta(0) = 40;
  const double ll = log_likelihood(m, d);
  CHECK(ll < 0.0);
  CHECK(ll > -1e-7);
}

TEST_CASE("log-likelihood matches the naive formula") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_features(rng, 20);
    Eigen::VectorXd theta(kNumFeatures + 1);
    for (auto& t : theta) t = w(rng);
    const Dataset d = labeled(rng, x, Eigen::VectorXd::Zero(kNumFeatures + 1));
    const double expect = naive_log_likelihood(x, d.y, theta);
    const double got = fwc::log_likelihood(x, d.y, theta);
    CHECK(std::abs(got - expect) <= 1e-12 * std::abs(expect));

    auto m = ChoiceModel::zeros();
    m.beta0 = theta(0);
    m.beta = theta.tail(kNumFeatures);
    CHECK(log_likelihood(m, d) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_features(rng, 30);
    Eigen::VectorXd theta(kNumFeatures + 1);
    for (auto& t : theta) t = w(rng);
    const Dataset d = labeled(rng, x, theta);
    const Eigen::VectorXd g = log_likelihood_gradient(x, d.y, theta);
    Eigen::VectorXd fd(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      const double h = 1e-5;
      Eigen::VectorXd up = theta, down = theta;
      up(j) += h;
      down(j) -= h;
      fd(j) = (fwc::log_likelihood(x, d.y, up) - fwc::log_likelihood(x, d.y, down)) / (2 * h);
    }
    CHECK((fd - g).norm() <= 1e-6 * g.norm());
  }
}

TEST_CASE("label-independent data fits to zero weights") {
  std::mt19937_64 rng(6);
  const auto half = random_features(rng, 40);
  Eigen::MatrixXd x(80, kNumFeatures);
  x << half, half;
  Eigen::VectorXd y(80);
  y << Eigen::VectorXd::Zero(40), Eigen::VectorXd::Ones(40);
  const auto [m, rep] = fit(Dataset{x, y});
  CHECK(rep.converged);
  CHECK(std::abs(m.beta0) < 1e-6);
  CHECK(m.beta.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(rep.log_likelihood == doctest::Approx(-80 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("fit input validation") {
  CHECK_THROWS_AS(fit(Dataset{}), ContractError);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, kNumFeatures);
  x(1, 0) = 1.0;
  SUBCASE("separable data diverges without a penalty") {
    CHECK_THROWS_AS(fit(Dataset{x, Eigen::Vector2d(0, 1)}), NonIdentifiableError);
    FitConfig cfg;
    cfg.l2 = 1.0;
    const auto [m, rep] = fit(Dataset{x, Eigen::Vector2d(0, 1)}, cfg);
    CHECK(std::isfinite(m.beta(0)));
    CHECK(m.beta(0) > 0.0);
  }
  SUBCASE("single class") {
    CHECK_THROWS_AS(fit(Dataset{x, Eigen::Vector2d(1, 1)}), NonIdentifiableError);
    FitConfig cfg;
    cfg.l2 = 0.5;
    CHECK_NOTHROW(fit(Dataset{x, Eigen::Vector2d(1, 1)}, cfg));
  }
  SUBCASE("bad values") {
    Eigen::MatrixXd nan = x;
    nan(0, 4) = std::nan("");
    CHECK_THROWS_AS(fit(Dataset{nan, Eigen::Vector2d(0, 1)}), DataError);
    CHECK_THROWS_AS(fit(Dataset{x, Eigen::Vector2d(0, 2)}), DataError);
  }
  SUBCASE("bad configuration") {
    FitConfig cfg;
    cfg.l2 = -1;
    CHECK_THROWS_AS(fit(Dataset{x, Eigen::Vector2d(0, 1)}, cfg), ConfigError);
    cfg = {};
    cfg.features = {3, 2};
    CHECK_THROWS_AS(fit(Dataset{x, Eigen::Vector2d(0, 1)}, cfg), ConfigError);
  }
}

TEST_CASE("fit on planted data: monotone objective and honest convergence") {
  std::mt19937_64 rng(7);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumFeatures + 1);
  theta(0) = 0.3;
  theta(5) = 1.5;
  theta(8) = -1.0;
  theta(12) = 0.8;
  const auto x = random_features(rng, 3000);
  const auto d = labeled(rng, x, theta);
  const auto [m, rep] = fit(d);
  REQUIRE(rep.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < rep.objective_trace.size(); ++i) {
    CHECK(rep.objective_trace[i] >= rep.objective_trace[i - 1]);
  }
  CHECK(rep.converged);
  CHECK(rep.gradient_norm <= rep.gradient_tolerance);
  CHECK(rep.iterations <= 500);
  CHECK(rep.log_likelihood == doctest::Approx(log_likelihood(m, d)).epsilon(1e-9));
  CHECK(rep.log_likelihood >= log_likelihood(ChoiceModel::zeros(), d));

  const auto raw = m.raw_coefficients();
  CHECK((raw - theta).cwiseAbs().maxCoeff() < 0.35);

  // classify agrees with an independent evaluation of the raw coefficients
  for (Eigen::Index i = 0; i < 100; ++i) {
    double eta = raw(0);
    for (int k = 0; k < kNumFeatures; ++k) eta += raw(k + 1) * x(i, k);
    const double p = 1.0 / (1.0 + std::exp(-eta));
    CHECK(predict_proba(m, x.row(i).transpose()) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("classification threshold") {
  auto m = ChoiceModel::zeros();
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(kNumFeatures);
  CHECK(classify(m, x) == 1);  // p = 0.5 exactly
  CHECK(classify(m, x, 0.0) == 1);
  CHECK(classify(m, x, 1.0) == 0);
  CHECK(classify(m, x, 1.5) == 0);
  m.beta0 = -1e-9;
  CHECK(classify(m, x) == 0);
}

TEST_CASE("rescaling the continuous features leaves predictions unchanged") {
  std::mt19937_64 rng(8);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumFeatures + 1);
  theta(12) = 1.0;
  theta(13) = -0.7;
  theta(4) = 1.0;
  const auto x = random_features(rng, 2000);
  const auto d = labeled(rng, x, theta);
  Dataset scaled = d;
  scaled.x.col(11) *= 60.0;  // hours to minutes
  scaled.x.col(12) = scaled.x.col(12) * 3600.0 + Eigen::VectorXd::Constant(2000, 5.0);

  const auto a = fit(d).first;
  const auto b = fit(scaled).first;
  const auto pa = predict_proba_rows(a, d.x);
  const auto pb = predict_proba_rows(b, scaled.x);
  CHECK((pa - pb).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("feature subsets and zero-variance columns") {
  std::mt19937_64 rng(9);
  auto x = random_features(rng, 500);
  x.col(12).setConstant(2.0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumFeatures + 1);
  theta(1) = 2.0;
  const auto d = labeled(rng, x, theta);
  FitConfig cfg;
  cfg.features = {1, 2, 12, 13};
  const auto [m, rep] = fit(d, cfg);
  CHECK(m.feature_ids == cfg.features);
  CHECK(m.beta.size() == 4);
  bool flagged = false;
  for (const auto& s : m.scaling) {
    if (s.feature == 13) flagged = s.zero_variance && s.std == 1.0;
  }
  CHECK(flagged);
  const auto raw = m.raw_coefficients();
  CHECK(raw.size() == kNumFeatures + 1);
  CHECK(raw(5) == 0.0);
}

TEST_CASE("model JSON round-trips") {
  std::mt19937_64 rng(10);
  const auto x = random_features(rng, 300);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumFeatures + 1);
  theta(3) = 1.0;
  FitConfig cfg;
  cfg.features = {1, 3, 5, 12};
  const auto m = fit(labeled(rng, x, theta), cfg).first;
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.beta0 == m.beta0);
  CHECK(back.beta == m.beta);
  CHECK(back.feature_ids == m.feature_ids);
  CHECK(back.scaling == m.scaling);
  CHECK(back.grouping == m.grouping);
  CHECK(model_to_json(back) == model_to_json(m));

  CHECK_THROWS_AS(model_from_json("{"), ParseError);
  CHECK_THROWS_AS(model_from_json(R"({"beta0":0,"beta":[1,2],"feature_names":["f1"]})"),
                  ConfigError);
}
