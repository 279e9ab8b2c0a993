#include "doctest.h"

#include <cmath>
#include <numbers>

#include "covote_sim.hpp"
#include "infdecomp/covote.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/rng.hpp"
#include "oracles.hpp"

using namespace infdecomp;
using oracle::dense_loglik;

namespace {

const std::vector<std::string> kTwo = {kSameParty, kSimUtterances};

}  // namespace

TEST_CASE("low-rank loglik equals the dense oracle") {
  testsim::SimParams params;
  params.legislators = 21;  // 210 pairs
  params.seed = 8;
  auto obs = testsim::simulate(params);
  obs.resize(200);
  const auto prob = LmmProblem::from_observations(obs, kTwo, false);
  for (auto [sa, sb, se] : {std::tuple{0.09, 0.09, 0.04}, std::tuple{0.0, 0.5, 1.0}, std::tuple{2.0, 0.0, 0.01},
                            std::tuple{1e-6, 3.0, 0.2}}) {
    const double dense = dense_loglik(prob, sa, sb, se);
    CHECK(std::abs(prob.loglik(sa, sb, se) - dense) <= 1e-8 * std::max(1.0, std::abs(dense)));
  }
}

TEST_CASE("no legislator effects reduces to OLS") {
  testsim::SimParams params;
  params.legislators = 30;
  params.sigma_a = params.sigma_b = 0.0;
  params.seed = 2;
  auto obs = testsim::simulate(params);
  // Keep the noise orthogonal to X and to both random-effect designs, so the
  // ML variance ratios are exactly zero and GLS equals OLS.
  const auto prob = LmmProblem::from_observations(obs, kTwo, false);
  const auto n = static_cast<Eigen::Index>(obs.size());
  const int g = prob.num_groups();
  Eigen::MatrixXd design(n, prob.x().cols() + 2 * g);
  design.leftCols(prob.x().cols()) = prob.x();
  design.rightCols(2 * g).setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, prob.x().cols() + prob.slot_a()[i]) = 1.0;
    design(i, prob.x().cols() + g + prob.slot_b()[i]) = 1.0;
  }
  Eigen::VectorXd noise(n);
  Rng rng(99);
  for (auto& e : noise) e = rng.normal();
  const Eigen::VectorXd fitted = design * design.completeOrthogonalDecomposition().solve(noise);
  const Eigen::VectorXd resid = noise - fitted;
  const Eigen::VectorXd beta_true = Eigen::Vector3d(2.0, 1.0, 0.5);
  const Eigen::VectorXd y = prob.x() * beta_true + 0.2 * resid;
  for (Eigen::Index i = 0; i < n; ++i) obs[static_cast<std::size_t>(i)].response = y(i);

  const auto fit = fit_lmm(obs, kTwo);
  const Eigen::VectorXd ols = prob.x().colPivHouseholderQr().solve(y);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(fit.beta[static_cast<std::size_t>(j)] - ols(j)) <= 1e-6);
  CHECK(fit.sigma2_a == 0.0);
  CHECK(fit.sigma2_b == 0.0);
}

TEST_CASE("fit recovers simulated coefficients") {
  testsim::SimParams params;
  params.seed = 5;
  const auto obs = testsim::simulate(params);
  const auto fit = fit_lmm(obs, kTwo);
  CHECK(fit.names == std::vector<std::string>{"(intercept)", kSameParty, kSimUtterances});
  CHECK(std::abs(fit.beta[1] - 1.0) < 0.1);
  CHECK(std::abs(fit.beta[2] - 0.5) < 0.1);
  CHECK(fit.sigma2_e == doctest::Approx(0.04).epsilon(0.2));
  CHECK(fit.sigma2_a >= 0.0);
  CHECK(fit.sigma2_b >= 0.0);
  CHECK(fit.bic == static_cast<double>(fit.num_params()) * std::log(static_cast<double>(fit.n_obs)) - 2.0 * fit.loglik);

  SUBCASE("optimum beats random perturbations of the variance components") {
    const auto prob = LmmProblem::from_observations(obs, kTwo, false);
    Rng rng(77);
    const double at_opt = prob.loglik(fit.sigma2_a, fit.sigma2_b, fit.sigma2_e);
    CHECK(at_opt == doctest::Approx(fit.loglik).epsilon(1e-10));
    for (int t = 0; t < 32; ++t) {
      const double sa = fit.sigma2_a * std::exp(rng.uniform(-0.5, 0.5));
      const double sb = fit.sigma2_b * std::exp(rng.uniform(-0.5, 0.5));
      const double se = fit.sigma2_e * std::exp(rng.uniform(-0.5, 0.5));
      CHECK(prob.loglik(sa, sb, se) <= at_opt + 1e-9);
    }
  }

  SUBCASE("bic_compare") {
    CHECK(bic_compare(fit, fit) == 0.0);
    const auto reduced = fit_lmm(obs, {kSameParty});
    CHECK(bic_compare(fit, reduced) > 10.0);
    CHECK_THROWS_AS(bic_compare(reduced, fit), CovoteError);
    auto other = obs;
    other.pop_back();
    CHECK_THROWS_AS(bic_compare(fit, fit_lmm(other, {kSameParty})), CovoteError);
  }

  SUBCASE("coefficient table") {
    const auto rows = coefficient_table(obs, kTwo, {});
    REQUIRE(rows.size() == 3);
    CHECK_FALSE(rows[0].delta_bic.has_value());
    CHECK(*rows[1].delta_bic > 10.0);
    CHECK(rows[2].beta == fit.beta[2]);
  }

  SUBCASE("deterministic") {
    const auto again = fit_lmm(obs, kTwo);
    CHECK(again.beta == fit.beta);
    CHECK(again.loglik == fit.loglik);
  }
}

TEST_CASE("fit_lmm errors") {
  testsim::SimParams params;
  params.legislators = 10;
  auto obs = testsim::simulate(params);
  SUBCASE("collinear columns are named") {
    for (auto& o : obs) o.features["copy"] = 2.0 * o.features.at(kSameParty);
    try {
      fit_lmm(obs, {kSameParty, "copy"});
      FAIL("expected CovoteError");
    } catch (const CovoteError& e) {
      CHECK(std::string(e.what()).find("copy") != std::string::npos);
    }
  }
  SUBCASE("constant feature collides with the intercept") {
    for (auto& o : obs) o.features["const"] = 3.0;
    CHECK_THROWS_WITH_AS(fit_lmm(obs, {"const"}), doctest::Contains("const"), CovoteError);
  }
  SUBCASE("one legislator per slot") {
    std::vector<CovoteObservation> tiny(obs.begin(), obs.begin() + 1);
    CHECK_THROWS_AS(fit_lmm(tiny, {}), CovoteError);
  }
  SUBCASE("missing feature") { CHECK_THROWS_AS(fit_lmm(obs, {"nope"}), CovoteError); }
}

TEST_CASE("standardized features") {
  testsim::SimParams params;
  params.seed = 12;
  const auto obs = testsim::simulate(params);
  LmmOptions o;
  o.standardize = true;
  const auto raw = fit_lmm(obs, kTwo);
  const auto std_fit = fit_lmm(obs, kTwo, o);
  // Rescaling columns leaves the likelihood unchanged.
  CHECK(std_fit.loglik == doctest::Approx(raw.loglik).epsilon(1e-8));
}
