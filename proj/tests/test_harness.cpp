#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "itconv/analysis.hpp"
#include "itconv/datagen.hpp"
#include "itconv/error.hpp"
#include "itconv/harness.hpp"
#include "itconv/output.hpp"

using namespace itconv;
using Catch::Approx;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.n_sim = 4;
  c.n_cases = 60;
  c.p_miss = {0.0, 0.5};
  c.checkpoints = {1, 5, 10};
  c.t_max = 10;
  c.m = 3;
  c.seed = 123;
  return c;
}

bool same_record(const RepetitionRecord& a, const RepetitionRecord& b) {
  const std::vector<RepetitionRecord> x{a}, y{b};
  return repetitions_csv(x) == repetitions_csv(y);
}

}  // namespace

TEST_CASE("config validation", "[harness][config]") {
  CHECK_NOTHROW(SimConfig{}.validate());
  auto bad = [](auto mutate) {
    SimConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.n_sim = 0; }).validate(), DomainError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.n_cases = 4; }).validate(), DomainError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.p_miss = {1.0}; }).validate(), DomainError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.p_miss = {0.5, 0.5}; }).validate(), DomainError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.m = 1; }).validate(), DomainError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.checkpoints = {3, 2}; }).validate(), DomainError);
  CHECK_THROWS_AS(bad([](SimConfig& c) { c.t_max = 50; }).validate(), DomainError);
}

TEST_CASE("simulation_truth", "[harness]") {
  CHECK(simulation_truth(SimConfig{}) == Approx(0.25).epsilon(1e-14));
}

TEST_CASE("run_repetition record layout", "[harness][rep]") {
  const auto config = small_config();
  const auto res = run_repetition(config, 1);
  REQUIRE(res.records.size() == 2 * 3);
  CHECK(res.records[0].p_miss == 0.0);
  CHECK(res.records[0].checkpoint == 1);
  CHECK(res.records[5].p_miss == 0.5);
  CHECK(res.records[5].checkpoint == 10);
  for (const auto& r : res.records) {
    CHECK(r.rep == 1);
    CHECK(r.ok);
    CHECK(r.coefficient_qbar.size() == 3);
    CHECK(r.coefficient_qbar[0] == r.pooled.qbar);
  }
  CHECK(res.traces.empty());
  CHECK(run_repetition(config, 1, true).traces.size() == 2);
}

TEST_CASE("complete data gives the complete-data fit at every checkpoint", "[harness][rep]") {
  const auto config = small_config();
  const auto res = run_repetition(config, 2);
  RngStream data_rng(config.seed, {2, 0, 0, Purpose::Data, 0});
  const auto data = simulate_dataset(data_rng, {4, config.rho, std::size_t(config.n_cases)});
  const auto fit = fit_ols(data);
  for (int k = 0; k < 3; ++k) {
    const auto& r = res.records[k];
    CHECK(r.pooled.qbar == Approx(fit.estimate).epsilon(1e-13));
    CHECK(r.pooled.b == 0.0);
    CHECK(r.pooled.ubar == Approx(fit.variance).epsilon(1e-12));
    CHECK(r.pooled.qbar == res.records[0].pooled.qbar);
    CHECK(r.theta.ac.status != DiagStatus::Ok);
    CHECK(r.theta.rhat.status != DiagStatus::Ok);
  }
}

TEST_CASE("run_repetition is deterministic and condition-independent", "[harness][rep]") {
  const auto config = small_config();
  const auto a = run_repetition(config, 3);
  const auto b = run_repetition(config, 3);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(same_record(a.records[i], b.records[i]));

  SimConfig only_half = config;
  only_half.p_miss = {0.5};
  const auto c = run_repetition(only_half, 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same_record(c.records[i], a.records[3 + i]));

  CHECK_FALSE(same_record(run_repetition(config, 4).records[4], a.records[4]));
}

TEST_CASE("shorter runs are prefixes of longer ones", "[harness][rep]") {
  auto long_cfg = small_config();
  long_cfg.t_max = 30;
  long_cfg.checkpoints = {1, 5, 10, 30};
  const auto a = run_repetition(small_config(), 5);
  const auto b = run_repetition(long_cfg, 5);
  for (int cond = 0; cond < 2; ++cond)
    for (int k = 0; k < 3; ++k) CHECK(same_record(a.records[cond * 3 + k], b.records[cond * 4 + k]));
}

TEST_CASE("failed conditions become failed records", "[harness][rep]") {
  SimConfig c = small_config();
  c.n_cases = 5;
  c.p_miss = {0.0, 0.95};
  const auto res = run_repetition(c, 1);
  REQUIRE(res.records.size() == 6);
  for (int k = 0; k < 3; ++k) CHECK(res.records[k].ok);
  for (int k = 3; k < 6; ++k) {
    CHECK_FALSE(res.records[k].ok);
    CHECK_FALSE(res.records[k].failure.empty());
  }
  const auto summaries = summarize(res.records, c, 0.25);
  CHECK(summaries[0].n_failed == 0);
  CHECK(summaries[3].n_failed == 1);
  CHECK(summaries[3].n_reps == 1);
  CHECK_FALSE(summaries[3].pct_bias.has_value());
  CHECK_FALSE(summaries[3].coverage.has_value());
}

TEST_CASE("summary of a single repetition equals its record", "[harness][summary]") {
  auto c = small_config();
  c.n_sim = 1;
  const auto result = run_simulation(c);
  REQUIRE(result.records.size() == result.summaries.size());
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    const auto& s = result.summaries[i];
    CHECK(s.n_reps == 1);
    CHECK(*s.pct_bias == Approx(100.0 * r.outcome.error / result.theta_true).epsilon(1e-14));
    CHECK(*s.coverage == (r.outcome.covered ? 1.0 : 0.0));
    CHECK(*s.mean_ci_width == r.outcome.ci_width);
    CHECK(s.ac_theta.mean == r.theta.ac.get());
    CHECK_FALSE(s.ac_theta.sd.has_value());
  }
}

TEST_CASE("summarize hand aggregation", "[harness][summary]") {
  SimConfig c = small_config();
  c.p_miss = {0.5};
  c.checkpoints = {10};
  std::vector<RepetitionRecord> records(3);
  const double errs[] = {0.01, -0.02, 0.04};
  for (int i = 0; i < 3; ++i) {
    auto& r = records[i];
    r.rep = 3 - i;  // out of order on purpose
    r.p_miss = 0.5;
    r.checkpoint = 10;
    r.pooled.qbar = 0.25 + errs[i];
    r.outcome = {errs[i], i != 1, 0.1 * (i + 1)};
    r.theta.ac = Diagnostic::ok(0.1 * i);
    r.theta.rhat = i == 0 ? Diagnostic::insufficient() : Diagnostic::ok(1.0 + i);
  }
  const auto s = summarize(records, c, 0.25);
  REQUIRE(s.size() == 1);
  CHECK(*s[0].pct_bias == Approx(100.0 * (0.03 / 3.0) / 0.25).epsilon(1e-12));
  CHECK(*s[0].coverage == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(*s[0].mean_ci_width == Approx(0.2).epsilon(1e-15));
  CHECK(*s[0].ac_theta.mean == Approx(0.1).epsilon(1e-15));
  CHECK(*s[0].ac_theta.sd == Approx(0.1).epsilon(1e-12));
  CHECK(s[0].rhat_theta.n_defined == 2);
  CHECK(*s[0].rhat_theta.mean == Approx(2.5).epsilon(1e-15));
  CHECK(s[0].n_reps == 3);
}

TEST_CASE("worker count does not change results", "[harness][sim]") {
  auto c = small_config();
  c.n_sim = 6;
  const auto one = run_simulation(c, {1});
  const auto many = run_simulation(c, {4});
  CHECK(summary_csv(one.summaries) == summary_csv(many.summaries));
  CHECK(repetitions_csv(one.records) == repetitions_csv(many.records));
  REQUIRE(one.records.size() == 6 * 2 * 3);
  CHECK(one.records.front().rep == 1);
  CHECK(one.records.back().rep == 6);
  CHECK(one.lambda1_true == Approx(2.5).epsilon(1e-12));
}

TEST_CASE("correlate_parameters", "[harness][spearman]") {
  auto make = [](std::vector<double> a, std::vector<double> b) {
    std::vector<RepetitionRecord> rs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      rs[i].theta.ac = Diagnostic::ok(a[i]);
      rs[i].lambda.ac = Diagnostic::ok(b[i]);
      rs[i].theta.rhat = Diagnostic::ok(a[i]);
      rs[i].lambda.rhat = Diagnostic::ok(-b[i]);
    }
    return rs;
  };
  const auto same = make({0.1, 0.5, 0.3, 0.9}, {0.1, 0.5, 0.3, 0.9});
  const auto corr = correlate_parameters(same);
  CHECK(*corr.rho_ac == Approx(1.0));
  CHECK(*corr.rho_rhat == Approx(-1.0));
  CHECK(corr.n_ac == 4);

  auto partial = make({0.1, 0.5, 0.3, 0.9}, {1, 2, 3, 4});
  partial[0].lambda.ac = Diagnostic::insufficient();
  CHECK(correlate_parameters(partial).n_ac == 3);
  partial[1].theta.ac = Diagnostic::degenerate();
  CHECK_THROWS_AS(correlate_parameters(partial), DegenerateInput);
}
