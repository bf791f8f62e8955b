#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "itconv/analysis.hpp"
#include "itconv/datagen.hpp"
#include "itconv/engine.hpp"
#include "itconv/error.hpp"
#include "itconv/numkit.hpp"

using namespace itconv;
using Catch::Approx;

namespace {

struct Fixture {
  DataMatrix data;
  MissingMask mask;
};

Fixture make_fixture(std::uint64_t rep, double p_miss, std::size_t n = 80) {
  RngStream drng(11, {rep, 0, 0, Purpose::Data, 0});
  DataMatrix data = simulate_dataset(drng, {4, 0.5, n});
  RngStream arng(11, {rep, 0, 0, Purpose::Amputation, 0});
  MissingMask mask = ampute_mcar(arng, data, p_miss);
  return {std::move(data), std::move(mask)};
}

}  // namespace

TEST_CASE("initialize draws from the observed cells of each column", "[engine][init]") {
  const auto f = make_fixture(1, 0.6);
  RngStream rng(1, {});
  const auto state = initialize(rng, f.data, f.mask);
  for (std::size_t c = 0; c < f.data.cols(); ++c) {
    std::set<double> observed;
    for (std::size_t r = 0; r < f.data.rows(); ++r)
      if (!f.mask.missing(r, c)) observed.insert(f.data(r, c));
    for (std::size_t r = 0; r < f.data.rows(); ++r) {
      if (f.mask.missing(r, c))
        CHECK(observed.count(state.completed(r, c)) == 1);
      else
        CHECK(state.completed(r, c) == f.data(r, c));
    }
  }
  CHECK(state.iteration == 0);
}

TEST_CASE("initialize is deterministic and rejects starved columns", "[engine][init]") {
  const auto f = make_fixture(2, 0.5);
  RngStream a(5, {}), b(5, {});
  CHECK(initialize(a, f.data, f.mask).completed == initialize(b, f.data, f.mask).completed);

  MissingMask starved(shape_of(f.data));
  for (std::size_t r = 1; r < f.data.rows(); ++r) starved.set(r, 2, true);
  CHECK_THROWS_AS(initialize(a, f.data, starved), TooFewObserved);
}

TEST_CASE("impute_variable without masked cells is a no-op", "[engine][impute]") {
  const auto f = make_fixture(3, 0.0);
  RngStream rng(1, {});
  auto state = initialize(rng, f.data, f.mask);
  for (std::size_t j = 0; j < 4; ++j) impute_variable(rng, state, j);
  CHECK(state.completed == f.data);
}

TEST_CASE("impute_variable changes only masked cells of its column", "[engine][impute]") {
  const auto f = make_fixture(4, 0.7);
  RngStream rng(1, {});
  auto state = initialize(rng, f.data, f.mask);
  const DataMatrix before = state.completed;
  impute_variable(rng, state, 1);
  std::size_t changed = 0;
  for (std::size_t r = 0; r < f.data.rows(); ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      if (c == 1 && f.mask.missing(r, c)) {
        changed += state.completed(r, c) != before(r, c);
      } else {
        CHECK(state.completed(r, c) == before(r, c));
      }
    }
  CHECK(changed == f.mask.missing_in_column(1));
}

TEST_CASE("impute_variable reproduces an exact linear relation", "[engine][impute]") {
  RngStream g(2, {});
  DataMatrix d = simulate_dataset(g, {4, 0.3, 60});
  for (std::size_t r = 0; r < d.rows(); ++r) d(r, 3) = 1.0 + 2.0 * d(r, 0) - d(r, 1) + 0.5 * d(r, 2);
  MissingMask mask(shape_of(d));
  for (std::size_t r = 0; r < 10; ++r) mask.set(r, 3, true);

  for (double ridge : {0.0, 1e-5}) {
    RngStream rng(3, {});
    auto state = initialize(rng, d, mask);
    impute_variable(rng, state, 3, {ridge, false});
    for (std::size_t r = 0; r < 10; ++r) {
      const double truth = d(r, 3);
      if (ridge == 0.0)
        CHECK(state.completed(r, 3) == Approx(truth).margin(1e-9));
      else
        CHECK(std::abs(state.completed(r, 3) - truth) < 1e-3 * (1.0 + std::abs(truth)));
    }
  }
}

TEST_CASE("intercept-only draw follows the posterior predictive", "[engine][impute]") {
  // One column: y_mis ~ ybar + s sqrt(1 + 1/n) t_{n-1}, whose variance is
  // RSS / (n - 3) * (1 + 1/n).
  const std::size_t n_obs = 30;
  DataMatrix d(n_obs + 1, {"y"});
  RngStream g(4, {});
  double sum = 0;
  for (std::size_t r = 0; r < n_obs; ++r) {
    d(r, 0) = 3.0 + 2.0 * g.std_normal();
    sum += d(r, 0);
  }
  const double ybar = sum / n_obs;
  double rss = 0;
  for (std::size_t r = 0; r < n_obs; ++r) rss += (d(r, 0) - ybar) * (d(r, 0) - ybar);
  const double n = double(n_obs);
  const double var_pred = rss / (n - 3.0) * (1.0 + 1.0 / n);

  MissingMask mask(shape_of(d));
  mask.set(n_obs, 0, true);
  const int reps = 10000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < reps; ++i) {
    RngStream rng(99, {static_cast<std::uint64_t>(i), 0, 1, Purpose::Sweep, 1});
    ImputationState state{d, mask, 0, 1};
    impute_variable(rng, state, 0, {0.0, false});
    const double v = state.completed(n_obs, 0);
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / reps;
  const double var = s2 / reps - mean * mean;
  CHECK(std::abs(mean - ybar) < 4.0 * std::sqrt(var_pred / reps));
  // Kurtosis of t_29 is 3 + 6/25; the relative SD of the sample variance is
  // about sqrt(2.24 / reps) = 1.5%.
  CHECK(std::abs(var / var_pred - 1.0) < 0.06);
}

TEST_CASE("impute_variable failure modes", "[engine][impute]") {
  RngStream rng(5, {});
  SECTION("too few observed rows for the parameters") {
    const auto f = make_fixture(5, 0.0, 8);
    MissingMask mask(shape_of(f.data));
    for (std::size_t r = 0; r < 5; ++r) mask.set(r, 3, true);
    auto state = initialize(rng, f.data, mask);
    CHECK_THROWS_AS(impute_variable(rng, state, 3), DegenerateResidual);
  }
  SECTION("a predictor identically zero") {
    auto f = make_fixture(6, 0.0, 30);
    for (std::size_t r = 0; r < 30; ++r) f.data(r, 0) = 0.0;
    MissingMask mask(shape_of(f.data));
    mask.set(0, 3, true);
    auto state = initialize(rng, f.data, mask);
    CHECK_THROWS_AS(impute_variable(rng, state, 3), SingularSystem);
  }
}

TEST_CASE("run_chains on complete data", "[engine][chains]") {
  const auto f = make_fixture(7, 0.0);
  const auto run = run_chains(1, {7, 0, 0, Purpose::Sweep, 0}, f.data, f.mask, {3, 4});
  const auto col = *run.trace.find(Monitor::ThetaHat);
  const double theta = fit_ols(f.data).estimate;
  for (std::size_t c = 0; c < 3; ++c)
    for (int t = 1; t <= 4; ++t) CHECK(run.trace.value(c, t, col) == theta);
  const auto mean_col = *run.trace.find(Monitor::ImputedMean, 0);
  CHECK(std::isnan(run.trace.value(0, 1, mean_col)));
}

TEST_CASE("run_chains trace shape", "[engine][chains]") {
  const auto f = make_fixture(8, 0.5);
  const auto run = run_chains(1, {8, 1, 0, Purpose::Sweep, 0}, f.data, f.mask, {5, 7});
  const std::size_t cols = 4 + 4 + 1 + 1;
  CHECK(run.trace.columns().size() == cols);
  CHECK(run.trace.entry_count() == 5 * 7 * cols);
  CHECK(run.trace.iterations() == 7);
  CHECK(run.finals.size() == 5);
  for (const auto& s : run.finals) CHECK(s.iteration == 7);
  CHECK(expand_monitors({Monitor::ThetaHat}, 4).size() == 1);
}

TEST_CASE("run_chains is deterministic and truncation-equivalent", "[engine][chains]") {
  const auto f = make_fixture(9, 0.75);
  const StreamId origin{9, 3, 0, Purpose::Sweep, 0};
  const auto long_run = run_chains(42, origin, f.data, f.mask, {5, 50});
  const auto again = run_chains(42, origin, f.data, f.mask, {5, 50});
  CHECK(long_run.trace == again.trace);
  const auto short_run = run_chains(42, origin, f.data, f.mask, {5, 10});
  CHECK(short_run.trace == long_run.trace.truncated(10));
  const auto other = run_chains(43, origin, f.data, f.mask, {5, 10});
  CHECK_FALSE(other.trace == short_run.trace);
}

TEST_CASE("chains are exchangeable and independent of each other", "[engine][chains]") {
  const auto f = make_fixture(10, 0.5);
  const StreamId origin{10, 2, 0, Purpose::Sweep, 0};
  const auto five = run_chains(3, origin, f.data, f.mask, {5, 6});
  const auto three = run_chains(3, origin, f.data, f.mask, {3, 6});
  for (std::size_t c = 0; c < 3; ++c)
    for (int t = 1; t <= 6; ++t)
      for (std::size_t k = 0; k < five.trace.columns().size(); ++k) {
        const double a = five.trace.value(c, t, k), b = three.trace.value(c, t, k);
        CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
      }
  CHECK(five.finals[0].completed == three.finals[0].completed);
  CHECK_FALSE(five.finals[0].completed == five.finals[1].completed);
}

TEST_CASE("observed cells survive every sweep", "[engine][chains]") {
  const auto f = make_fixture(11, 0.95);
  ChainRunOptions opt{4, 15};
  opt.engine.verify_observed = true;
  int calls = 0;
  const auto run = run_chains(5, {11, 0, 0, Purpose::Sweep, 0}, f.data, f.mask, opt,
                              [&](std::size_t, int, const DataMatrix& completed) {
                                ++calls;
                                for (std::size_t r = 0; r < f.data.rows(); ++r)
                                  for (std::size_t c = 0; c < 4; ++c)
                                    if (!f.mask.missing(r, c)) REQUIRE(completed(r, c) == f.data(r, c));
                              });
  CHECK(calls == 4 * 15);
  for (const auto& s : run.finals)
    for (double v : s.completed.cells()) CHECK(std::isfinite(v));
}

TEST_CASE("run_chains annotates failures", "[engine][chains]") {
  const auto f = make_fixture(12, 0.0, 8);
  MissingMask mask(shape_of(f.data));
  for (std::size_t r = 0; r < 5; ++r) mask.set(r, 2, true);
  try {
    run_chains(1, {}, f.data, mask, {2, 3});
    FAIL("expected ImputationError");
  } catch (const ImputationError& e) {
    CHECK(e.chain() == 1);
    CHECK(e.iteration() == 1);
    CHECK(e.variable() == 2);
  }
  MissingMask starved(shape_of(f.data));
  for (std::size_t r = 1; r < 8; ++r) starved.set(r, 0, true);
  try {
    run_chains(1, {}, f.data, starved, {2, 3});
    FAIL("expected ImputationError");
  } catch (const ImputationError& e) {
    CHECK(e.iteration() == 0);
  }
  CHECK_THROWS_AS(run_chains(1, {}, f.data, mask, {1, 3}), DomainError);
}

TEST_CASE("imputed-cell means are stationary across reruns", "[engine][chains]") {
  // Rerun set A averages iterations (20, 40]; independent set B averages
  // (10, 20]. After burn-in both estimate the same stationary mean.
  const int reruns = 100;
  std::vector<std::vector<double>> a(4), b(4);
  for (int i = 0; i < reruns; ++i) {
    for (int set = 0; set < 2; ++set) {
      const auto rep = static_cast<std::uint64_t>(1000 * set + i);
      const auto f = make_fixture(rep, 0.1, 100);
      const auto run = run_chains(17, {rep, 0, 0, Purpose::Sweep, 0}, f.data, f.mask,
                                  {2, 40, {Monitor::ImputedMean}});
      const int lo = set == 0 ? 21 : 11, hi = set == 0 ? 40 : 20;
      for (std::size_t v = 0; v < 4; ++v) {
        double s = 0;
        for (int t = lo; t <= hi; ++t) s += run.trace.value(0, t, v);
        (set == 0 ? a : b)[v].push_back(s / (hi - lo + 1));
      }
    }
  }
  auto moments = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s2 = 0;
    for (double x : v) s2 += (x - m) * (x - m);
    return std::pair{m, s2 / (v.size() - 1)};
  };
  for (std::size_t v = 0; v < 4; ++v) {
    const auto [ma, va] = moments(a[v]);
    const auto [mb, vb] = moments(b[v]);
    const double t = (ma - mb) / std::sqrt(va / reruns + vb / reruns);
    // Two-sided alpha = 0.001 at ~198 df.
    CHECK(std::abs(t) < 3.34);
  }
}
