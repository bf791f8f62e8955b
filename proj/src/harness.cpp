#include "itconv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "itconv/datagen.hpp"
#include "itconv/error.hpp"
#include "itconv/numkit.hpp"

namespace itconv {

void SimConfig::validate() const {
  if (n_sim < 1) throw DomainError("n_sim must be at least 1");
  if (n_cases <= static_cast<int>(kSimulationVariables))
    throw DomainError("n_cases must exceed the number of variables (" +
                      std::to_string(kSimulationVariables) + ")");
  PopulationSpec{kSimulationVariables, rho, static_cast<std::size_t>(n_cases)}.validate();
  if (p_miss.empty()) throw DomainError("p_miss must list at least one proportion");
  for (std::size_t i = 0; i < p_miss.size(); ++i) {
    if (!(p_miss[i] >= 0.0 && p_miss[i] < 1.0))
      throw DomainError("p_miss values must lie in [0, 1)");
    for (std::size_t k = 0; k < i; ++k)
      if (p_miss[k] == p_miss[i]) throw DomainError("p_miss values must be distinct");
  }
  if (t_max < 1) throw DomainError("t_max must be at least 1");
  if (m < 2) throw DomainError("m must be at least 2");
  if (checkpoints.empty()) throw DomainError("checkpoints must list at least one iteration");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1) throw DomainError("checkpoints must be positive");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      throw DomainError("checkpoints must be strictly ascending");
  }
  if (checkpoints.back() > t_max) throw DomainError("checkpoints must not exceed t_max");
  if (out_dir.empty()) throw DomainError("out_dir must not be empty");
}

namespace {

PopulationSpec population_of(const SimConfig& config) {
  return {kSimulationVariables, config.rho, static_cast<std::size_t>(config.n_cases)};
}

std::uint64_t condition_key(double p_miss) { return std::bit_cast<std::uint64_t>(p_miss); }

std::vector<RepetitionRecord> failed_condition(int rep, double p_miss, const SimConfig& config,
                                               const std::string& reason) {
  std::vector<RepetitionRecord> out;
  for (int t : config.checkpoints) {
    RepetitionRecord r;
    r.rep = rep;
    r.p_miss = p_miss;
    r.checkpoint = t;
    r.ok = false;
    r.failure = reason;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

double simulation_truth(const SimConfig& config) {
  return true_theta(population_of(config)).beta.front();
}

RepetitionResult run_repetition(const SimConfig& config, int rep_id, bool keep_traces) {
  config.validate();
  const double theta = simulation_truth(config);
  const auto rep_key = static_cast<std::uint64_t>(rep_id);

  RngStream data_rng(config.seed, {rep_key, 0, 0, Purpose::Data, 0});
  const DataMatrix data = simulate_dataset(data_rng, population_of(config));

  ChainRunOptions run_options;
  run_options.m = static_cast<std::size_t>(config.m);
  run_options.t_max = config.t_max;
  run_options.monitors = all_monitors();

  const std::size_t n_checkpoints = config.checkpoints.size();
  RepetitionResult result;
  for (double p : config.p_miss) {
    const std::uint64_t cond = condition_key(p);
    RngStream amp_rng(config.seed, {rep_key, cond, 0, Purpose::Amputation, 0});
    const MissingMask mask = ampute_mcar(amp_rng, data, p);

    // analyses[checkpoint][chain]; a failed fit leaves an error message.
    std::vector<std::vector<CompletedAnalysis>> analyses(n_checkpoints);
    std::vector<std::string> fit_errors(n_checkpoints);
    auto observer = [&](std::size_t, int iteration, const DataMatrix& completed) {
      const auto it = std::lower_bound(config.checkpoints.begin(), config.checkpoints.end(), iteration);
      if (it == config.checkpoints.end() || *it != iteration) return;
      const auto idx = static_cast<std::size_t>(it - config.checkpoints.begin());
      try {
        analyses[idx].push_back(fit_ols(completed));
      } catch (const Error& e) {
        fit_errors[idx] = e.what();
      }
    };

    ChainRun run;
    try {
      run = run_chains(config.seed, {rep_key, cond, 0, Purpose::Sweep, 0}, data, mask, run_options,
                       observer);
    } catch (const Error& e) {
      auto failed = failed_condition(rep_id, p, config, e.what());
      result.records.insert(result.records.end(), failed.begin(), failed.end());
      continue;
    }

    const auto theta_diag = diagnose(run.trace, Monitor::ThetaHat, config.checkpoints);
    const auto lambda_diag = diagnose(run.trace, Monitor::Lambda1, config.checkpoints);

    for (std::size_t k = 0; k < n_checkpoints; ++k) {
      RepetitionRecord rec;
      rec.rep = rep_id;
      rec.p_miss = p;
      rec.checkpoint = config.checkpoints[k];
      rec.theta = {theta_diag[k].ac, theta_diag[k].rhat};
      rec.lambda = {lambda_diag[k].ac, lambda_diag[k].rhat};
      if (!fit_errors[k].empty()) {
        rec.ok = false;
        rec.failure = fit_errors[k];
      } else {
        try {
          rec.pooled = pool_rubin(analyses[k]);
          rec.outcome = evaluate_repetition(rec.pooled, theta);
          const auto& first = analyses[k].front();
          const std::size_t n_slopes = first.coefficients.size() - 1;
          for (std::size_t s = 0; s < n_slopes; ++s) {
            std::vector<double> q, u;
            for (const auto& a : analyses[k]) {
              q.push_back(a.coefficients[s + 1]);
              u.push_back(a.variances[s + 1]);
            }
            rec.coefficient_qbar.push_back(pool_estimates(q, u, first.residual_df()).qbar);
          }
        } catch (const Error& e) {
          rec.ok = false;
          rec.failure = e.what();
        }
      }
      result.records.push_back(std::move(rec));
    }
    if (keep_traces) result.traces.push_back({rep_id, p, std::move(run.trace)});
  }
  return result;
}

namespace {

SummaryStat summarize_diagnostic(const std::vector<const RepetitionRecord*>& cell,
                                 Diagnostic (*pick)(const RepetitionRecord&)) {
  SummaryStat stat;
  double sum = 0.0;
  for (const auto* r : cell) {
    const Diagnostic d = pick(*r);
    if (!d.defined()) continue;
    sum += d.value;
    ++stat.n_defined;
  }
  if (stat.n_defined == 0) return stat;
  const double mean = sum / stat.n_defined;
  stat.mean = mean;
  if (stat.n_defined < 2) return stat;
  double ss = 0.0;
  for (const auto* r : cell) {
    const Diagnostic d = pick(*r);
    if (d.defined()) ss += (d.value - mean) * (d.value - mean);
  }
  stat.sd = std::sqrt(ss / (stat.n_defined - 1));
  return stat;
}

}  // namespace

std::vector<ConditionSummary> summarize(std::span<const RepetitionRecord> records,
                                        const SimConfig& config, double theta_true) {
  std::vector<const RepetitionRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RepetitionRecord* a, const RepetitionRecord* b) { return a->rep < b->rep; });

  std::vector<ConditionSummary> out;
  for (double p : config.p_miss) {
    for (int t : config.checkpoints) {
      std::vector<const RepetitionRecord*> cell;
      for (const auto* r : sorted)
        if (r->p_miss == p && r->checkpoint == t) cell.push_back(r);

      ConditionSummary s;
      s.p_miss = p;
      s.checkpoint = t;
      s.n_reps = static_cast<int>(cell.size());
      double sum_q = 0.0, sum_cov = 0.0, sum_w = 0.0;
      int n_ok = 0;
      for (const auto* r : cell) {
        if (!r->ok) {
          ++s.n_failed;
          continue;
        }
        sum_q += r->pooled.qbar;
        sum_cov += r->outcome.covered ? 1.0 : 0.0;
        sum_w += r->outcome.ci_width;
        ++n_ok;
      }
      if (n_ok > 0) {
        const double mean_q = sum_q / n_ok;
        if (theta_true != 0.0) s.pct_bias = 100.0 * (mean_q - theta_true) / theta_true;
        s.coverage = sum_cov / n_ok;
        s.mean_ci_width = sum_w / n_ok;
      }
      s.ac_theta = summarize_diagnostic(cell, [](const RepetitionRecord& r) { return r.theta.ac; });
      s.rhat_theta = summarize_diagnostic(cell, [](const RepetitionRecord& r) { return r.theta.rhat; });
      s.ac_lambda = summarize_diagnostic(cell, [](const RepetitionRecord& r) { return r.lambda.ac; });
      s.rhat_lambda = summarize_diagnostic(cell, [](const RepetitionRecord& r) { return r.lambda.rhat; });
      out.push_back(s);
    }
  }
  return out;
}

SimulationResult run_simulation(const SimConfig& config, const SimulationOptions& options) {
  config.validate();
  SimulationResult result;
  const PopulationTruth truth = true_theta(population_of(config));
  result.theta_true = truth.beta.front();
  result.lambda1_true = truth.lambda1;

  const int n = config.n_sim;
  int workers = options.workers > 0 ? options.workers
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);

  std::vector<RepetitionResult> per_rep(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= n) return;
      try {
        per_rep[static_cast<std::size_t>(idx)] = run_repetition(config, idx + 1, options.keep_traces);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
      const int finished = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        *options.progress << "repetition " << finished << "/" << n << '\n' << std::flush;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& rep : per_rep) {
    result.records.insert(result.records.end(), std::make_move_iterator(rep.records.begin()),
                          std::make_move_iterator(rep.records.end()));
    result.traces.insert(result.traces.end(), std::make_move_iterator(rep.traces.begin()),
                         std::make_move_iterator(rep.traces.end()));
  }
  result.summaries = summarize(result.records, config, result.theta_true);
  return result;
}

ParameterCorrelation correlate_parameters(std::span<const RepetitionRecord> records) {
  std::vector<double> ac_t, ac_l, rh_t, rh_l;
  for (const auto& r : records) {
    if (r.theta.ac.defined() && r.lambda.ac.defined()) {
      ac_t.push_back(r.theta.ac.value);
      ac_l.push_back(r.lambda.ac.value);
    }
    if (r.theta.rhat.defined() && r.lambda.rhat.defined()) {
      rh_t.push_back(r.theta.rhat.value);
      rh_l.push_back(r.lambda.rhat.value);
    }
  }
  if (ac_t.size() < 3 || rh_t.size() < 3)
    throw DegenerateInput("correlate_parameters: fewer than three paired cells");
  ParameterCorrelation c;
  c.n_ac = static_cast<int>(ac_t.size());
  c.n_rhat = static_cast<int>(rh_t.size());
  c.rho_ac = spearman_rho(ac_t, ac_l);
  c.rho_rhat = spearman_rho(rh_t, rh_l);
  return c;
}

}  // namespace itconv
