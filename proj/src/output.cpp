#include "itconv/output.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "itconv/config.hpp"
#include "itconv/datagen.hpp"
#include "itconv/error.hpp"

namespace itconv {

namespace fs = std::filesystem;

std::string format_number(double value) {
  if (!std::isfinite(value)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_number(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string{};
}

namespace {

std::string format_diag(const Diagnostic& d) { return d.defined() ? format_number(d.value) : std::string{}; }

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

class CsvRow {
 public:
  CsvRow& operator<<(const std::string& field) {
    if (!first_) line_ += ',';
    line_ += field;
    first_ = false;
    return *this;
  }
  CsvRow& operator<<(int v) { return *this << std::to_string(v); }
  std::string str() const { return line_ + '\n'; }

 private:
  std::string line_;
  bool first_ = true;
};

std::string schema_line() { return "# schema=" + std::to_string(kCsvSchema) + "\n"; }

}  // namespace

std::string summary_csv(std::span<const ConditionSummary> summaries) {
  std::string out = schema_line();
  out +=
      "p_miss,checkpoint,pct_bias,coverage,mean_ci_width,ac_theta_mean,ac_theta_sd,"
      "rhat_theta_mean,rhat_theta_sd,ac_lambda_mean,ac_lambda_sd,rhat_lambda_mean,"
      "rhat_lambda_sd,n_reps,n_failed\n";
  for (const auto& s : summaries) {
    CsvRow row;
    row << format_number(s.p_miss) << s.checkpoint << format_number(s.pct_bias)
        << format_number(s.coverage) << format_number(s.mean_ci_width);
    for (const SummaryStat* st : {&s.ac_theta, &s.rhat_theta, &s.ac_lambda, &s.rhat_lambda})
      row << format_number(st->mean) << format_number(st->sd);
    row << s.n_reps << s.n_failed;
    out += row.str();
  }
  return out;
}

std::string repetitions_csv(std::span<const RepetitionRecord> records) {
  std::size_t n_slopes = 0;
  for (const auto& r : records) n_slopes = std::max(n_slopes, r.coefficient_qbar.size());

  std::string out = schema_line();
  out +=
      "rep,p_miss,checkpoint,status,qbar,se,ci_low,ci_high,covered,error,ci_width,df,ubar,b,"
      "t_var,ac_theta,rhat_theta,ac_lambda,rhat_lambda";
  for (std::size_t s = 0; s < n_slopes; ++s) out += ",qbar_x" + std::to_string(s + 1);
  out += ",failure\n";

  for (const auto& r : records) {
    CsvRow row;
    row << r.rep << format_number(r.p_miss) << r.checkpoint << std::string(r.ok ? "ok" : "failed");
    if (r.ok) {
      row << format_number(r.pooled.qbar) << format_number(r.pooled.se())
          << format_number(r.pooled.ci_low) << format_number(r.pooled.ci_high)
          << std::string(r.outcome.covered ? "1" : "0") << format_number(r.outcome.error)
          << format_number(r.outcome.ci_width) << format_number(r.pooled.df)
          << format_number(r.pooled.ubar) << format_number(r.pooled.b)
          << format_number(r.pooled.t_var);
    } else {
      for (int i = 0; i < 11; ++i) row << std::string{};
    }
    row << format_diag(r.theta.ac) << format_diag(r.theta.rhat) << format_diag(r.lambda.ac)
        << format_diag(r.lambda.rhat);
    for (std::size_t s = 0; s < n_slopes; ++s)
      row << (r.ok && s < r.coefficient_qbar.size() ? format_number(r.coefficient_qbar[s]) : std::string{});
    row << quote_field(r.failure);
    out += row.str();
  }
  return out;
}

void write_trace_csv(std::ostream& out, std::span<const ConditionTrace> traces,
                     const std::vector<std::string>& variable_names) {
  out << schema_line() << "rep,p_miss,chain,iteration,statistic,variable,value\n";
  for (const auto& ct : traces) {
    const auto& cols = ct.trace.columns();
    const std::string p = format_number(ct.p_miss);
    for (std::size_t chain = 0; chain < ct.trace.chains(); ++chain)
      for (int it = 1; it <= ct.trace.iterations(); ++it)
        for (std::size_t c = 0; c < cols.size(); ++c) {
          const std::string var = cols[c].variable && *cols[c].variable < variable_names.size()
                                      ? variable_names[*cols[c].variable]
                                      : std::string{};
          out << ct.rep << ',' << p << ',' << chain + 1 << ',' << it << ','
              << to_string(cols[c].kind) << ',' << var << ','
              << format_number(ct.trace.value(chain, it, c)) << '\n';
        }
  }
}

std::string trace_csv(std::span<const ConditionTrace> traces,
                      const std::vector<std::string>& variable_names) {
  std::ostringstream out;
  write_trace_csv(out, traces, variable_names);
  return out.str();
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error("sha256: digest initialisation failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 0xF];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read back " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string RunManifest::to_json() const {
  using json = nlohmann::ordered_json;
  json j;
  j["artifact"] = "itconv";
  j["version"] = version;
  j["schema"] = kCsvSchema;
  j["seed"] = config.seed;
  json cfg = json::object();
  for (const auto& [k, v] : config_entries(config)) cfg[k] = v;
  j["config"] = cfg;
  j["workers"] = workers;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["theta_true"] = format_number(theta_true);
  j["lambda1_true"] = format_number(lambda1_true);
  if (correlation) {
    j["spearman"] = {{"rho_ac", format_number(correlation->rho_ac)},
                     {"rho_rhat", format_number(correlation->rho_rhat)},
                     {"n_ac", correlation->n_ac},
                     {"n_rhat", correlation->n_rhat}};
  } else {
    j["spearman"] = nullptr;
  }
  json fails = json::array();
  for (const auto& f : failures)
    fails.push_back({{"p_miss", format_number(f.p_miss)}, {"checkpoint", f.checkpoint}, {"n_failed", f.n_failed}});
  j["failures"] = fails;
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back({{"file", o.name}, {"bytes", o.bytes}, {"sha256", o.sha256}});
  j["outputs"] = outs;
  return j.dump(2) + "\n";
}

RunManifest emit_outputs(const SimulationResult& result, const SimConfig& config,
                         const std::string& out_dir, RunManifest manifest) {
  const fs::path dir(out_dir);
  std::vector<fs::path> pending;    // temporaries
  std::vector<fs::path> committed;  // renamed into place

  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : pending) fs::remove(p, ec);
    for (const auto& p : committed) fs::remove(p, ec);
  };

  auto write_file = [&](const std::string& name, auto&& writer) {
    const fs::path final_path = dir / name;
    const fs::path tmp = dir / (name + ".tmp");
    pending.push_back(tmp);
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
      writer(out);
      out.flush();
      if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
    pending.pop_back();
    committed.push_back(final_path);
    return final_path;
  };

  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    manifest.config = config;
    manifest.theta_true = result.theta_true;
    manifest.lambda1_true = result.lambda1_true;
    manifest.failures.clear();
    for (const auto& s : result.summaries)
      if (s.n_failed > 0) manifest.failures.push_back({s.p_miss, s.checkpoint, s.n_failed});
    if (!manifest.correlation) {
      try {
        manifest.correlation = correlate_parameters(result.records);
      } catch (const DegenerateInput&) {
      }
    }

    manifest.outputs.clear();
    auto record = [&](const std::string& name, const fs::path& path) {
      manifest.outputs.push_back({name, fs::file_size(path), sha256_file(path)});
    };
    const std::string summary = summary_csv(result.summaries);
    record("summary.csv", write_file("summary.csv", [&](std::ostream& o) { o << summary; }));
    const std::string reps = repetitions_csv(result.records);
    record("repetitions.csv", write_file("repetitions.csv", [&](std::ostream& o) { o << reps; }));
    if (config.emit_traces) {
      const auto names = PopulationSpec{kSimulationVariables}.column_names();
      record("trace.csv", write_file("trace.csv", [&](std::ostream& o) {
               write_trace_csv(o, result.traces, names);
             }));
    }
    if (manifest.finished_at.empty()) manifest.finished_at = utc_timestamp();
    const std::string json = manifest.to_json();
    write_file("manifest.json", [&](std::ostream& o) { o << json; });
  } catch (const IoError&) {
    cleanup();
    throw;
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw IoError(e.what());
  }
  return manifest;
}

}  // namespace itconv
