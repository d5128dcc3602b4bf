// beamcal: calibration and diagnostics for score-guided beam search.
//
// Subcommands: khat (closed-form width limit), simulate (Monte Carlo beam
// sweeps), validate (theory-vs-simulation checks), diagnose (trace margin
// and inversion analysis), aggregate (macro success tables).
//
// Exit codes: 0 success, 1 validation failure, 2 argument error,
// 3 I/O error, 4 data error.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamcal/beam_sim.hpp"
#include "beamcal/diagnostics.hpp"
#include "beamcal/evt_bias.hpp"
#include "beamcal/random.hpp"
#include "beamcal/special_functions.hpp"
#include "beamcal/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace beamcal;

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitArgumentError = 2;
constexpr int kExitIoError = 3;
constexpr int kExitDataError = 4;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Run manifest: accompanies every output directory as manifest.json so the
// data files themselves stay byte-reproducible under a fixed seed.
struct Manifest {
  std::string subcommand;
  json parameters = json::object();
  std::int64_t seed = 0;
  std::string started_at;
  std::string finished_at;

  json to_json() const {
    return {{"subcommand", subcommand}, {"parameters", parameters},
            {"seed", seed},             {"tool_version", kToolVersion},
            {"started_at", started_at}, {"finished_at", finished_at}};
  }
};

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

fs::path prepare_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
  return fs::path(out);
}

// Optional JSON config file whose keys mirror the long flag names; values
// given on the command line win. Applied per subcommand after parsing.
class ConfigFile {
 public:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    try {
      in >> data_;
    } catch (const json::exception& e) {
      throw DataError("config file '" + path + "': " + e.what());
    }
    if (!data_.is_object()) throw DataError("config file must hold a JSON object");
  }

  template <class T>
  void apply(const CLI::Option* opt, const std::string& key, T& target) const {
    if (opt && opt->count() > 0) return;  // explicit flag wins
    if (!data_.contains(key)) return;
    try {
      target = data_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw DataError("config key '" + key + "': " + e.what());
    }
  }

 private:
  json data_ = json::object();
};

json bias_report_to_json(const TwoClassScorerModel& model, const BiasReport& report,
                         std::optional<int> beam_width, std::optional<int> pool_size) {
  json j;
  j["delta"] = model.delta;
  j["sigma"] = model.sigma;
  j["snr"] = model.delta / model.sigma;
  if (beam_width) j["beam_width"] = *beam_width;
  if (pool_size) {
    j["pool_size"] = *pool_size;
    j["bias_exact"] = report.bias_exact;
    j["bias_approx"] = report.bias_approx;
    j["effective_gap"] = report.effective_gap;
    j["bound"] = report.bound;
    j["bound_vacuous"] = report.bound_vacuous;
    j["criterion_holds"] = report.criterion_holds;
  }
  j["n_hat"] = report.saturated ? json(nullptr) : json(report.n_hat);
  j["k_hat"] = report.k_hat;
  j["saturated"] = report.saturated;
  return j;
}

// ---------------------------------------------------------------- khat ----

int cmd_khat(double delta, double sigma, std::optional<int> k, std::optional<int> n,
             const std::string& format) {
  const TwoClassScorerModel model{delta, sigma, 0.0};
  std::optional<int> pool;
  if (k)
    pool = *k * *k;
  else if (n)
    pool = *n;

  BiasReport report;
  if (pool)
    report = bias_report(model, PoolGeometry::from_pool_size(*pool));
  else {
    const PoolLimit limit = max_useful_pool(model);
    report.n_hat = limit.n_hat;
    report.saturated = limit.saturated;
    report.k_hat = max_useful_beam_width(model);
  }

  if (format == "json") {
    std::cout << bias_report_to_json(model, report, k, pool).dump(2) << "\n";
    return kExitOk;
  }

  auto row = [](const char* name, const std::string& value) {
    std::printf("%-16s %s\n", name, value.c_str());
  };
  row("delta", format_double(delta));
  row("sigma", format_double(sigma));
  row("snr", format_double(delta / sigma));
  if (pool) {
    row("pool_size", std::to_string(*pool));
    row("bias_exact", format_double(report.bias_exact));
    row("bias_approx", format_double(report.bias_approx));
    row("effective_gap", format_double(report.effective_gap));
    row("bound", format_double(report.bound));
    row("bound_vacuous", report.bound_vacuous ? "true" : "false");
    row("criterion_holds", report.criterion_holds ? "true" : "false");
  }
  row("n_hat", report.saturated ? "saturated" : format_double(report.n_hat));
  row("k_hat", report.k_hat == kSaturatedBeamWidth ? "saturated" : std::to_string(report.k_hat));
  return kExitOk;
}

// ------------------------------------------------------------ simulate ----

std::string sweep_csv(const SweepResult& sweep, bool corrected) {
  std::ostringstream out;
  out << "beam_width,success_rate,standard_error,trials";
  if (corrected) out << ",fell_back_rate";
  out << "\n";
  for (const auto& cell : sweep.cells) {
    out << cell.beam_width << ',' << format_double(cell.success_rate) << ','
        << format_double(cell.standard_error) << ',' << cell.trials;
    if (corrected) out << ',' << format_double(cell.fell_back_rate.value_or(0.0));
    out << "\n";
  }
  return out.str();
}

int cmd_simulate(double delta, double sigma, double mu_w, std::vector<int> ks, int depth,
                 std::size_t trials, std::uint64_t seed, const std::string& correction,
                 double continuation, bool margin_log, const std::string& out,
                 int workers) {
  const TwoClassScorerModel model{delta, sigma, mu_w};
  BeamConfig config;
  config.max_depth = depth;
  config.continuation_prob = continuation;
  config.margin_log_enabled = margin_log;
  if (correction == "bias_corrected")
    config.correction = Correction::bias_corrected;
  else if (correction != "none")
    throw std::invalid_argument("correction must be 'none' or 'bias_corrected'");

  Manifest manifest;
  manifest.subcommand = "simulate";
  manifest.seed = static_cast<std::int64_t>(seed);
  manifest.parameters = {{"delta", delta},       {"sigma", sigma},
                         {"mu_w", mu_w},         {"ks", ks},
                         {"depth", depth},       {"trials", trials},
                         {"correction", correction}, {"continuation", continuation},
                         {"margin_log", margin_log}, {"workers", workers}};
  manifest.started_at = utc_timestamp();

  std::vector<SelectionRecord> log;
  const SweepResult sweep = sweep_beam_width(model, ks, config, trials,
                                             RandomStream{seed, 0}, workers,
                                             margin_log ? &log : nullptr);

  const fs::path dir = prepare_out_dir(out);
  write_text_file(dir / "sweep.csv",
                  sweep_csv(sweep, config.correction == Correction::bias_corrected));
  if (margin_log) {
    std::ostringstream jsonl;
    write_selection_jsonl(log, jsonl);
    write_text_file(dir / "selections.jsonl", jsonl.str());
  }
  manifest.finished_at = utc_timestamp();
  write_text_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");

  std::printf("wrote %s (%zu cells)%s\n", (dir / "sweep.csv").c_str(), sweep.cells.size(),
              margin_log ? " and selections.jsonl" : "");
  return kExitOk;
}

// ------------------------------------------------------------ validate ----

struct CheckOutcome {
  int checks = 0;
  int failures = 0;
};

void report_check(CheckOutcome& outcome, bool pass, const std::string& line) {
  ++outcome.checks;
  if (!pass) ++outcome.failures;
  std::printf("%s %s\n", pass ? "PASS" : "FAIL", line.c_str());
}

// Gumbel-mean fidelity against the order-statistic quadrature, m in [3, 64].
void validate_gev(CheckOutcome& outcome) {
  constexpr double kTolerance = 0.02;
  for (int m = 3; m <= 64; ++m) {
    const double approx = bias_exact(1.0, m);
    const double exact = expected_max_normal(m);
    const double rel = std::fabs(approx - exact) / exact;
    char line[160];
    std::snprintf(line, sizeof(line),
                  "gev m=%d bias_exact=%.6f quadrature=%.6f rel_gap=%.4f tol=%.2f", m,
                  approx, exact, rel, kTolerance);
    report_check(outcome, rel <= kTolerance, line);
  }
}

void validate_cantelli(CheckOutcome& outcome, std::size_t trials, std::uint64_t seed,
                       int workers) {
  const double ratios[] = {1.5, 2.0, 2.5, 3.0};
  const int pools[] = {4, 9, 16};
  std::uint64_t stream_index = 0;
  for (double ratio : ratios) {
    for (int n : pools) {
      const TwoClassScorerModel model{ratio, 1.0, 0.0};
      const SuboptimalBound bound = suboptimal_bound(model, n);
      if (bound.vacuous) {
        std::printf("SKIP cantelli snr=%.2f n=%d (effective gap <= 0, bound vacuous)\n",
                    ratio, n);
        continue;
      }
      const auto est = estimate_suboptimal_prob(model, n, trials,
                                                RandomStream{seed, stream_index++}, workers);
      const double limit = bound.probability + 3.0 * est.mc_standard_error;
      char line[160];
      std::snprintf(line, sizeof(line),
                    "cantelli snr=%.2f n=%d empirical=%.5f bound=%.5f margin=%.5f", ratio,
                    n, est.value, bound.probability, limit - est.value);
      report_check(outcome, est.value <= limit, line);
    }
  }
}

void validate_variance(CheckOutcome& outcome, std::size_t trials, std::uint64_t seed,
                       int workers) {
  const int ms[] = {1, 2, 4, 8, 16};
  std::uint64_t stream_index = 100;
  for (int m : ms) {
    struct Acc {
      double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    };
    const Acc acc = run_trial_blocks<Acc>(
        RandomStream{seed, stream_index++}, trials, workers,
        [&](Rng& rng, std::size_t, std::size_t count, Acc& a) {
          for (std::size_t t = 0; t < count; ++t) {
            double best = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < m; ++j) best = std::max(best, rng.next_normal());
            const double b2 = best * best;
            a.s1 += best;
            a.s2 += b2;
            a.s3 += b2 * best;
            a.s4 += b2 * b2;
          }
        },
        [](Acc& a, const Acc& b) {
          a.s1 += b.s1;
          a.s2 += b.s2;
          a.s3 += b.s3;
          a.s4 += b.s4;
        });
    const double n = static_cast<double>(trials);
    const double mean = acc.s1 / n;
    const double var = acc.s2 / n - mean * mean;
    // Central fourth moment for the standard error of the sample variance.
    const double m4 = acc.s4 / n - 4.0 * mean * (acc.s3 / n) + 6.0 * mean * mean * (acc.s2 / n) -
                      3.0 * mean * mean * mean * mean;
    const double se = std::sqrt(std::max(0.0, m4 - var * var) / n);
    const double limit = 1.0 + 3.0 * se;
    char line[160];
    std::snprintf(line, sizeof(line), "variance m=%d var=%.5f limit=%.5f", m, var, limit);
    report_check(outcome, var <= limit, line);
  }
}

int cmd_validate(const std::string& suite, std::size_t trials, std::uint64_t seed,
                 int workers) {
  CheckOutcome outcome;
  if (suite == "gev" || suite == "all") validate_gev(outcome);
  if (suite == "cantelli" || suite == "all") validate_cantelli(outcome, trials, seed, workers);
  if (suite == "variance" || suite == "all") validate_variance(outcome, trials, seed, workers);
  if (outcome.checks == 0) throw std::invalid_argument("unknown suite '" + suite + "'");
  std::printf("%d checks, %d failures\n", outcome.checks, outcome.failures);
  return outcome.failures == 0 ? kExitOk : kExitValidationFailure;
}

// ------------------------------------------------------------ diagnose ----

std::string histogram_csv(const MarginReport& report) {
  std::ostringstream out;
  out << "bin_lower,bin_upper,count\n";
  for (const auto& bin : report.histogram)
    out << format_double(bin.bin_lower) << ',' << format_double(bin.bin_upper) << ','
        << bin.count << "\n";
  return out.str();
}

std::string inversion_csv(const InversionTable& table) {
  std::ostringstream out;
  out << "problem_id,low_k_reward,low_k_correct,high_k_reward,high_k_correct\n";
  for (const auto& row : table.rows)
    out << row.problem_id << ',' << format_double(row.low_k_reward) << ','
        << (row.low_k_correct ? "true" : "false") << ',' << format_double(row.high_k_reward)
        << ',' << (row.high_k_correct ? "true" : "false") << "\n";
  return out.str();
}

int cmd_diagnose(const std::vector<std::string>& inputs, const std::string& format,
                 double threshold, const std::string& results_path, int low_k, int high_k,
                 std::size_t resamples, std::uint64_t seed, const std::string& out) {
  Manifest manifest;
  manifest.subcommand = "diagnose";
  manifest.seed = static_cast<std::int64_t>(seed);
  manifest.parameters = {{"inputs", inputs},   {"format", format},
                         {"threshold", threshold}, {"results", results_path},
                         {"low_k", low_k},     {"high_k", high_k},
                         {"resamples", resamples}};
  manifest.started_at = utc_timestamp();

  std::vector<SelectionRecord> records;
  for (const auto& path : inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read input '" + path + "'");
    try {
      if (format == "text-log") {
        std::stringstream buffer;
        buffer << in.rdbuf();
        auto parsed = parse_beam_select_text(buffer.str());
        records.insert(records.end(), parsed.begin(), parsed.end());
      } else if (format == "jsonl") {
        auto parsed = read_selection_jsonl(in);
        records.insert(records.end(), parsed.begin(), parsed.end());
      } else {
        throw std::invalid_argument("format must be 'text-log' or 'jsonl'");
      }
    } catch (const ParseError& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  if (!inputs.empty() && records.empty()) throw DataError("zero parseable records");
  if (inputs.empty() && results_path.empty())
    throw std::invalid_argument("nothing to diagnose: give --input and/or --results");

  const fs::path dir = prepare_out_dir(out);
  json report_json;

  if (!records.empty()) {
    const MarginReport margins = margin_distribution(records, threshold);
    report_json["margin_report"] = {{"total_selections", margins.total_selections},
                                    {"margin_threshold", margins.margin_threshold},
                                    {"fraction_below", margins.fraction_below},
                                    {"skipped_records", margins.skipped_records}};
    write_text_file(dir / "margin_histogram.csv", histogram_csv(margins));

    // Labeled records allow an SNR estimate and a width recommendation;
    // unlabeled traces only support the dispersion proxy.
    std::vector<LabeledScore> labeled;
    double dispersion_sum = 0.0;
    std::size_t dispersion_count = 0;
    for (const auto& rec : records) {
      if (rec.rewards.size() >= 2) {
        dispersion_sum += estimate_sigma_online(rec.rewards);
        ++dispersion_count;
      }
      if (!rec.correctness || rec.correctness->size() != rec.rewards.size()) continue;
      for (std::size_t i = 0; i < rec.rewards.size(); ++i)
        labeled.push_back({rec.rewards[i], (*rec.correctness)[i]});
    }
    if (dispersion_count > 0)
      report_json["dispersion_proxy"] = {
          {"mean_pool_score_stddev", dispersion_sum / dispersion_count},
          {"caveat",
           "pool score dispersion mixes quality variation with scorer noise; it is a "
           "rough unreliability proxy, not a sigma estimate"}};

    bool recommended = false;
    if (!labeled.empty()) {
      try {
        const SnrEstimate snr = estimate_snr(labeled);
        const BeamWidthRecommendation rec = recommend_beam_width(snr);
        report_json["snr_estimate"] = {{"delta_hat", snr.delta_hat},
                                       {"sigma_hat", snr.sigma_hat},
                                       {"n_correct", snr.n_correct},
                                       {"n_incorrect", snr.n_incorrect}};
        report_json["recommendation"] = {
            {"k_hat", rec.k_hat},
            {"n_hat", rec.saturated ? json(nullptr) : json(rec.n_hat)},
            {"saturated", rec.saturated},
            {"caveats", rec.caveats}};
        recommended = true;
      } catch (const std::invalid_argument&) {
        // fewer than 2 scores in a class; fall through to the proxy note
      }
    }
    if (!recommended)
      report_json["recommendation_omitted"] =
          "correctness labels absent or too sparse; see dispersion_proxy";
  }

  if (!results_path.empty()) {
    std::ifstream in(results_path, std::ios::binary);
    if (!in) throw IoError("cannot read results table '" + results_path + "'");
    ResultsTable table;
    try {
      table = read_results_table(in);
    } catch (const ParseError& e) {
      throw DataError(results_path + ": " + e.what());
    }
    if (table.rows.empty()) throw DataError("results table has no data rows");
    const InversionTable inversions = detect_inversions(table.rows, low_k, high_k);
    write_text_file(dir / "inversions.csv", inversion_csv(inversions));
    report_json["inversions"] = {{"rows", inversions.rows.size()},
                                 {"unmatched_pairs", inversions.unmatched_pairs},
                                 {"low_k", low_k},
                                 {"high_k", high_k}};
    try {
      const PilotComparison pilot =
          pilot_compare(table.rows, low_k, high_k, resamples, RandomStream{seed, 0});
      report_json["pilot"] = {{"k_a", low_k},
                              {"k_b", high_k},
                              {"delta_percent", pilot.delta_percent},
                              {"ci_low", pilot.ci_low},
                              {"ci_high", pilot.ci_high},
                              {"verdict", pilot.verdict},
                              {"paired_problems", pilot.paired_problems}};
    } catch (const std::invalid_argument&) {
      // no problems paired across both widths; inversion output stands alone
    }
  }

  manifest.finished_at = utc_timestamp();
  write_text_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  write_text_file(dir / "margin_report.json", report_json.dump(2) + "\n");
  std::printf("wrote diagnostics to %s\n", dir.c_str());
  return kExitOk;
}

// ----------------------------------------------------------- aggregate ----

int cmd_aggregate(const std::string& results_path, const std::string& out) {
  Manifest manifest;
  manifest.subcommand = "aggregate";
  manifest.parameters = {{"results", results_path}};
  manifest.started_at = utc_timestamp();

  std::ifstream in(results_path, std::ios::binary);
  if (!in) throw IoError("cannot read results table '" + results_path + "'");
  ResultsTable table;
  try {
    table = read_results_table(in);
  } catch (const ParseError& e) {
    throw DataError(results_path + ": " + e.what());
  }
  if (table.rows.empty()) throw DataError("results table has no data rows");

  const MacroSummary summary = aggregate_macro(table.rows);

  std::ostringstream macro_csv;
  macro_csv << "model_name,scorer,beam_width,mean_percent,se_percent,count\n";
  json cells = json::array();
  for (const auto& [key, cell] : summary.cells) {
    const auto& [model, scorer, k] = key;
    macro_csv << model << ',' << to_string(scorer) << ',' << k << ','
              << format_double(cell.mean_percent) << ','
              << format_double(cell.standard_error_percent) << ',' << cell.count << "\n";
    cells.push_back({{"model_name", model},
                     {"scorer", to_string(scorer)},
                     {"beam_width", k},
                     {"mean_percent", cell.mean_percent},
                     {"se_percent", cell.standard_error_percent},
                     {"count", cell.count}});
  }
  std::ostringstream deltas_csv;
  deltas_csv << "model_name,scorer,delta_percent\n";
  json deltas = json::array();
  for (const auto& [key, value] : summary.deltas) {
    deltas_csv << key.first << ',' << to_string(key.second) << ',' << format_double(value)
               << "\n";
    deltas.push_back(
        {{"model_name", key.first}, {"scorer", to_string(key.second)}, {"delta_percent", value}});
  }

  const fs::path dir = prepare_out_dir(out);
  write_text_file(dir / "macro.csv", macro_csv.str());
  write_text_file(dir / "deltas.csv", deltas_csv.str());
  json combined = {{"cells", cells},
                   {"deltas", deltas},
                   {"warnings", summary.warnings},
                   {"duplicate_row_warnings", table.duplicate_warnings}};
  write_text_file(dir / "macro.json", combined.dump(2) + "\n");
  manifest.finished_at = utc_timestamp();
  write_text_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  std::printf("wrote macro tables to %s\n", dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration toolkit for score-guided beam search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; keys mirror long flag names");

  // khat
  auto* khat = app.add_subcommand("khat", "Closed-form maximum useful beam width");
  double kh_delta = 0.0, kh_sigma = 0.0;
  int kh_k = 0, kh_n = 0;
  std::string kh_format = "table";
  auto* kh_delta_opt = khat->add_option("--delta", kh_delta, "quality gap (> 0)");
  auto* kh_sigma_opt = khat->add_option("--sigma", kh_sigma, "scorer noise (> 0)");
  auto* kh_k_opt = khat->add_option("--k", kh_k, "beam width (pool = k^2)");
  auto* kh_n_opt = khat->add_option("--n", kh_n, "candidate pool size");
  auto* kh_format_opt =
      khat->add_option("--format", kh_format, "table or json")->check(CLI::IsMember({"table", "json"}));

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo beam-width sweep");
  double sim_delta = 1.0, sim_sigma = 1.0, sim_mu_w = 0.0, sim_continuation = 1.0;
  std::vector<int> sim_ks = {1, 2, 3, 4};
  int sim_depth = 24, sim_workers = 0;
  std::size_t sim_trials = 1000;
  std::uint64_t sim_seed = 7;
  std::string sim_correction = "none", sim_out = "sim_out";
  bool sim_margin_log = false;
  auto* sim_delta_opt = simulate->add_option("--delta", sim_delta, "quality gap");
  auto* sim_sigma_opt = simulate->add_option("--sigma", sim_sigma, "scorer noise");
  auto* sim_mu_w_opt = simulate->add_option("--mu-w", sim_mu_w, "incorrect-type true quality");
  auto* sim_ks_opt =
      simulate->add_option("--ks", sim_ks, "beam widths to sweep")->delimiter(',');
  auto* sim_depth_opt = simulate->add_option("--depth", sim_depth, "search depth");
  auto* sim_trials_opt = simulate->add_option("--trials", sim_trials, "trials per cell");
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "master seed");
  auto* sim_corr_opt = simulate->add_option("--correction", sim_correction,
                                            "none or bias_corrected");
  auto* sim_cont_opt = simulate->add_option("--continuation", sim_continuation,
                                            "per-step correct-continuation probability");
  auto* sim_margin_opt =
      simulate->add_flag("--margin-log", sim_margin_log, "emit selections.jsonl");
  auto* sim_out_opt = simulate->add_option("--out", sim_out, "output directory");
  auto* sim_workers_opt = simulate->add_option("--workers", sim_workers, "worker cap")
                              ->envname("BEAMCAL_WORKERS");

  // validate
  auto* validate = app.add_subcommand("validate", "Theory-vs-simulation check suites");
  std::string val_suite = "all";
  std::size_t val_trials = 1000000;
  std::uint64_t val_seed = 7;
  int val_workers = 0;
  auto* val_suite_opt = validate->add_option("--suite", val_suite, "gev, cantelli, variance or all");
  auto* val_trials_opt = validate->add_option("--trials", val_trials, "Monte Carlo trials per check");
  auto* val_seed_opt = validate->add_option("--seed", val_seed, "master seed");
  auto* val_workers_opt = validate->add_option("--workers", val_workers, "worker cap")
                              ->envname("BEAMCAL_WORKERS");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Margin, inversion and SNR diagnostics");
  std::vector<std::string> diag_inputs;
  std::string diag_format = "text-log", diag_results, diag_out = "diag_out";
  double diag_threshold = 0.1;
  int diag_low_k = 1, diag_high_k = 4;
  std::size_t diag_resamples = 1000;
  std::uint64_t diag_seed = 7;
  auto* diag_inputs_opt =
      diagnose->add_option("--input", diag_inputs, "selection trace file(s)");
  auto* diag_format_opt = diagnose->add_option("--format", diag_format, "text-log or jsonl")
                              ->check(CLI::IsMember({"text-log", "jsonl"}));
  auto* diag_threshold_opt =
      diagnose->add_option("--threshold", diag_threshold, "margin threshold");
  auto* diag_results_opt =
      diagnose->add_option("--results", diag_results, "run results table (CSV)");
  auto* diag_low_opt = diagnose->add_option("--low-k", diag_low_k, "baseline beam width");
  auto* diag_high_opt = diagnose->add_option("--high-k", diag_high_k, "wide beam width");
  auto* diag_resamples_opt =
      diagnose->add_option("--resamples", diag_resamples, "bootstrap resamples");
  auto* diag_seed_opt = diagnose->add_option("--seed", diag_seed, "bootstrap seed");
  auto* diag_out_opt = diagnose->add_option("--out", diag_out, "output directory");

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Macro success-rate tables");
  std::string agg_results, agg_out = "agg_out";
  auto* agg_results_opt =
      aggregate->add_option("--results", agg_results, "run results table (CSV)")->required();
  auto* agg_out_opt = aggregate->add_option("--out", agg_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {  // --help, --version
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitArgumentError;
  }

  try {
    ConfigFile config;
    if (!config_path.empty()) config.load(config_path);

    if (khat->parsed()) {
      config.apply(kh_delta_opt, "delta", kh_delta);
      config.apply(kh_sigma_opt, "sigma", kh_sigma);
      config.apply(kh_k_opt, "k", kh_k);
      config.apply(kh_n_opt, "n", kh_n);
      config.apply(kh_format_opt, "format", kh_format);
      if (!(kh_delta > 0.0)) throw std::invalid_argument("--delta must be > 0");
      if (!(kh_sigma > 0.0)) throw std::invalid_argument("--sigma must be > 0");
      if (kh_k_opt->count() > 0 && kh_k < 1) throw std::invalid_argument("--k must be >= 1");
      if (kh_n_opt->count() > 0 && kh_n < 1) throw std::invalid_argument("--n must be >= 1");
      std::optional<int> k, n;
      if (kh_k > 0) k = kh_k;
      if (kh_n > 0) n = kh_n;
      return cmd_khat(kh_delta, kh_sigma, k, n, kh_format);
    }
    if (simulate->parsed()) {
      config.apply(sim_delta_opt, "delta", sim_delta);
      config.apply(sim_sigma_opt, "sigma", sim_sigma);
      config.apply(sim_mu_w_opt, "mu_w", sim_mu_w);
      config.apply(sim_ks_opt, "ks", sim_ks);
      config.apply(sim_depth_opt, "depth", sim_depth);
      config.apply(sim_trials_opt, "trials", sim_trials);
      config.apply(sim_seed_opt, "seed", sim_seed);
      config.apply(sim_corr_opt, "correction", sim_correction);
      config.apply(sim_cont_opt, "continuation", sim_continuation);
      config.apply(sim_margin_opt, "margin_log", sim_margin_log);
      config.apply(sim_out_opt, "out", sim_out);
      config.apply(sim_workers_opt, "workers", sim_workers);
      return cmd_simulate(sim_delta, sim_sigma, sim_mu_w, sim_ks, sim_depth, sim_trials,
                          sim_seed, sim_correction, sim_continuation, sim_margin_log,
                          sim_out, sim_workers);
    }
    if (validate->parsed()) {
      config.apply(val_suite_opt, "suite", val_suite);
      config.apply(val_trials_opt, "trials", val_trials);
      config.apply(val_seed_opt, "seed", val_seed);
      config.apply(val_workers_opt, "workers", val_workers);
      return cmd_validate(val_suite, val_trials, val_seed, val_workers);
    }
    if (diagnose->parsed()) {
      config.apply(diag_inputs_opt, "input", diag_inputs);
      config.apply(diag_format_opt, "format", diag_format);
      config.apply(diag_threshold_opt, "threshold", diag_threshold);
      config.apply(diag_results_opt, "results", diag_results);
      config.apply(diag_low_opt, "low_k", diag_low_k);
      config.apply(diag_high_opt, "high_k", diag_high_k);
      config.apply(diag_resamples_opt, "resamples", diag_resamples);
      config.apply(diag_seed_opt, "seed", diag_seed);
      config.apply(diag_out_opt, "out", diag_out);
      return cmd_diagnose(diag_inputs, diag_format, diag_threshold, diag_results, diag_low_k,
                          diag_high_k, diag_resamples, diag_seed, diag_out);
    }
    if (aggregate->parsed()) {
      config.apply(agg_results_opt, "results", agg_results);
      config.apply(agg_out_opt, "out", agg_out);
      return cmd_aggregate(agg_results, agg_out);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitArgumentError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIoError;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDataError;
  }
  return kExitOk;
}
