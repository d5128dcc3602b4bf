// End-to-end checks of the beamcal binary: exit-code contract, output
// schemas, seed reproducibility. The binary path comes from the build.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return BEAMCAL_CLI_PATH; }

struct CommandResult {
  int exit_code = -1;
  std::string stdout_text;
};

CommandResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "beamcal_cli_stdout.txt";
  const std::string cmd = std::string(cli_path()) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.stdout_text = buffer.str();
  return result;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("beamcal_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

const char* kCaseStudyLog =
    "[BEAM_SELECT] depth=2 | candidates=12\n"
    "  top_rewards=[-3.04, -3.05, -3.18, ...]\n"
    "  #1: reward=-3.0405 [ANS:C] <- SELECTED\n"
    "  #2: reward=-3.0496 [ANS:A] <- REJECTED\n";

const char* kInversionCsv =
    "problem_id,model_name,scorer,beam_width,seed,subject,correct,final_reward\n"
    "cf68a215,mistral,perplexity,1,0,high_school_biology,true,-6.71\n"
    "cf68a215,mistral,perplexity,4,0,high_school_biology,false,-2.84\n"
    "c1eacc33,mistral,perplexity,1,0,high_school_biology,true,-4.65\n"
    "c1eacc33,mistral,perplexity,4,0,high_school_biology,false,-2.19\n"
    "5c9182fd,mistral,perplexity,1,0,high_school_biology,true,-3.70\n"
    "5c9182fd,mistral,perplexity,4,0,high_school_biology,false,-2.53\n"
    "681201fd,mistral,perplexity,1,0,high_school_biology,true,-4.49\n"
    "681201fd,mistral,perplexity,4,0,high_school_biology,false,-2.82\n";

}  // namespace

TEST_CASE("khat reports the endpoints and honors the exit contract") {
  const auto prm = run_cli("khat --delta 2.33 --sigma 1 --format json");
  REQUIRE(prm.exit_code == 0);
  const json j = json::parse(prm.stdout_text);
  CHECK(j.at("k_hat") == 4);
  CHECK(j.at("n_hat").get<double>() == doctest::Approx(16.0963).epsilon(1e-4));

  const auto weak = run_cli("khat --delta 0.1 --sigma 1 --format json");
  REQUIRE(weak.exit_code == 0);
  CHECK(json::parse(weak.stdout_text).at("k_hat") == 1);

  CHECK(run_cli("khat --delta -1 --sigma 1").exit_code == 2);
  CHECK(run_cli("khat --delta 1 --sigma 0").exit_code == 2);
  CHECK(run_cli("khat --delta 1 --sigma 1 --format yaml").exit_code == 2);
  CHECK(run_cli("nosuchcommand").exit_code == 2);
}

TEST_CASE("khat geometry fields appear when k is given") {
  const auto res = run_cli("khat --delta 2.33 --sigma 1 --k 4 --format json");
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.stdout_text);
  CHECK(j.at("pool_size") == 16);
  CHECK(j.at("criterion_holds") == true);
  CHECK(j.at("bound").get<double>() < 1.0);
  CHECK(j.at("bound_vacuous") == false);
}

TEST_CASE("simulate writes a reproducible sweep") {
  const fs::path dir_a = fresh_dir("sim_a");
  const fs::path dir_b = fresh_dir("sim_b");
  const std::string args =
      "simulate --delta 0.4 --sigma 1 --ks 1,2,3 --depth 5 --trials 400 --seed 11 --workers 2 --out ";
  REQUIRE(run_cli(args + dir_a.string()).exit_code == 0);
  REQUIRE(run_cli(args + dir_b.string()).exit_code == 0);

  const std::string csv = slurp(dir_a / "sweep.csv");
  CHECK(csv == slurp(dir_b / "sweep.csv"));  // byte-identical under one seed
  CHECK(csv.rfind("beam_width,success_rate,standard_error,trials\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + one row per k

  const json manifest = json::parse(slurp(dir_a / "manifest.json"));
  CHECK(manifest.at("subcommand") == "simulate");
  CHECK(manifest.at("seed") == 11);
  CHECK(manifest.at("tool_version") == "0.1.0");
  CHECK(manifest.at("parameters").at("trials") == 400);
}

TEST_CASE("simulate emits the fallback-rate column under correction") {
  const fs::path dir = fresh_dir("sim_corr");
  REQUIRE(run_cli("simulate --delta 0.5 --sigma 1 --ks 2 --depth 4 --trials 200 --seed 3 "
                  "--correction bias_corrected --out " +
                  dir.string())
              .exit_code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("beam_width,success_rate,standard_error,trials,fell_back_rate\n", 0) == 0);
  CHECK(run_cli("simulate --correction what --out " + dir.string()).exit_code == 2);
}

TEST_CASE("simulate can log selections as JSONL") {
  const fs::path dir = fresh_dir("sim_log");
  REQUIRE(run_cli("simulate --delta 1 --sigma 1 --ks 2 --depth 3 --trials 5 --seed 9 "
                  "--margin-log --out " +
                  dir.string())
              .exit_code == 0);
  const std::string jsonl = slurp(dir / "selections.jsonl");
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 15);  // 5 trials x depth 3
  const json first = json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(first.at("depth") == 1);
  CHECK(first.at("candidates") == 4);
  CHECK(first.at("rewards").size() == 4);
}

TEST_CASE("simulate rejects unwritable output paths") {
  CHECK(run_cli("simulate --trials 2 --depth 1 --ks 1 --out /dev/null/nope").exit_code == 3);
}

TEST_CASE("validate exit codes reflect the checks") {
  const auto variance = run_cli("validate --suite variance --trials 50000 --workers 2");
  CHECK(variance.exit_code == 0);
  CHECK(variance.stdout_text.find("PASS variance m=1") != std::string::npos);

  const auto cantelli = run_cli("validate --suite cantelli --trials 50000 --workers 2");
  CHECK(cantelli.exit_code == 0);
  CHECK(cantelli.stdout_text.find("SKIP cantelli snr=1.50 n=16") != std::string::npos);

  // The Gumbel-mean fidelity suite reports the known mid-range gap honestly:
  // the two-quantile Gumbel mean sits 2.0-2.6% above the true expected
  // maximum for m in [4, 15], so the 2% tolerance fails there.
  const auto gev = run_cli("validate --suite gev");
  CHECK(gev.exit_code == 1);
  CHECK(gev.stdout_text.find("PASS gev m=3") != std::string::npos);
  CHECK(gev.stdout_text.find("FAIL gev m=5") != std::string::npos);
  CHECK(gev.stdout_text.find("PASS gev m=64") != std::string::npos);

  CHECK(run_cli("validate --suite nonsense --trials 100").exit_code == 2);
}

TEST_CASE("diagnose parses the case-study trace") {
  const fs::path dir = fresh_dir("diag_trace");
  const fs::path log = dir / "trace.log";
  write_file(log, kCaseStudyLog);
  REQUIRE(run_cli("diagnose --input " + log.string() + " --format text-log --out " +
                  dir.string())
              .exit_code == 0);
  const json report = json::parse(slurp(dir / "margin_report.json"));
  CHECK(report.at("margin_report").at("total_selections") == 1);
  CHECK(report.at("margin_report").at("fraction_below") == 1.0);
  CHECK(report.contains("dispersion_proxy"));
  CHECK(report.contains("recommendation_omitted"));  // no labels in the log
  const std::string histogram = slurp(dir / "margin_histogram.csv");
  CHECK(histogram.rfind("bin_lower,bin_upper,count\n", 0) == 0);
}

TEST_CASE("diagnose detects inversions from a results table") {
  const fs::path dir = fresh_dir("diag_inv");
  const fs::path csv = dir / "results.csv";
  write_file(csv, kInversionCsv);
  REQUIRE(run_cli("diagnose --results " + csv.string() + " --low-k 1 --high-k 4 --out " +
                  dir.string())
              .exit_code == 0);
  const std::string inversions = slurp(dir / "inversions.csv");
  CHECK(inversions.rfind("problem_id,low_k_reward,low_k_correct,high_k_reward,high_k_correct\n",
                         0) == 0);
  CHECK(std::count(inversions.begin(), inversions.end(), '\n') == 5);  // header + 4 rows
  CHECK(inversions.find("cf68a215,-6.71") != std::string::npos);
  const json report = json::parse(slurp(dir / "margin_report.json"));
  CHECK(report.at("inversions").at("rows") == 4);
  CHECK(report.at("pilot").at("verdict") == "do-not-widen");  // k=4 loses everywhere
}

TEST_CASE("diagnose labeled JSONL yields a recommendation") {
  const fs::path dir = fresh_dir("diag_jsonl");
  const fs::path jsonl = dir / "selections.jsonl";
  std::ostringstream lines;
  for (int i = 0; i < 40; ++i)
    lines << "{\"depth\":1,\"candidates\":2,\"rewards\":[" << 2.33 + 0.01 * i << ","
          << 0.01 * i << "],\"selected_rank\":0,\"correctness\":[true,false]}\n";
  write_file(jsonl, lines.str());
  REQUIRE(run_cli("diagnose --input " + jsonl.string() + " --format jsonl --out " +
                  dir.string())
              .exit_code == 0);
  const json report = json::parse(slurp(dir / "margin_report.json"));
  CHECK(report.contains("snr_estimate"));
  CHECK(report.at("recommendation").at("k_hat").get<int>() >= 1);
  CHECK_FALSE(report.at("recommendation").at("caveats").empty());
}

TEST_CASE("diagnose data-error paths") {
  const fs::path dir = fresh_dir("diag_err");
  const fs::path empty = dir / "empty.log";
  write_file(empty, "");
  CHECK(run_cli("diagnose --input " + empty.string() + " --out " + dir.string()).exit_code == 4);

  const fs::path bad = dir / "bad.log";
  write_file(bad, "[BEAM_SELECT] depth=2 | candidates=0\n");
  CHECK(run_cli("diagnose --input " + bad.string() + " --out " + dir.string()).exit_code == 4);

  CHECK(run_cli("diagnose --input /nonexistent/trace.log --out " + dir.string()).exit_code == 3);
  CHECK(run_cli("diagnose --out " + dir.string()).exit_code == 2);  // nothing to do
}

TEST_CASE("aggregate reproduces fixture deltas end to end") {
  const fs::path dir = fresh_dir("agg");
  // two (subject, seed) cells per configuration, built to hit the headline
  // numbers exactly
  std::ostringstream csv;
  csv << "problem_id,model_name,scorer,beam_width,seed,subject,correct,final_reward\n";
  int id = 0;
  auto add = [&](const std::string& model, const std::string& scorer, int k, int per_mille) {
    const int first = per_mille / 2, second = per_mille - first;
    const std::vector<std::pair<std::string, int>> cells = {{"algebra", first},
                                                            {"biology", second}};
    for (const auto& [subject, wins] : cells)
      for (int i = 0; i < 500; ++i)
        csv << "p" << id++ << ',' << model << ',' << scorer << ',' << k << ",0," << subject
            << ',' << (i < wins ? "true" : "false") << ",-1\n";
  };
  add("llama", "perplexity", 1, 597);
  add("llama", "perplexity", 4, 543);
  add("mistral", "prm", 1, 423);
  add("mistral", "prm", 4, 512);
  const fs::path results = dir / "results.csv";
  write_file(results, csv.str());

  REQUIRE(run_cli("aggregate --results " + results.string() + " --out " + dir.string())
              .exit_code == 0);
  const std::string macro = slurp(dir / "macro.csv");
  CHECK(macro.rfind("model_name,scorer,beam_width,mean_percent,se_percent,count\n", 0) == 0);
  const json combined = json::parse(slurp(dir / "macro.json"));
  REQUIRE(combined.at("deltas").size() == 2);
  for (const auto& d : combined.at("deltas")) {
    if (d.at("model_name") == "llama")
      CHECK(d.at("delta_percent").get<double>() == doctest::Approx(-5.4).epsilon(1e-9));
    else
      CHECK(d.at("delta_percent").get<double>() == doctest::Approx(8.9).epsilon(1e-9));
  }

  const fs::path header_only = dir / "empty.csv";
  write_file(header_only,
             "problem_id,model_name,scorer,beam_width,seed,subject,correct,final_reward\n");
  CHECK(run_cli("aggregate --results " + header_only.string() + " --out " + dir.string())
            .exit_code == 4);

  const fs::path bad = dir / "bad.csv";
  write_file(bad, "problem_id,model_name\np,x\n");
  CHECK(run_cli("aggregate --results " + bad.string() + " --out " + dir.string()).exit_code == 4);
  CHECK(run_cli("aggregate --results /nonexistent.csv --out " + dir.string()).exit_code == 3);
}

TEST_CASE("config file supplies defaults, flags win") {
  const fs::path dir = fresh_dir("config");
  const fs::path config = dir / "config.json";
  write_file(config, "{\"delta\": 2.33, \"sigma\": 1.0, \"format\": \"json\"}");

  const auto from_config = run_cli("--config " + config.string() + " khat");
  REQUIRE(from_config.exit_code == 0);
  CHECK(json::parse(from_config.stdout_text).at("k_hat") == 4);

  const auto overridden = run_cli("--config " + config.string() + " khat --delta 0.5");
  REQUIRE(overridden.exit_code == 0);
  CHECK(json::parse(overridden.stdout_text).at("k_hat") == 1);

  write_file(config, "not json");
  CHECK(run_cli("--config " + config.string() + " khat --delta 1").exit_code == 4);
}

TEST_CASE("simulate stock defaults produce the documented sweep") {
  const fs::path dir = fresh_dir("sim_defaults");
  REQUIRE(run_cli("simulate --out " + dir.string()).exit_code == 0);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + ks 1..4
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("parameters").at("trials") == 1000);
  CHECK(manifest.at("parameters").at("depth") == 24);
  CHECK(manifest.at("parameters").at("ks") == json::array({1, 2, 3, 4}));
}

TEST_CASE("khat accepts a pool size in place of a beam width") {
  const auto by_k = run_cli("khat --delta 2.33 --sigma 1 --k 4 --format json");
  const auto by_n = run_cli("khat --delta 2.33 --sigma 1 --n 16 --format json");
  REQUIRE(by_k.exit_code == 0);
  REQUIRE(by_n.exit_code == 0);
  const json a = json::parse(by_k.stdout_text);
  const json b = json::parse(by_n.stdout_text);
  CHECK(a.at("pool_size") == b.at("pool_size"));
  CHECK(a.at("bias_exact") == b.at("bias_exact"));
  CHECK(a.at("bound") == b.at("bound"));
}

TEST_CASE("help and version use the success exit code") {
  CHECK(run_cli("--version").exit_code == 0);
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("").exit_code == 2);  // a subcommand is required
}
