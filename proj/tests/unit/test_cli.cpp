// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "app/commands.hpp"
#include "app/config.hpp"
#include "specfunnel/error.hpp"
#include "specfunnel/records.hpp"

namespace fs = std::filesystem;
using namespace specfunnel;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "specfunnel_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI binary; returns its exit code. stderr lands in <out>.stderr.
int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SPECFUNNEL_CLI_PATH) + " " + args + " >" + log.string() + ".stdout 2>" +
                          log.string() + ".stderr";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

std::string write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p.string();
}

}  // namespace

TEST_CASE("config precedence: defaults < file < --set < flags") {
  const auto dir = scratch("precedence");
  const auto path = write_config(dir, json{{"seed", 11}, {"gate", {{"tau", 0.9}, {"k", 32}}}});
  app::LoadOptions opts;
  opts.config_path = path;
  auto c = app::load_config(opts);
  CHECK(c.seed == 11);
  CHECK(c.synthetic.seed == 11);
  CHECK(c.gate.tau == 0.9);
  CHECK(c.gate.k == 32);
  CHECK(c.gate.strategy == Strategy::Min);  // untouched default in the same section

  opts.overrides = {"gate.tau=0.95", "seed=12", "gate.strategy=mean"};
  c = app::load_config(opts);
  CHECK(c.gate.tau == 0.95);
  CHECK(c.seed == 12);
  CHECK(c.gate.strategy == Strategy::Mean);

  opts.seed = 13;
  c = app::load_config(opts);
  CHECK(c.seed == 13);
  CHECK(c.synthetic.seed == 13);
}

TEST_CASE("config errors carry field paths") {
  app::LoadOptions opts;
  opts.overrides = {"gate.tau=2"};
  CHECK_THROWS_WITH_AS(app::load_config(opts), doctest::Contains("gate.tau"), ValidationError);
  opts.overrides = {"gate.colour=1"};
  CHECK_THROWS_WITH_AS(app::load_config(opts), doctest::Contains("gate"), ValidationError);
  opts.overrides = {"synthetic.seed=3"};
  CHECK_THROWS_WITH_AS(app::load_config(opts), doctest::Contains("seed"), ValidationError);
  opts.overrides = {"no_equals_sign"};
  CHECK_THROWS_AS(app::load_config(opts), ValidationError);
}

TEST_CASE("config digest tracks every resolved field") {
  const auto base = app::load_config({});
  const auto digest = app::config_digest(base);
  CHECK(digest.size() == 64);
  CHECK(app::config_digest(app::load_config({})) == digest);
  for (const char* o : {"gate.tau=0.95", "seed=8", "synthetic.sep_sigma=0.5", "schedule.agentic_workers=2",
                        "ablation.top_k_vocab=256", "workload.size=999"}) {
    app::LoadOptions opts;
    opts.overrides = {o};
    CHECK_MESSAGE(app::config_digest(app::load_config(opts)) != digest, o);
  }
  // JSON round trip preserves the digest.
  CHECK(app::config_digest(app::from_json(app::to_json(base))) == digest);
  CHECK(app::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run outputs are byte-identical across repeats and worker counts") {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  const auto c = scratch("det_c");
  const std::string common = "--seed 5 --set workload.size=300 --set schedule.batch_size=100 ";
  REQUIRE(cli(common + "--out " + a.string() + " run", a / "log") == 0);
  REQUIRE(cli(common + "--out " + b.string() + " run", b / "log") == 0);
  for (const char* f : {"outcomes.jsonl", "funnel_stats.jsonl", "summary.csv", "manifest.json"}) {
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  REQUIRE(cli(common + "--set schedule.frontend_workers=7 --set schedule.agentic_workers=1 --out " + c.string() + " run",
              c / "log") == 0);
  CHECK(slurp(a / "outcomes.jsonl") == slurp(c / "outcomes.jsonl"));

  const auto manifest = json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.at("seed") == 5);
  CHECK(manifest.at("command") == "run");
  CHECK(manifest.at("config_digest").get<std::string>().size() == 64);
  CHECK(manifest.at("outputs").size() == 4);
  CHECK(manifest.at("timestamps").at("started").get<std::string>().back() == 'Z');
  CHECK(lines(a / "funnel_stats.jsonl").size() == 3);
  for (const auto& s : read_records<FunnelStats>(a / "funnel_stats.jsonl")) CHECK_NOTHROW(check_counting_identities(s));
}

TEST_CASE("summary speedup is baseline over funnel makespan") {
  const auto on = scratch("bypass_on");
  const auto off = scratch("bypass_off");
  const std::string common = "--seed 3 --set workload.size=400 ";
  REQUIRE(cli(common + "--out " + on.string() + " run --bypass on", on / "log") == 0);
  REQUIRE(cli(common + "--out " + off.string() + " run --bypass off", off / "log") == 0);
  const auto header = split(lines(on / "summary.csv")[0]);
  const auto row_on = split(lines(on / "summary.csv")[1]);
  const auto row_off = split(lines(off / "summary.csv")[1]);
  auto col = [&](const std::vector<std::string>& row, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    REQUIRE(it != header.end());
    return std::stod(row[static_cast<std::size_t>(it - header.begin())]);
  };
  CHECK(col(row_on, "baseline_makespan_s") == doctest::Approx(col(row_off, "batch_makespan_s")).epsilon(1e-12));
  CHECK(col(row_on, "measured_speedup") ==
        doctest::Approx(col(row_off, "batch_makespan_s") / col(row_on, "batch_makespan_s")).epsilon(1e-12));
  CHECK(col(row_off, "measured_speedup") == 1.0);
}

TEST_CASE("quota workload: analytic speedup 2.3148 and simulation within 5%") {
  const auto out = scratch("quota_run");
  const std::string args =
      "--set workload.size=1000 --set 'workload.quota={\"beta\":0.8,\"alpha\":0.71}' --set synthetic.judge_accuracy=1 "
      "--set synthetic.sep_sigma=0 --set synthetic.c_judge_s=0.01 --set synthetic.c_speculate_s=0.04 --out " +
      out.string() + " run";
  REQUIRE(cli(args, out / "log") == 0);
  const auto row = split(lines(out / "summary.csv")[1]);
  const double measured = std::stod(row[9]);
  const double analytic = std::stod(row[10]);
  CHECK(analytic == doctest::Approx(2.3148).epsilon(1e-4));
  CHECK(std::abs(measured / analytic - 1.0) <= 0.05);
}

TEST_CASE("exit codes") {
  const auto out = scratch("exit_codes");
  CHECK(cli("--out " + out.string() + " --set gate.tau=2 run", out / "a") == 2);
  CHECK(cli("--out " + out.string() + " --bogus run", out / "b") == 2);
  CHECK(cli("--out " + out.string() + " ablate --axis sideways", out / "c") == 2);
  CHECK(cli("--config /nonexistent.json run", out / "d") == 2);
  CHECK(slurp(out / "a.stderr").find("gate.tau") != std::string::npos);

  // Measured remote run against a closed port: every fallback fails.
  CHECK(cli("--out " + out.string() +
                " --endpoint http://127.0.0.1:1 --set backend.kind=remote --set backend.timeout_s=1"
                " --set schedule.mode=measured --set workload.size=3 run",
            out / "e") == 3);
  // Remote without any endpoint is a configuration error.
  CHECK(cli("--out " + out.string() + " --set backend.kind=remote --set workload.size=3 run", out / "f") == 2);

  // A workload where no draft is ever produced leaves nothing to calibrate.
  CHECK(cli("--out " + out.string() + " --set synthetic.p_tool_required=1 --set synthetic.judge_accuracy=1"
                " --set workload.size=50 calibrate",
            out / "g") == 4);
}

TEST_CASE("calibrate writes the configured number of operating points") {
  const auto out = scratch("calibrate");
  REQUIRE(cli("--set workload.size=800 --out " + out.string() + " calibrate", out / "log") == 0);
  CHECK(lines(out / "operating_points.csv").size() == 34);
  for (const char* f : {"scores.csv", "kde_correct.csv", "kde_incorrect.csv", "union_bound.json", "calibration.json",
                        "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  CHECK(lines(out / "kde_correct.csv").size() == 513);
  const auto artifact = json::parse(slurp(out / "calibration.json"));
  const double tau = artifact.at("tau");
  CHECK(tau > 0.0);
  CHECK(tau < 1.0);

  const auto custom = scratch("calibrate_17");
  REQUIRE(cli("--set workload.size=300 --set calibration.num_taus=17 --out " + custom.string() + " calibrate",
              custom / "log") == 0);
  CHECK(lines(custom / "operating_points.csv").size() == 18);
}

TEST_CASE("all-correct workload chooses the smallest threshold") {
  const auto out = scratch("all_correct");
  REQUIRE(cli("--set workload.size=300 --set synthetic.draft_accuracy_toolfree=1 --set synthetic.draft_accuracy_toolreq=1"
              " --set synthetic.agentic_accuracy=1 --set synthetic.judge_accuracy=1 --out " +
                  out.string() + " calibrate",
              out / "log") == 0);
  const auto artifact = json::parse(slurp(out / "calibration.json"));
  CHECK_FALSE(artifact.at("no_safe_point").get<bool>());
  const auto rows = lines(out / "operating_points.csv");
  CHECK(artifact.at("tau").get<double>() == std::stod(split(rows[1])[0]));
}

TEST_CASE("calibrated tau fed back into run reproduces the predicted accuracy") {
  const auto cal = scratch("closed_loop_cal");
  const auto run = scratch("closed_loop_run");
  const std::string common = "--seed 21 --set workload.size=10000 ";
  REQUIRE(cli(common + "--out " + cal.string() + " calibrate", cal / "log") == 0);
  REQUIRE(cli(common + "--out " + run.string() + " run --calibration " + (cal / "calibration.json").string(),
              run / "log") == 0);
  const auto artifact = json::parse(slurp(cal / "calibration.json"));
  const double predicted = artifact.at("operating_point").at("accuracy");
  const double observed = std::stod(split(lines(run / "summary.csv")[1])[3]);
  CHECK(std::abs(predicted - observed) <= 0.01);
  CHECK(slurp(run / "log.stderr").find("digest") == std::string::npos);
}

TEST_CASE("calibration digest drift is reported") {
  const auto cal = scratch("drift_cal");
  const auto run = scratch("drift_run");
  REQUIRE(cli("--set workload.size=200 --out " + cal.string() + " calibrate", cal / "log") == 0);
  REQUIRE(cli("--set workload.size=201 --out " + run.string() + " run --calibration " +
                  (cal / "calibration.json").string(),
              run / "log") == 0);
  CHECK(slurp(run / "log.stderr").find("digest") != std::string::npos);
}

TEST_CASE("ablations produce their tables") {
  const auto out = scratch("ablate");
  REQUIRE(cli("--set workload.size=400 --out " + out.string() + " ablate --axis threshold", out / "t") == 0);
  const auto rows = lines(out / "ablation_threshold.csv");
  REQUIRE(rows.size() == 9);
  CHECK(rows[0] == csv::kThresholdAblationHeader);
  double previous = 2.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double acceptance = std::stod(split(rows[i])[1]);
    CHECK(acceptance <= previous);
    previous = acceptance;
  }

  REQUIRE(cli("--set workload.size=400 --out " + out.string() + " ablate --axis top_k", out / "k") == 0);
  const auto k_rows = lines(out / "ablation_top_k.csv");
  CHECK(k_rows[0] == csv::kTopKAblationHeader);
  CHECK(k_rows.size() == 6);
  CHECK(fs::exists(out / "logits.jsonl"));

  REQUIRE(cli("--set ablation.batch_sizes=[1,8,64] --set ablation.batch_workload_size=128 --out " + out.string() +
                  " ablate --axis batch_size",
              out / "b") == 0);
  const auto b_rows = lines(out / "ablation_batch_size.csv");
  CHECK(b_rows[0] == csv::kBatchSizeAblationHeader);
  CHECK(b_rows.size() == 4);
}

TEST_CASE("report summarizes an output directory") {
  const auto out = scratch("report");
  REQUIRE(cli("--set workload.size=200 --out " + out.string() + " run", out / "run") == 0);
  REQUIRE(cli("--out " + out.string() + " report", out / "rep") == 0);
  const auto text = slurp(out / "rep.stdout");
  CHECK(text.find("config_digest") != std::string::npos);
  CHECK(text.find("measured_speedup") != std::string::npos);
  const auto empty = scratch("report_empty");
  CHECK(cli("--out " + empty.string() + " report", empty / "rep") == 2);
}
