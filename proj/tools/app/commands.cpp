// SPDX-License-Identifier: Apache-2.0

#include "app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "app/memo_backend.hpp"
#include "specfunnel/calibration.hpp"
#include "specfunnel/error.hpp"
#include "specfunnel/pipeline.hpp"
#include "specfunnel/remote_backend.hpp"
#include "specfunnel/synthetic_backend.hpp"

namespace specfunnel::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double analytic_speedup(double beta, double alpha) {
  try {
    return speedup_model(beta, alpha);
  } catch (const InfiniteSpeedup&) {
    return kInf;
  }
}

double ratio_or_inf(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? kInf : 1.0;
}

double wall_now() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

// Threads for calls outside serve_batch; the virtual clock never needs more
// than the machine has.
int call_threads(const AppConfig& config, std::size_t n) {
  auto threads = static_cast<std::size_t>(config.schedule.frontend_workers.value_or(static_cast<int>(n)));
  if (config.backend.kind == BackendSection::Kind::Remote) {
    threads = std::min(threads, static_cast<std::size_t>(config.backend.remote.max_in_flight));
  } else {
    threads = std::min<std::size_t>(threads, std::max(1u, std::thread::hardware_concurrency()));
  }
  return static_cast<int>(std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1)));
}

class OutputDir {
 public:
  OutputDir(fs::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

  void write(const std::string& name, std::string_view content) {
    write_text_file(dir_ / name, content);
    manifest_.outputs.push_back(name);
  }

  void finish(double virtual_seconds, bool simulated, double wall_start) {
    if (simulated) {
      manifest_.started_at = iso8601(0.0);
      manifest_.finished_at = iso8601(virtual_seconds);
    } else {
      manifest_.started_at = iso8601(wall_start);
      manifest_.finished_at = iso8601(wall_now());
    }
    manifest_.outputs.push_back("manifest.json");
    write_text_file(dir_ / "manifest.json", to_json(manifest_).dump(2) + "\n");
  }

 private:
  fs::path dir_;
  RunManifest& manifest_;
};

RunManifest start_manifest(const AppConfig& config, const std::string& command) {
  RunManifest m;
  m.config_digest = config_digest(config);
  m.seed = config.seed;
  m.command = command;
  m.run_id = sha256_hex(m.config_digest + "|" + command).substr(0, 16);
  return m;
}

std::string outcomes_jsonl(const std::vector<BatchResult>& batches) {
  std::ostringstream out;
  for (const auto& b : batches) write_jsonl<QueryOutcome>(out, b.outcomes);
  return out.str();
}

std::string stats_jsonl(const std::vector<BatchResult>& batches, json& manifest_batches) {
  std::ostringstream out;
  for (const auto& b : batches) {
    check_counting_identities(b.stats);
    const json j = b.stats;
    out << j.dump() << '\n';
    manifest_batches.push_back(j);
  }
  return out.str();
}

std::string summary_csv(const csv::Summary& s) {
  std::ostringstream out;
  csv::write_summary(out, s);
  return out.str();
}

double total_makespan(const std::vector<BatchResult>& batches) {
  double t = 0.0;
  for (const auto& b : batches) t += b.stats.batch_makespan_s;
  return t;
}

bool any_failed(const std::vector<BatchResult>& batches) {
  for (const auto& b : batches) {
    for (const auto& o : b.outcomes) {
      if (o.failed) return true;
    }
  }
  return false;
}

// Writes outcomes, stats, summary and manifest for a served workload.
int emit_run(const AppConfig& config, const std::vector<BatchResult>& batches, RunManifest& manifest,
             const fs::path& out_dir, double wall_start, std::ostream& log) {
  OutputDir out(out_dir, manifest);
  out.write("outcomes.jsonl", outcomes_jsonl(batches));
  out.write("funnel_stats.jsonl", stats_jsonl(batches, manifest.batches));
  const auto summary = summarize(batches);
  out.write("summary.csv", summary_csv(summary));
  const bool simulated = config.schedule.mode == ClockMode::Simulated;
  out.finish(total_makespan(batches), simulated, wall_start);

  log << fmt::format("{} queries in {} batch(es): accuracy {}, beta {}, alpha {}, speedup {} (analytic {})\n",
                     summary.queries, summary.batches, format_double(summary.accuracy),
                     format_double(summary.beta_hat), format_double(summary.alpha_hat),
                     format_double(summary.measured_speedup), format_double(summary.analytic_speedup));
  if (!simulated && any_failed(batches)) {
    log << "error: agentic backend failed for at least one query\n";
    return kExitBackend;
  }
  return kExitOk;
}

struct SweepRow {
  double acceptance_rate = 0.0;
  double accuracy = 0.0;
  double simulated_speedup = 0.0;
  double analytic_speedup = 0.0;
};

SweepRow sweep_row(const std::vector<BatchResult>& batches) {
  const auto s = summarize(batches);
  return {s.alpha_hat, s.accuracy, s.measured_speedup, s.analytic_speedup};
}

std::string row_cells(std::initializer_list<std::string> cells) {
  const std::vector<std::string> v(cells);
  return csv::row(v);
}

}  // namespace

int guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const DegenerateDistribution& e) {
    err << "degenerate statistics: " << e.what() << " (point mass at " << format_double(e.point_mass()) << ")\n";
    return kExitDegenerate;
  } catch (const InfiniteSpeedup& e) {
    err << "degenerate statistics: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const BackendUnavailable& e) {
    err << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

Axis parse_axis(std::string_view s) {
  if (s == "threshold") return Axis::Threshold;
  if (s == "batch_size") return Axis::BatchSize;
  if (s == "top_k") return Axis::TopK;
  throw ValidationError(fmt::format("unknown ablation axis '{}' (threshold|batch_size|top_k)", s));
}

std::string_view to_string(Axis a) noexcept {
  switch (a) {
    case Axis::Threshold:
      return "threshold";
    case Axis::BatchSize:
      return "batch_size";
    case Axis::TopK:
      return "top_k";
  }
  return "?";
}

std::vector<Query> build_workload(const AppConfig& config) {
  if (!config.workload.queries_path.empty()) {
    auto queries = read_records<Query>(config.workload.queries_path);
    if (queries.empty()) throw ValidationError("workload.queries_path: no queries");
    return queries;
  }
  return make_workload(config.synthetic, config.workload.size, config.workload.quota);
}

std::unique_ptr<Backend> make_backend(const AppConfig& config) {
  if (config.backend.kind == BackendSection::Kind::Synthetic) {
    return std::make_unique<SyntheticBackend>(config.synthetic);
  }
  if (config.backend.remote.endpoint.empty()) {
    throw ValidationError(fmt::format("backend.endpoint: not set (use --endpoint or {})", kEndpointEnvVar));
  }
  std::optional<fs::path> log_path;
  if (!config.backend.log_path.empty()) log_path = config.backend.log_path;
  return std::make_unique<RemoteBackend>(config.backend.remote, log_path);
}

std::vector<BatchResult> execute_run(std::span<const Query> queries, const AppConfig& config, Backend& backend,
                                     bool bypass) {
  if (queries.empty()) throw ValidationError("workload is empty");
  const auto batch = static_cast<std::size_t>(config.schedule.batch_size.value_or(static_cast<int>(queries.size())));
  std::vector<BatchResult> results;
  for (std::size_t start = 0; start < queries.size(); start += batch) {
    const auto slice = queries.subspan(start, std::min(batch, queries.size() - start));
    const auto schedule = config.schedule.for_batch(slice.size());
    results.push_back(bypass ? serve_batch(slice, config.gate, schedule, backend)
                             : serve_batch_baseline(slice, schedule, backend));
  }
  return results;
}

csv::Summary summarize(const std::vector<BatchResult>& batches) {
  csv::Summary s;
  if (batches.empty()) return s;
  s.mode = std::string(to_string(batches.front().stats.mode));
  s.batches = static_cast<int>(batches.size());
  int toolfree = 0;
  int accepted = 0;
  int scored = 0;
  int correct = 0;
  double latency = 0.0;
  double judge_sum = 0.0;
  int judged = 0;
  double speculate_sum = 0.0;
  int speculated = 0;
  double agentic_sum = 0.0;
  int fell_back = 0;
  for (const auto& b : batches) {
    s.queries += b.stats.batch_size;
    toolfree += b.stats.n_toolfree;
    accepted += b.stats.n_accepted;
    s.batch_makespan_s += b.stats.batch_makespan_s;
    s.baseline_makespan_s += b.stats.baseline_makespan_s;
    for (const auto& o : b.outcomes) {
      latency += o.total_latency_s;
      if (o.correct) {
        ++scored;
        correct += *o.correct ? 1 : 0;
      }
      if (o.path != Path::AgenticOnly) {
        judge_sum += o.latency.judge_s;
        ++judged;
      }
      if (o.path == Path::SpeculationAccepted || o.path == Path::SpeculationRejected) {
        speculate_sum += o.latency.speculate_s;
        ++speculated;
      }
      if (o.path != Path::SpeculationAccepted) {
        agentic_sum += o.latency.agentic_s;
        ++fell_back;
      }
    }
  }
  const double n = s.queries;
  s.accuracy = scored ? static_cast<double>(correct) / scored : std::numeric_limits<double>::quiet_NaN();
  s.beta_hat = toolfree / n;
  s.alpha_hat = static_cast<double>(accepted) / std::max(toolfree, 1);
  s.throughput_qps = s.batch_makespan_s > 0.0 ? n / s.batch_makespan_s : kInf;
  s.measured_speedup = ratio_or_inf(s.baseline_makespan_s, s.batch_makespan_s);
  s.analytic_speedup = analytic_speedup(s.beta_hat, s.alpha_hat);
  s.mean_latency_s = latency / n;
  s.expected_latency_s = expected_latency(s.beta_hat, s.alpha_hat, judged ? judge_sum / judged : 0.0,
                                          speculated ? speculate_sum / speculated : 0.0,
                                          fell_back ? agentic_sum / fell_back : 0.0);
  return s;
}

json to_json(const RunManifest& m) {
  return json{{"run_id", m.run_id},     {"config_digest", m.config_digest}, {"seed", m.seed},
              {"command", m.command},   {"outputs", m.outputs},
              {"timestamps", {{"started", m.started_at}, {"finished", m.finished_at}}},
              {"batches", m.batches},   {"details", m.details}};
}

std::string iso8601(double seconds_since_epoch) {
  auto whole = static_cast<std::time_t>(std::floor(seconds_since_epoch));
  auto millis = std::llround((seconds_since_epoch - static_cast<double>(whole)) * 1000.0);
  if (millis >= 1000) {
    ++whole;
    millis -= 1000;
  }
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(whole), millis);
}

int cmd_run(const AppConfig& base, const RunOptions& options, std::ostream& log) {
  const double wall_start = wall_now();
  AppConfig config = base;
  json calibration_info = nullptr;
  if (options.calibration) {
    std::ifstream in(*options.calibration);
    if (!in) throw ValidationError(fmt::format("cannot open calibration '{}'", options.calibration->string()));
    const json artifact = json::parse(in);
    const auto digest = artifact.at("config_digest").get<std::string>();
    const bool drift = digest != config_digest(config);
    if (drift) {
      log << "warning: configuration differs from the one the calibration was made with (digest "
          << digest.substr(0, 12) << " vs " << config_digest(config).substr(0, 12) << ")\n";
    }
    if (artifact.at("strategy").get<std::string>() != to_string(config.gate.strategy) ||
        artifact.at("k").get<int>() != config.gate.k) {
      log << "warning: calibration was made for a different gate strategy or k\n";
    }
    config.gate.tau = artifact.at("tau").get<double>();
    config.validate();
    calibration_info = json{{"config_digest", digest}, {"tau", config.gate.tau}, {"drift", drift}};
  }

  const auto queries = build_workload(config);
  auto backend = make_backend(config);
  const auto batches = execute_run(queries, config, *backend, options.bypass);

  auto manifest = start_manifest(config, options.bypass ? "run" : "run --bypass off");
  manifest.details["bypass"] = options.bypass;
  manifest.details["tau"] = config.gate.tau;
  if (!calibration_info.is_null()) manifest.details["calibration"] = calibration_info;
  return emit_run(config, batches, manifest, options.out_dir, wall_start, log);
}

int cmd_replay(const AppConfig& base, const fs::path& log_path, const RunOptions& options, std::ostream& log) {
  const double wall_start = wall_now();
  AppConfig config = base;
  ReplayBackend replay(log_path, config.backend.remote.top_logprobs, config.backend.remote.max_steps);
  if (replay.queries().empty()) throw ValidationError(fmt::format("{}: no logged queries", log_path.string()));
  const auto batches = execute_run(replay.queries(), config, replay, options.bypass);

  auto manifest = start_manifest(config, "replay");
  manifest.details["log"] = log_path.filename().string();
  manifest.details["bypass"] = options.bypass;
  return emit_run(config, batches, manifest, options.out_dir, wall_start, log);
}

int cmd_calibrate(const AppConfig& config, const fs::path& out_dir, std::ostream& log) {
  const double wall_start = wall_now();
  const auto queries = build_workload(config);
  auto inner = make_backend(config);
  MemoBackend backend(*inner);

  const auto collection = collect_scores(queries, config.gate, backend, call_threads(config, queries.size()));
  if (collection.samples.empty()) {
    throw DegenerateDistribution("calibration: no query was judged tool-free", 0.0);
  }

  // Agentic-only pass: fallback accuracy and the mean agentic latency.
  const auto baseline = serve_batch_baseline(queries, config.schedule.for_batch(queries.size()), backend);
  int agentic_correct = 0;
  double agentic_latency = 0.0;
  for (const auto& o : baseline.outcomes) {
    agentic_correct += o.correct.value_or(false) ? 1 : 0;
    agentic_latency += o.latency.agentic_s;
  }
  const double n = static_cast<double>(queries.size());
  const double fallback_accuracy = agentic_correct / n;
  const double baseline_accuracy = config.calibration.baseline_accuracy.value_or(fallback_accuracy);
  const CostModel costs{collection.mean_judge_s, collection.mean_speculate_s, agentic_latency / n};

  const auto taus = threshold_grid(collection.samples, config.calibration.num_taus);
  const auto points = sweep_threshold(collection.samples, taus, costs, collection.beta_hat(), fallback_accuracy);
  const auto choice = choose_threshold(points, baseline_accuracy);

  std::vector<double> correct_scores;
  std::vector<double> incorrect_scores;
  for (const auto& s : collection.samples) (s.correct ? correct_scores : incorrect_scores).push_back(s.score);

  auto manifest = start_manifest(config, "calibrate");
  OutputDir out(out_dir, manifest);
  {
    std::ostringstream csv_out;
    csv::write_scores(csv_out, collection.samples);
    out.write("scores.csv", csv_out.str());
  }
  {
    std::ostringstream csv_out;
    csv::write_operating_points(csv_out, points);
    out.write("operating_points.csv", csv_out.str());
  }

  json bandwidths = json::object();
  std::optional<KdeCurve> kde_correct;
  std::optional<KdeCurve> kde_incorrect;
  auto try_kde = [&](const std::vector<double>& scores, const char* label, std::optional<KdeCurve>& curve) {
    try {
      curve = kde(scores);
    } catch (const DegenerateDistribution& e) {
      log << fmt::format("note: {} scores are degenerate ({}); KDE skipped\n", label, e.what());
      bandwidths[label] = nullptr;
      return;
    }
    bandwidths[label] = curve->bandwidth;
    std::ostringstream csv_out;
    csv::write_kde(csv_out, *curve);
    out.write(fmt::format("kde_{}.csv", label), csv_out.str());
  };
  try_kde(correct_scores, "correct", kde_correct);
  try_kde(incorrect_scores, "incorrect", kde_incorrect);

  json peak = nullptr;
  if (kde_correct && kde_incorrect) peak = std::abs(kde_correct->mode() - kde_incorrect->mode());
  json mean_gap = nullptr;
  if (!correct_scores.empty() && !incorrect_scores.empty()) mean_gap = mean_distance(correct_scores, incorrect_scores);

  const auto ub = union_bound_report(collection, config.calibration.union_bound_bins);
  json bins = json::array();
  for (const auto& b : ub.bins) {
    bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"tokens", b.tokens}, {"error_rate", b.error_rate}});
  }
  out.write("union_bound.json", json{{"bins", bins},
                                     {"monotone", ub.monotone},
                                     {"mean_union_bound", ub.mean_union_bound},
                                     {"observed_error", ub.observed_error}}
                                        .dump(2) +
                                    "\n");

  const auto& p = choice.point;
  const json artifact{
      {"config_digest", manifest.config_digest},
      {"strategy", to_string(config.gate.strategy)},
      {"k", config.gate.k},
      {"tau", p.tau},
      {"no_safe_point", choice.no_safe_point},
      {"operating_point",
       {{"tau", p.tau},
        {"acceptance_rate", p.acceptance_rate},
        {"accuracy", p.accuracy},
        {"analytic_speedup", std::isfinite(p.analytic_speedup) ? json(p.analytic_speedup) : json(nullptr)},
        {"expected_latency_s", p.expected_latency_s}}},
      {"baseline_accuracy", baseline_accuracy},
      {"fallback_accuracy", fallback_accuracy},
      {"beta_hat", collection.beta_hat()},
      {"samples", collection.samples.size()},
      {"excluded", collection.excluded},
      {"peak_distance", peak},
      {"mean_distance", mean_gap},
      {"kde_bandwidth", bandwidths},
  };
  out.write("calibration.json", artifact.dump(2) + "\n");
  manifest.details["tau"] = p.tau;
  manifest.details["no_safe_point"] = choice.no_safe_point;

  const double virtual_s = baseline.stats.batch_makespan_s +
                           n * costs.c_judge_s + static_cast<double>(collection.samples.size()) * costs.c_speculate_s;
  out.finish(virtual_s, config.schedule.mode == ClockMode::Simulated, wall_start);

  log << fmt::format("tau {} (acceptance {}, accuracy {}, analytic speedup {}){}; peak distance {}\n",
                     format_double(p.tau), format_double(p.acceptance_rate), format_double(p.accuracy),
                     format_double(p.analytic_speedup), choice.no_safe_point ? " [no safe point]" : "",
                     peak.is_null() ? std::string("n/a") : format_double(peak.get<double>()));
  return kExitOk;
}

int cmd_ablate(const AppConfig& base, Axis axis, const fs::path& out_dir, std::ostream& log) {
  const double wall_start = wall_now();
  AppConfig config = base;
  std::ostringstream table;
  double virtual_s = 0.0;
  std::string dump;

  auto account = [&](const std::vector<BatchResult>& batches) { virtual_s += total_makespan(batches); };

  switch (axis) {
    case Axis::Threshold: {
      auto taus = config.ablation.thresholds;
      std::sort(taus.begin(), taus.end());
      const auto queries = build_workload(config);
      auto inner = make_backend(config);
      MemoBackend backend(*inner);
      table << csv::kThresholdAblationHeader << '\n';
      for (double tau : taus) {
        config.gate.tau = tau;
        const auto batches = execute_run(queries, config, backend, true);
        account(batches);
        const auto r = sweep_row(batches);
        table << row_cells({format_double(tau), format_double(r.acceptance_rate), format_double(r.accuracy),
                            format_double(r.simulated_speedup), format_double(r.analytic_speedup)});
      }
      break;
    }
    case Axis::BatchSize: {
      AppConfig sized = config;
      sized.workload.size = config.ablation.batch_workload_size;
      const auto queries = build_workload(sized);
      auto inner = make_backend(sized);
      MemoBackend backend(*inner);
      table << csv::kBatchSizeAblationHeader << '\n';
      for (int b : config.ablation.batch_sizes) {
        sized.schedule.batch_size = b;
        const auto batches = execute_run(queries, sized, backend, true);
        account(batches);
        const auto r = sweep_row(batches);
        table << row_cells({std::to_string(b), format_double(r.accuracy), format_double(r.acceptance_rate),
                            format_double(r.simulated_speedup), format_double(r.analytic_speedup)});
      }
      break;
    }
    case Axis::TopK: {
      const int widest = *std::max_element(config.ablation.top_k.begin(), config.ablation.top_k.end());
      config.synthetic.vocab_k = std::max(config.ablation.top_k_vocab, config.synthetic.vocab_k);
      config.backend.remote.top_logprobs = std::max(config.backend.remote.top_logprobs, widest);
      const auto queries = build_workload(config);
      auto inner = make_backend(config);
      MemoBackend backend(*inner);
      table << csv::kTopKAblationHeader << '\n';
      for (int k : config.ablation.top_k) {
        config.gate.k = k;
        const auto batches = execute_run(queries, config, backend, true);
        account(batches);
        const auto r = sweep_row(batches);
        table << row_cells({std::to_string(k), format_double(r.acceptance_rate), format_double(r.accuracy),
                            format_double(r.simulated_speedup), format_double(r.analytic_speedup)});
      }
      // Every K above scored exactly these logits.
      std::map<std::string, const Query*> by_id;
      for (const auto& q : queries) by_id[q.id] = &q;
      std::ostringstream lines;
      for (const auto& [id, draft] : backend.drafts()) {
        LogitDump d{id, draft.answer, draft.token_logits, false};
        const auto* q = by_id.at(id);
        d.correct = q->ground_truth && answers_match(draft.answer, *q->ground_truth);
        lines << json(d).dump() << '\n';
      }
      dump = lines.str();
      break;
    }
  }

  auto manifest = start_manifest(base, fmt::format("ablate --axis {}", to_string(axis)));
  OutputDir out(out_dir, manifest);
  out.write(fmt::format("ablation_{}.csv", to_string(axis)), table.str());
  if (!dump.empty()) out.write("logits.jsonl", dump);
  out.finish(virtual_s, config.schedule.mode == ClockMode::Simulated, wall_start);
  log << table.str();
  return kExitOk;
}

int cmd_report(const fs::path& dir, std::ostream& out) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ValidationError(fmt::format("{}: no manifest.json", dir.string()));
  const json manifest = json::parse(in);
  out << fmt::format("command        {}\n", manifest.at("command").get<std::string>());
  out << fmt::format("run_id         {}\n", manifest.at("run_id").get<std::string>());
  out << fmt::format("config_digest  {}\n", manifest.at("config_digest").get<std::string>());
  out << fmt::format("seed           {}\n", manifest.at("seed").get<std::uint64_t>());
  out << fmt::format("finished       {}\n", manifest.at("timestamps").at("finished").get<std::string>());

  if (fs::exists(dir / "funnel_stats.jsonl")) {
    const auto stats = read_records<FunnelStats>(dir / "funnel_stats.jsonl");
    for (const auto& s : stats) check_counting_identities(s);
    out << fmt::format("batches        {} (counting identities hold)\n", stats.size());
  }
  if (std::ifstream summary(dir / "summary.csv"); summary) {
    std::string header;
    std::string values;
    std::getline(summary, header);
    std::getline(summary, values);
    std::istringstream hs(header);
    std::istringstream vs(values);
    for (std::string h, v; std::getline(hs, h, ',') && std::getline(vs, v, ',');) {
      out << fmt::format("{:<20} {}\n", h, v);
    }
  }
  if (std::ifstream calib(dir / "calibration.json"); calib) {
    const json c = json::parse(calib);
    out << fmt::format("tau                  {}{}\n", format_double(c.at("tau").get<double>()),
                       c.at("no_safe_point").get<bool>() ? " (no safe point)" : "");
    const auto& peak = c.at("peak_distance");
    out << fmt::format("peak_distance        {}\n", peak.is_null() ? "n/a" : format_double(peak.get<double>()));
  }
  for (const char* name : {"ablation_threshold.csv", "ablation_batch_size.csv", "ablation_top_k.csv"}) {
    if (std::ifstream table(dir / name); table) out << "\n" << name << "\n" << table.rdbuf();
  }
  return kExitOk;
}

}  // namespace specfunnel::app
