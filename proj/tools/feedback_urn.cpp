// feedback-urn: closed-form limits, experiment runs, reports and golden checks.

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "feedback/config.hpp"
#include "feedback/error.hpp"
#include "feedback/limits.hpp"
#include "feedback/report.hpp"
#include "feedback/runlog_io.hpp"

namespace fs = std::filesystem;
using namespace feedback;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kCheckFailed = 2;
constexpr int kRuntime = 3;

constexpr const char* kOutEnv = "FEEDBACK_URN_OUT";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string resolve_out_dir(const std::optional<std::string>& flag, const std::optional<std::string>& from_config) {
  if (flag) return *flag;
  if (from_config) return *from_config;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "out";
}

void print_limit(const LimitResult& result) {
  if (const auto* beta = std::get_if<BetaLimit>(&result)) {
    std::cout << "kind: beta\nalpha: " << beta->alpha << "\nbeta: " << beta->beta << "\n";
    std::cout << "result: Beta(" << beta->alpha << ", " << beta->beta << ")\n";
    return;
  }
  const auto& point = std::get<PointMass>(result);
  std::cout << "kind: point\nx_star: " << point.x_star << "\n";
  if (point.degenerate) std::cout << "note: coincident admissible roots, midpoint-nearest chosen\n";
  std::cout << "result: PointMass(" << point.x_star << ")\n";
}

struct LimitArgs {
  std::vector<double> matrix;
  std::vector<double> init{1.0, 1.0};
  bool mixed = false;
  double wd = 0.5, wr = 0.5, da = 0.0, db = 0.0, ra = 0.0, rb = 0.0;
};

int cmd_limit(const LimitArgs& a) {
  std::cout.precision(10);
  if (a.mixed == !a.matrix.empty()) throw UsageError("give exactly one of --matrix or --mixed");
  if (!a.mixed) {
    if (a.matrix.size() != 4) throw UsageError("--matrix needs four values a,b,c,d");
    if (a.init.size() != 2) throw UsageError("--init needs two values");
    print_limit(renlund_limit({a.matrix[0], a.matrix[1], a.matrix[2], a.matrix[3]}, a.init[0], a.init[1]));
    return kOk;
  }
  const MixedParams p(a.wd, a.wr, a.da, a.db, a.ra, a.rb);
  const double x = mixed_limit(p);
  const double reported = p.reported_weight();
  const double delta = p.discovered_differential();
  std::cout << "kind: point\nx_star: " << x << "\n";
  std::cout << "lambda_star: " << p.lambda_star() << "\n";
  std::cout << "kappa: " << p.kappa() << "\n";
  std::cout << "R: " << reported << "\ndelta_d: " << delta << "\n";
  if (reported + delta != 0.0) {
    std::cout << "large_kappa_approx: " << large_kappa_approx(p.lambda_star(), reported, delta) << "\n";
  }
  if (std::isfinite(p.lambda_star())) {
    const KappaForm k = kappa_form(p.lambda_star(), p.kappa());
    std::cout << "kappa_form: " << k.x_star << (k.in_derivation_regime ? "" : " (outside derivation regime)") << "\n";
  }
  std::cout << "result: PointMass(" << x << ")\n";
  return kOk;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> reps;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::string> out;
  bool check = false;
  bool no_plots = false;
  std::vector<std::string> only;
};

// Band CSV and SVG next to a run log; a plotting problem only warns.
void emit_report(const RunLog& log, const fs::path& dir, const std::string& stem, std::optional<double> target,
                 const std::string& y_label) {
  const auto bands = day_bands(log);
  write_text((dir / (stem + ".bands.csv")).string(), format_bands(bands));
  try {
    write_text((dir / (stem + ".svg")).string(), render_band_svg(bands, {stem, y_label, target}));
  } catch (const std::exception& e) {
    std::cerr << "warning: plot for " << stem << " skipped: " << e.what() << "\n";
  }
}

int cmd_run(const RunArgs& a) {
  ConfigFile config = load_config(a.config);
  const fs::path dir = resolve_out_dir(a.out, config.output_dir);
  fs::create_directories(dir);

  std::vector<ScenarioSummary> summaries;
  std::map<std::string, double> iqr_of;
  bool any_error = false;
  for (auto& entry : config.scenarios) {
    ScenarioConfig cfg = entry.config;
    if (!a.only.empty() && std::find(a.only.begin(), a.only.end(), cfg.name) == a.only.end()) continue;
    if (a.seed) cfg.master_seed = *a.seed;
    if (a.reps) cfg.reps = *a.reps;

    ScenarioSummary s;
    s.name = cfg.name;
    s.reps = cfg.reps;
    s.days = cfg.horizon_days;
    const auto start = std::chrono::steady_clock::now();
    std::cerr << "running " << cfg.name << " (" << cfg.reps << " reps x " << cfg.horizon_days << " days)\n";
    try {
      const RunLog log = run_scenario(cfg, a.threads);
      write_runlog((dir / (cfg.name + ".csv")).string(), log, meta_for(cfg));
      s.terminal = spread(log.terminal_values());
      for (std::int64_t r = 0; r < log.reps(); ++r) s.fallbacks += log.fallbacks(r);
      if (entry.check && entry.check->target) s.target = resolve_target(*entry.check->target, cfg);
      if (config.plots && !a.no_plots) {
        try {
          emit_report(log, dir, cfg.name, s.target ? s.target : std::optional<double>(cfg.true_ratio()),
                      cfg.engine == Engine::Urn ? "fraction of " + cfg.regions[0].label
                                                : "P(deploy to " + cfg.regions[0].label + ")");
        } catch (const std::exception& e) {
          std::cerr << "warning: report for " << cfg.name << " skipped: " << e.what() << "\n";
        }
      }
      iqr_of[cfg.name] = s.terminal.iqr();
    } catch (const std::exception& e) {
      s.error = e.what();
      any_error = true;
      std::cerr << "error: " << cfg.name << ": " << e.what() << "\n";
    }
    s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    summaries.push_back(std::move(s));
  }
  if (summaries.empty()) throw UsageError("no scenario selected");

  bool all_pass = true;
  for (auto& s : summaries) {
    if (s.error) continue;
    const ScenarioEntry* entry = config.find(s.name);
    if (!entry->check) continue;
    ScenarioConfig cfg = entry->config;
    s.check = evaluate_check(*entry->check, cfg, s.terminal, iqr_of);
    all_pass = all_pass && s.check->pass;
  }
  write_text((dir / "summary.csv").string(), format_summary_csv(summaries));
  std::cout << format_summary_table(summaries);
  std::cout << "outputs in " << dir.string() << "\n";
  if (any_error) return kRuntime;
  if (a.check && !all_pass) return kCheckFailed;
  return kOk;
}

std::vector<std::string> expand(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& p : patterns) {
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool has_version_line(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  return first == kRunLogVersionLine;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::optional<std::string> out;
  std::optional<double> target;
};

int cmd_report(const ReportArgs& a) {
  std::vector<std::string> files;
  for (const auto& file : expand(a.inputs)) {
    if (has_version_line(file)) {
      files.push_back(file);
    } else {
      std::cerr << "note: skipping " << file << " (not a run log)\n";
    }
  }
  if (files.empty()) throw UsageError("no run logs match the given pattern(s)");
  for (const auto& file : files) {
    const fs::path path(file);
    const fs::path dir = a.out ? fs::path(*a.out) : path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    const LoadedRunLog loaded = read_runlog(file);
    std::optional<double> target = a.target;
    if (!target) {
      if (auto it = loaded.meta.find("true_ratio"); it != loaded.meta.end()) target = std::stod(it->second);
    }
    const std::string stem = path.stem().string();
    const bool urn = loaded.meta.count("engine") && loaded.meta.at("engine") == "urn";
    emit_report(loaded.log, dir, stem, target,
                (urn ? "fraction of " : "P(deploy to ") + loaded.log.labels()[0] + (urn ? "" : ")"));
    const Spread s = spread(loaded.log.terminal_values());
    std::cout << stem << ": reps " << loaded.log.reps() << ", days " << loaded.log.days() << ", terminal median "
              << s.median << " [" << s.q25 << ", " << s.q75 << "]\n";
  }
  return kOk;
}

struct CheckArgs {
  std::string config;
  std::optional<std::string> dir;
};

int cmd_check(const CheckArgs& a) {
  const ConfigFile config = load_config(a.config);
  const fs::path dir = resolve_out_dir(a.dir, config.output_dir);
  std::map<std::string, Spread> terminal;
  bool missing = false;
  for (const auto& entry : config.scenarios) {
    const fs::path file = dir / (entry.config.name + ".csv");
    if (!fs::exists(file)) continue;
    terminal[entry.config.name] = spread(read_runlog(file.string()).log.terminal_values());
  }
  std::map<std::string, double> iqr_of;
  for (const auto& [name, s] : terminal) iqr_of[name] = s.iqr();

  bool all_pass = true;
  int checked = 0;
  for (const auto& entry : config.scenarios) {
    if (!entry.check) continue;
    const auto it = terminal.find(entry.config.name);
    if (it == terminal.end()) {
      std::cout << "MISSING " << entry.config.name << " (no " << (dir / (entry.config.name + ".csv")).string()
                << ")\n";
      missing = true;
      continue;
    }
    const CheckOutcome outcome = evaluate_check(*entry.check, entry.config, it->second, iqr_of);
    ++checked;
    all_pass = all_pass && outcome.pass;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << entry.config.name << "\n";
    for (const auto& d : outcome.details) std::cout << "    " << d << "\n";
  }
  if (missing) return kRuntime;
  if (checked == 0) throw UsageError("config has no checks");
  return all_pass ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback-loop urn and self-exciting deployment simulator"};
  app.require_subcommand(1);

  LimitArgs limit_args;
  auto* limit = app.add_subcommand("limit", "closed-form limit of a 2x2 urn or a mixed discovered/reported urn");
  limit->add_option("--matrix", limit_args.matrix, "a,b,c,d (row = drawn color)")->delimiter(',');
  limit->add_option("--init", limit_args.init, "initial masses for the Beta case")->delimiter(',');
  limit->add_flag("--mixed", limit_args.mixed, "use --wd --wr --da --db --ra --rb");
  limit->add_option("--wd", limit_args.wd, "discovered weight");
  limit->add_option("--wr", limit_args.wr, "reported weight");
  limit->add_option("--da", limit_args.da, "discovered rate of A");
  limit->add_option("--db", limit_args.db, "discovered rate of B");
  limit->add_option("--ra", limit_args.ra, "reported rate of A");
  limit->add_option("--rb", limit_args.rb, "reported rate of B");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run the scenarios of a config file");
  run->add_option("config", run_args.config, "TOML config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_args.seed, "master seed for every scenario");
  run->add_option("--reps-override", run_args.reps, "replications per scenario")->check(CLI::PositiveNumber);
  run->add_option("--threads", run_args.threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", run_args.out, std::string("output directory (default: config output_dir, $") + kOutEnv +
                                             ", ./out)");
  run->add_flag("--check", run_args.check, "exit 2 when a golden check fails");
  run->add_flag("--no-plots", run_args.no_plots, "skip band CSVs and SVG plots");
  run->add_option("--only", run_args.only, "run only these scenarios");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "per-day quantile bands and plots from run CSVs");
  report->add_option("csv", report_args.inputs, "run CSV files or glob patterns")->required();
  report->add_option("--out", report_args.out, "output directory (default: next to each input)");
  report->add_option("--target", report_args.target, "target line (default: true ratio from the CSV)");

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "evaluate a config's golden checks against existing run CSVs");
  check->add_option("config", check_args.config, "TOML config")->required()->check(CLI::ExistingFile);
  check->add_option("--dir", check_args.dir, "directory holding <scenario>.csv files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*limit) return cmd_limit(limit_args);
    if (*run) return cmd_run(run_args);
    if (*report) return cmd_report(report_args);
    return cmd_check(check_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Config:
      case ErrorKind::InvalidArgument:
      case ErrorKind::DegenerateMatrix: return kUsage;
      default: return kRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
