// mdtune command-line front end. Talks to the library only through mdtune.h.

#include <sys/stat.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mdtune/mdtune.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitNoSuccessfulRun = 7;

// Carries a library status out of a subcommand.
struct Failure {
  int code;
  std::string message;
};

struct Text {
  mdtune_text* t = nullptr;
  ~Text() { mdtune_text_free(t); }
  std::string str() const { return std::string(mdtune_text_data(t), mdtune_text_size(t)); }
};

struct PlanHandle {
  mdtune_plan* p = nullptr;
  ~PlanHandle() { mdtune_plan_free(p); }
};

struct ResultHandle {
  mdtune_result* r = nullptr;
  ~ResultHandle() { mdtune_result_free(r); }
};

void check(mdtune_status s, const std::string& context) {
  if (s == MDTUNE_OK) return;
  std::string msg = context.empty() ? mdtune_last_error() : context + ": " + mdtune_last_error();
  throw Failure{static_cast<int>(s), msg};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{MDTUNE_E_IO, "cannot read '" + path + "'"};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw Failure{MDTUNE_E_IO, "cannot write '" + path + "'"};
  spdlog::info("wrote {}", path);
}

// --out FILE, or stdout when empty.
void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    spill(out, text);
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("mdtune");
  logger->set_pattern("mdtune: %^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MDTUNE_LOG")) {
    const auto lvl = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real ones.
    if (lvl != spdlog::level::off || std::string(env) == "off") spdlog::set_level(lvl);
    else spdlog::warn("ignoring MDTUNE_LOG='{}'", env);
  }
}

void load_plan(PlanHandle& h, const std::string& plan_file, const std::string& manifest) {
  if (!plan_file.empty() && !manifest.empty()) throw Failure{MDTUNE_E_INVALID_ARGUMENT, "give --plan or --manifest, not both"};
  if (!plan_file.empty()) {
    check(mdtune_plan_from_json(slurp(plan_file).c_str(), &h.p), plan_file);
  } else if (!manifest.empty()) {
    check(mdtune_plan_from_manifest_file(manifest.c_str(), &h.p), manifest);
  } else {
    throw Failure{MDTUNE_E_INVALID_ARGUMENT, "one of --plan or --manifest is required"};
  }
}

std::string print_commands(const PlanHandle& h) {
  std::string out;
  for (size_t i = 0; i < mdtune_plan_config_count(h.p); ++i) {
    Text c;
    check(mdtune_plan_command(h.p, i, &c.t), "");
    out += c.str() + "\n";
  }
  return out;
}

std::string report_of(const ResultHandle& r, const std::string& format, double normalizer,
                      const std::optional<double>& power) {
  mdtune_report_options o{format.c_str(), normalizer, power ? 1 : 0, power.value_or(0.0)};
  Text t;
  check(mdtune_result_report(r.r, &o, &t.t), "report");
  return t.str();
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Benchmark planning, sweeping and cost analysis for GPU-offload MD runs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mdtune_version()));

  std::string manifest, plan_file, out, format = "md", executor = "synthetic", workdir = ".", input, script;
  std::string weights = "lifetime-yield";
  std::uint32_t repeats = 0;
  bool dry_run = false;
  double normalizer = 1000.0;
  std::optional<double> power_w;
  std::vector<std::string> logs;
  const std::vector<std::string> formats{"csv", "md", "json"};

  auto* plan = app.add_subcommand("plan", "Enumerate launch configurations for a manifest");
  plan->add_option("--manifest", manifest, "Run manifest (JSON)")->required()->check(CLI::ExistingFile);
  plan->add_option("--out", out, "Plan file to write (default: stdout)");
  plan->add_option("--script", script, "Also write a shell script with one command per config");
  plan->add_flag("--dry-run", dry_run, "Print the rendered commands instead of the plan");

  auto* sweep = app.add_subcommand("sweep", "Run every config of a plan and rank the results");
  sweep->add_option("--plan", plan_file, "Plan file from `mdtune plan`")->check(CLI::ExistingFile);
  sweep->add_option("--manifest", manifest, "Plan directly from a manifest")->check(CLI::ExistingFile);
  sweep->add_option("--executor", executor, "shell or synthetic")->check(CLI::IsMember({"shell", "synthetic"}));
  sweep->add_option("--repeats", repeats, "Runs per config (default: from the plan)")->check(CLI::PositiveNumber);
  sweep->add_option("--workdir", workdir, "Directory for run_<hash>/ (shell executor)");
  sweep->add_option("--out", out, "Result JSON; .csv and .md tables are written next to it");
  sweep->add_option("--format", format, "Table printed to stdout")->check(CLI::IsMember(formats));
  sweep->add_flag("--dry-run", dry_run, "Print the commands without running anything");

  auto* report = app.add_subcommand("report", "Ranked table of a sweep result");
  report->add_option("--in", input, "Result JSON from `mdtune sweep`")->required()->check(CLI::ExistingFile);
  report->add_option("--format", format)->check(CLI::IsMember(formats));
  report->add_option("--normalizer", normalizer, "Performance per this many EUR")->check(CLI::PositiveNumber);
  report->add_option("--power-w", power_w, "Node draw under load; adds lifetime cost columns")
      ->check(CLI::NonNegativeNumber);
  report->add_option("--out", out);

  auto* parse = app.add_subcommand("parse-log", "Extract metrics and advisories from engine logs");
  parse->add_option("logs", logs, "md.log files")->required()->check(CLI::ExistingFile);
  parse->add_option("--format", format)->check(CLI::IsMember(formats));
  parse->add_option("--out", out);

  auto* costs = app.add_subcommand("analyze-costs", "Lifetime energy, trajectory cost and yield table");
  costs->add_option("--input", input)->required()->check(CLI::ExistingFile);
  costs->add_option("--format", format)->check(CLI::IsMember(formats));
  costs->add_option("--out", out);

  auto* scaling = app.add_subcommand("scaling", "Parallel efficiency and multi-simulation gain");
  scaling->add_option("--input", input)->required()->check(CLI::ExistingFile);
  scaling->add_option("--format", format)->check(CLI::IsMember(formats));
  scaling->add_option("--out", out);

  auto* recommend = app.add_subcommand("recommend", "Rank hardware by weighted criteria C1-C5");
  recommend->add_option("--input", input)->required()->check(CLI::ExistingFile);
  recommend->add_option("--weights", weights, "e.g. C1=1,C4=0.5 or lifetime-yield");
  recommend->add_option("--format", format)->check(CLI::IsMember(formats));
  recommend->add_option("--out", out);

  auto* multi = app.add_subcommand("multi-plan", "Replica placement and command for a multi-simulation");
  multi->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  multi->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) {
      PlanHandle h;
      load_plan(h, "", manifest);
      spdlog::info("{} configs planned", mdtune_plan_config_count(h.p));
      if (dry_run) {
        emit(out, print_commands(h));
      } else {
        Text j;
        check(mdtune_plan_to_json(h.p, &j.t), "");
        emit(out, j.str());
      }
      if (!script.empty()) {
        Text s;
        check(mdtune_plan_script(h.p, &s.t), "");
        spill(script, s.str());
        ::chmod(script.c_str(), 0755);
      }
    } else if (*sweep) {
      PlanHandle h;
      load_plan(h, plan_file, manifest);
      if (dry_run) {
        emit("", print_commands(h));
        return 0;
      }
      mdtune_sweep_options o{executor == "shell" ? MDTUNE_EXECUTOR_SHELL : MDTUNE_EXECUTOR_SYNTHETIC, repeats,
                             workdir.c_str()};
      ResultHandle r;
      spdlog::info("sweeping {} configs with the {} executor", mdtune_plan_config_count(h.p), executor);
      check(mdtune_sweep(h.p, &o, &r.r), "sweep");
      if (!out.empty()) {
        Text j;
        check(mdtune_result_to_json(r.r, &j.t), "");
        spill(out, j.str());
        const auto stem = fs::path(out).replace_extension("");
        spill(stem.string() + ".csv", report_of(r, "csv", normalizer, std::nullopt));
        spill(stem.string() + ".md", report_of(r, "md", normalizer, std::nullopt));
      }
      emit("", report_of(r, format, normalizer, std::nullopt));
      const auto failed = mdtune_result_failed_rows(r.r);
      if (failed > 0) spdlog::warn("{} of {} configs had no successful run", failed, mdtune_result_row_count(r.r));
      size_t best = 0;
      if (mdtune_result_best(r.r, &best, nullptr) != MDTUNE_OK) {
        spdlog::error("no config produced a successful run");
        return kExitNoSuccessfulRun;
      }
    } else if (*report) {
      ResultHandle r;
      check(mdtune_result_from_json(slurp(input).c_str(), &r.r), input);
      emit(out, report_of(r, format, normalizer, power_w));
    } else if (*parse) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& f : logs) arr.push_back({{"source", f}, {"text", slurp(f)}});
      Text t;
      check(mdtune_log_table(arr.dump().c_str(), format.c_str(), &t.t), "");
      emit(out, t.str());
    } else if (*costs) {
      Text t;
      check(mdtune_cost_table(slurp(input).c_str(), format.c_str(), &t.t), input);
      emit(out, t.str());
    } else if (*scaling) {
      Text t;
      check(mdtune_scaling_table(slurp(input).c_str(), format.c_str(), &t.t), input);
      emit(out, t.str());
    } else if (*recommend) {
      Text t;
      check(mdtune_recommend_table(slurp(input).c_str(), weights.c_str(), format.c_str(), &t.t), input);
      emit(out, t.str());
    } else if (*multi) {
      Text t;
      check(mdtune_multi_plan_file(manifest.c_str(), &t.t), manifest);
      emit(out, t.str());
    }
  } catch (const Failure& f) {
    spdlog::error("{}", f.message);
    return f.code;
  }
  return 0;
}
