#include "mdtune/mdtune.h"

#include <cmath>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "mdtune/balance.hpp"
#include "mdtune/econ.hpp"
#include "mdtune/error.hpp"
#include "mdtune/json_io.hpp"
#include "mdtune/launch.hpp"
#include "mdtune/log_parser.hpp"
#include "mdtune/manifest.hpp"
#include "mdtune/report.hpp"
#include "mdtune/sweep.hpp"

struct mdtune_text {
  std::string s;
};

struct mdtune_plan {
  mdtune::Plan plan;
};

struct mdtune_result {
  mdtune::SweepDocument doc;
};

namespace {

thread_local std::string g_error;
thread_local std::size_t g_offset = 0;

template <class F>
mdtune_status guard(F&& f) {
  try {
    f();
    g_error.clear();
    g_offset = 0;
    return MDTUNE_OK;
  } catch (const mdtune::ParseError& e) {
    g_error = e.what();
    g_offset = e.offset();
    return MDTUNE_E_PARSE;
  } catch (const mdtune::Error& e) {
    g_error = e.what();
    g_offset = 0;
    return static_cast<mdtune_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    g_offset = 0;
    return MDTUNE_E_INTERNAL;
  } catch (const std::exception& e) {
    g_error = std::string("internal error: ") + e.what();
    g_offset = 0;
    return MDTUNE_E_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) throw mdtune::InvalidArgument(std::string(name) + " must not be NULL");
}

void give(mdtune_text** out, std::string s) {
  need(out, "out");
  *out = new mdtune_text{std::move(s)};
}

mdtune::ReportFormat format_of(const char* f) { return mdtune::parse_report_format(f ? f : "md"); }

}  // namespace

extern "C" {

const char* mdtune_version(void) { return "1.0.0"; }
const char* mdtune_last_error(void) { return g_error.c_str(); }
size_t mdtune_last_error_offset(void) { return g_offset; }

const char* mdtune_text_data(const mdtune_text* t) { return t ? t->s.c_str() : ""; }
size_t mdtune_text_size(const mdtune_text* t) { return t ? t->s.size() : 0; }
void mdtune_text_free(mdtune_text* t) { delete t; }

mdtune_status mdtune_plan_from_manifest(const char* manifest_json, const char* base_dir, mdtune_plan** out) {
  return guard([&] {
    need(manifest_json, "manifest_json");
    need(out, "out");
    const auto m = mdtune::decode_manifest(mdtune::parse_json(manifest_json), base_dir ? base_dir : ".");
    *out = new mdtune_plan{mdtune::make_plan(m)};
  });
}

mdtune_status mdtune_plan_from_manifest_file(const char* path, mdtune_plan** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new mdtune_plan{mdtune::make_plan(mdtune::read_manifest(path))};
  });
}

mdtune_status mdtune_plan_from_json(const char* plan_json, mdtune_plan** out) {
  return guard([&] {
    need(plan_json, "plan_json");
    need(out, "out");
    *out = new mdtune_plan{mdtune::decode_plan(mdtune::parse_json(plan_json))};
  });
}

void mdtune_plan_free(mdtune_plan* plan) { delete plan; }

size_t mdtune_plan_config_count(const mdtune_plan* plan) { return plan ? plan->plan.configs.size() : 0; }

mdtune_status mdtune_plan_to_json(const mdtune_plan* plan, mdtune_text** out) {
  return guard([&] {
    need(plan, "plan");
    give(out, mdtune::dump(mdtune::encode(plan->plan)));
  });
}

mdtune_status mdtune_plan_command(const mdtune_plan* plan, size_t index, mdtune_text** out) {
  return guard([&] {
    need(plan, "plan");
    if (index >= plan->plan.configs.size()) throw mdtune::InvalidArgument("config index out of range");
    give(out, mdtune::render_command(plan->plan.configs[index], plan->plan.sweep.engine));
  });
}

mdtune_status mdtune_plan_script(const mdtune_plan* plan, mdtune_text** out) {
  return guard([&] {
    need(plan, "plan");
    give(out, mdtune::plan_script(plan->plan));
  });
}

mdtune_status mdtune_multi_plan_file(const char* manifest_path, mdtune_text** out) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    const auto m = mdtune::read_manifest(manifest_path);
    const auto mp = mdtune::make_multi_plan(m);
    auto engine = mdtune::engine_for(m.workload, m.sweep);
    engine.flavor = mdtune::MpiFlavor::external_mpi;
    mdtune::json j;
    j["plan"] = mdtune::encode(mp);
    j["command"] = mdtune::render_multi_command(mp, engine);
    give(out, mdtune::dump(j));
  });
}

mdtune_status mdtune_sweep(const mdtune_plan* plan, const mdtune_sweep_options* options, mdtune_result** out) {
  return guard([&] {
    need(plan, "plan");
    need(out, "out");
    const auto& p = plan->plan;
    mdtune::SweepOptions so = p.sweep;
    mdtune_sweep_options opts{MDTUNE_EXECUTOR_SYNTHETIC, 0, nullptr};
    if (options) opts = *options;
    if (opts.repeats > 0) so.repeats = opts.repeats;

    std::unique_ptr<mdtune::Executor> ex;
    if (opts.executor == MDTUNE_EXECUTOR_SYNTHETIC) {
      ex = std::make_unique<mdtune::SyntheticExecutor>(p.profile());
    } else if (opts.executor == MDTUNE_EXECUTOR_SHELL) {
      ex = std::make_unique<mdtune::ShellExecutor>(opts.workdir ? opts.workdir : ".");
    } else {
      throw mdtune::InvalidArgument("unknown executor");
    }
    auto r = std::make_unique<mdtune_result>();
    r->doc.workload = p.workload;
    r->doc.node = p.node;
    r->doc.econ = p.econ;
    r->doc.result = mdtune::run_sweep(p.configs, *ex, p.workload, so);
    *out = r.release();
  });
}

mdtune_status mdtune_result_from_json(const char* sweep_json, mdtune_result** out) {
  return guard([&] {
    need(sweep_json, "sweep_json");
    need(out, "out");
    *out = new mdtune_result{mdtune::decode_sweep_document(mdtune::parse_json(sweep_json))};
  });
}

void mdtune_result_free(mdtune_result* result) { delete result; }

mdtune_status mdtune_result_to_json(const mdtune_result* result, mdtune_text** out) {
  return guard([&] {
    need(result, "result");
    give(out, mdtune::dump(mdtune::encode(result->doc)));
  });
}

size_t mdtune_result_row_count(const mdtune_result* result) { return result ? result->doc.result.rows.size() : 0; }

size_t mdtune_result_failed_rows(const mdtune_result* result) {
  if (!result) return 0;
  size_t n = 0;
  for (const auto& r : result->doc.result.rows) n += r.ok ? 0 : 1;
  return n;
}

mdtune_status mdtune_result_best(const mdtune_result* result, size_t* index, double* mean_ns_day) {
  return guard([&] {
    need(result, "result");
    const auto best = mdtune::best_index(result->doc.result.rows);
    if (!best) throw mdtune::InvalidArgument("no successful rows to select from");
    if (index) *index = *best;
    if (mean_ns_day) *mean_ns_day = result->doc.result.rows[*best].mean;
  });
}

mdtune_status mdtune_result_report(const mdtune_result* result, const mdtune_report_options* options,
                                   mdtune_text** out) {
  return guard([&] {
    need(result, "result");
    mdtune::ReportOptions ro;
    const char* format = "md";
    if (options) {
      if (options->format) format = options->format;
      if (options->price_normalizer > 0) ro.price_normalizer = options->price_normalizer;
      if (options->has_power) {
        if (!(options->power_w >= 0) || !std::isfinite(options->power_w))
          throw mdtune::InvalidArgument("power_w must be >= 0");
        ro.power_w = options->power_w;
      }
    }
    give(out, mdtune::render_sweep_report(result->doc, format_of(format), ro));
  });
}

mdtune_status mdtune_parse_log(const char* text, size_t size, mdtune_text** metrics_json) {
  return guard([&] {
    need(text, "text");
    give(metrics_json, mdtune::dump(mdtune::encode(mdtune::parse_log(std::string_view(text, size)))));
  });
}

mdtune_status mdtune_log_table(const char* logs_json, const char* format, mdtune_text** out) {
  return guard([&] {
    need(logs_json, "logs_json");
    const auto j = mdtune::parse_json(logs_json);
    if (!j.is_array()) throw mdtune::InvalidConfig("logs: expected an array");
    std::vector<std::pair<std::string, mdtune::PerfMetrics>> logs;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& e = j[i];
      const auto path = "logs[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("source") || !e.contains("text") || !e["source"].is_string() ||
          !e["text"].is_string() || e.size() != 2)
        throw mdtune::InvalidConfig(path + ": expected {\"source\": string, \"text\": string}");
      const auto text = e["text"].get<std::string>();
      try {
        logs.emplace_back(e["source"].get<std::string>(), mdtune::parse_log(text));
      } catch (const mdtune::ParseError& pe) {
        throw mdtune::ParseError(e["source"].get<std::string>() + ": " + pe.what(), pe.offset());
      }
    }
    give(out, mdtune::render(mdtune::metrics_table(logs), format_of(format)));
  });
}

mdtune_status mdtune_cost_table(const char* input_json, const char* format, mdtune_text** out) {
  return guard([&] {
    need(input_json, "input_json");
    give(out, mdtune::render(mdtune::cost_table(mdtune::parse_json(input_json)), format_of(format)));
  });
}

mdtune_status mdtune_scaling_table(const char* input_json, const char* format, mdtune_text** out) {
  return guard([&] {
    need(input_json, "input_json");
    give(out, mdtune::render(mdtune::scaling_table(mdtune::parse_json(input_json)), format_of(format)));
  });
}

mdtune_status mdtune_recommend_table(const char* input_json, const char* weights, const char* format,
                                     mdtune_text** out) {
  return guard([&] {
    need(input_json, "input_json");
    const auto w = mdtune::parse_weights(weights ? weights : "lifetime-yield");
    give(out, mdtune::render(mdtune::recommend_table(mdtune::parse_json(input_json), w), format_of(format)));
  });
}

mdtune_status mdtune_gpu_id_string(uint32_t gpus, uint32_t pp_ranks, mdtune_text** out) {
  return guard([&] { give(out, mdtune::gpu_id_string(gpus, pp_ranks)); });
}

mdtune_status mdtune_render_command(const char* config_json, const char* engine_json, mdtune_text** out) {
  return guard([&] {
    need(config_json, "config_json");
    const auto cfg = mdtune::decode<mdtune::LaunchConfig>(mdtune::parse_json(config_json), "config");
    mdtune::EngineProfile engine;
    if (engine_json) engine = mdtune::decode<mdtune::EngineProfile>(mdtune::parse_json(engine_json), "engine");
    give(out, mdtune::render_command(cfg, engine));
  });
}

mdtune_status mdtune_parse_command(const char* command, mdtune_text** config_json) {
  return guard([&] {
    need(command, "command");
    give(config_json, mdtune::dump(mdtune::encode(mdtune::parse_command(command))));
  });
}

mdtune_status mdtune_balance_cutoff(double rc0, double spacing0, const double box_nm[3], double k,
                                    mdtune_balance* out) {
  return guard([&] {
    need(box_nm, "box_nm");
    need(out, "out");
    const auto s = mdtune::balance_cutoff(rc0, spacing0, {box_nm[0], box_nm[1], box_nm[2]}, k);
    out->rcoulomb_nm = s.rcoulomb;
    out->spacing_nm = s.spacing;
    out->grid[0] = s.grid.nx;
    out->grid[1] = s.grid.ny;
    out->grid[2] = s.grid.nz;
    out->grid0[0] = s.grid0.nx;
    out->grid0[1] = s.grid0.ny;
    out->grid0[2] = s.grid0.nz;
    out->pp_cost_ratio = s.pp_cost_ratio;
    out->pme_cost_ratio = s.pme_cost_ratio;
  });
}

mdtune_status mdtune_effective_power(mdtune_power_kind kind, double value, uint32_t gpus_installed,
                                     uint32_t gpus_active, double idle_gpu_power_w, double* watts) {
  return guard([&] {
    need(watts, "watts");
    mdtune::PowerReading r;
    if (kind == MDTUNE_POWER_METER_KWH_PER_300S) r.kind = mdtune::PowerKind::meter_kwh_per_300s;
    else if (kind == MDTUNE_POWER_DIRECT_WATTS) r.kind = mdtune::PowerKind::direct_watts;
    else throw mdtune::InvalidArgument("unknown power reading kind");
    r.value = value;
    r.gpus_installed = gpus_installed;
    r.gpus_active = gpus_active;
    r.idle_gpu_power_w = idle_gpu_power_w;
    *watts = mdtune::effective_power(r);
  });
}

mdtune_status mdtune_econ_row_compute(double ns_per_day, double power_w, double node_cost, double lifetime_years,
                                      double energy_price, mdtune_econ_row* out) {
  return guard([&] {
    need(out, "out");
    mdtune::EconParams p;
    p.lifetime_years = lifetime_years;
    p.energy_price_eur_per_kwh = energy_price;
    const auto r = mdtune::econ_row(ns_per_day, power_w, node_cost, p);
    out->production_us = r.production_us;
    out->energy_cost = r.energy_cost;
    out->trajectory_cost = r.trajectory_cost;
    out->yield = r.yield;
  });
}

mdtune_status mdtune_perf_per_price(double ns_per_day, double cost, double normalizer, double* out) {
  return guard([&] {
    need(out, "out");
    *out = mdtune::perf_per_price(ns_per_day, cost, normalizer);
  });
}

mdtune_status mdtune_parallel_efficiency(double p_m, uint32_t m, double p_1, double* out) {
  return guard([&] {
    need(out, "out");
    *out = mdtune::parallel_efficiency(p_m, m, p_1);
  });
}

mdtune_status mdtune_multi_sim_gain(double p_single, double p_per_replica, double* out) {
  return guard([&] {
    need(out, "out");
    *out = mdtune::multi_sim_gain(p_single, p_per_replica);
  });
}

mdtune_status mdtune_clock_fit(const double* clocks_mhz, const double* ns_per_day, size_t n, double default_mhz,
                               double max_mhz, double* slope, double* intercept, double* gain) {
  return guard([&] {
    if (n > 0) {
      need(clocks_mhz, "clocks_mhz");
      need(ns_per_day, "ns_per_day");
    }
    std::vector<mdtune::ClockPoint> pts;
    for (size_t i = 0; i < n; ++i) pts.push_back({clocks_mhz[i], ns_per_day[i]});
    const auto f = mdtune::clock_perf_fit(pts, default_mhz, max_mhz);
    if (slope) *slope = f.slope;
    if (intercept) *intercept = f.intercept;
    if (gain) *gain = f.gain;
  });
}

mdtune_status mdtune_normalize_compiler(double ns_per_day, double from_ratio, double to_ratio, double* out) {
  return guard([&] {
    need(out, "out");
    *out = mdtune::normalize_compiler(ns_per_day, from_ratio, to_ratio);
  });
}

}  // extern "C"
