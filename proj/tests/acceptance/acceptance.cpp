// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "../unit/support.hpp"
#include "mdtune/balance.hpp"
#include "mdtune/econ.hpp"
#include "mdtune/json_io.hpp"
#include "mdtune/launch.hpp"
#include "mdtune/log_parser.hpp"
#include "mdtune/numfmt.hpp"
#include "mdtune/sweep.hpp"
#include "test_binaries.h"

using namespace mdtune;
using ojson = nlohmann::ordered_json;

namespace {

// Collects failed sub-checks of one criterion.
struct Check {
  std::vector<std::string> failures;
  std::size_t count = 0;
  std::string detail;

  void operator()(bool ok, const std::string& what) {
    ++count;
    if (!ok) failures.push_back(what);
  }
};

std::string num(double v) { return format_shortest(v); }

PowerReading reading_of(const ojson& j) {
  PowerReading r;
  r.kind = parse_power_kind(j["kind"].get<std::string>());
  r.value = j["value"];
  r.gpus_installed = j["gpus_installed"];
  r.gpus_active = j["gpus_active"];
  r.idle_gpu_power_w = j["idle_gpu_power_w"];
  return r;
}

void power_table(Check& check, const std::string& key, const ojson& table, const DisplayDigits& digits) {
  EconParams params;
  params.lifetime_years = table["years"];
  params.energy_price_eur_per_kwh = table["price_eur_per_kwh"];
  for (const auto& row : table["rows"]) {
    const auto label = key + " '" + row["label"].get<std::string>() + "'";
    const double watts = effective_power(reading_of(row["reading"]));
    check(round_display(watts, digits.power) == row["power_w"].get<double>(), label + " power");
    if (row["performance"].is_null()) continue;
    const auto e = econ_row_display(row["performance"], watts, row["node_cost"], params, digits);
    check(e.energy_cost == row["energy_cost"].get<double>(), label + " energy cost");
    check(e.production_us == row["production_us"].get<double>(), label + " production");
    check(e.trajectory_cost == row["trajectory_cost"].get<double>(), label + " trajectory cost");
    check(e.yield == row["yield"].get<double>(), label + " yield");
  }
}

void tables(Check& check) {
  const auto exp = testing::oracle("tables_expected.json");
  const auto raw = testing::oracle("tables_raw.json");

  DisplayDigits ns;
  ns.yield = 0;
  ns.yield_scale = 1000;
  power_table(check, "rib_power", exp["rib_power"], ns);
  power_table(check, "mem_power", exp["mem_power"], DisplayDigits{});

  const double w = effective_power({PowerKind::meter_kwh_per_300s, 0.031, 4, 0, 27});
  check(w == 264.0, "E5-2670v2 CPU-only effective power " + num(w) + " W, want 264");
  const double y1 = econ_row_display(1.38, w, 3360, {}, ns).yield;
  check(y1 == 444, "E5-2670v2 CPU-only yield " + num(y1) + ", want 444");
  const double y2 = econ_row_display(26.798, 446, 4400, {}).yield;
  check(std::fabs(y2 - 5.89) <= 0.005, "E5-2680v2 CPU-only MEM yield " + num(y2) + ", want 5.89");

  for (const char* key : {"mem_price", "rib_price"}) {
    const auto& spec = raw[key];
    const int p_digits = spec["p_digits"].is_null() ? -1 : spec["p_digits"].get<int>();
    const int r_digits = spec["ratio_digits"];
    for (const auto& row : exp[key]["rows"]) {
      const double p = row["performance"];
      const double shown = p_digits < 0 ? p : round_display(p, p_digits);
      check(round_display(perf_per_price(shown, row["cost"], spec["normalizer"]), r_digits) ==
                row["perf_per_price"].get<double>(),
            std::string(key) + " '" + row["label"].get<std::string>() + "' perf per price");
    }
  }

  for (const char* key : {"mem_scaling", "rib_scaling"}) {
    const int e_digits = raw[key]["e_digits"];
    for (std::size_t s = 0; s < raw[key]["series"].size(); ++s) {
      const auto& pts = raw[key]["series"][s]["points"];
      const double p1 = round_display(pts[0][1].get<double>(), pts[0][2].get<int>());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double shown = round_display(pts[i][1].get<double>(), pts[i][2].get<int>());
        const double want = exp[key]["series"][s]["points"][i]["efficiency"];
        check(round_display(parallel_efficiency(shown, pts[i][0], p1), e_digits) == want,
              std::string(key) + " series " + std::to_string(s) + " point " + std::to_string(i));
      }
    }
  }
  const auto& e3 = raw["mem_scaling"]["series"][0]["points"];
  const double e2 = parallel_efficiency(e3[1][1].get<double>(), 2, e3[0][1].get<double>());
  check(std::fabs(e2 - 0.663) <= 0.0005, "MEM E3-1270v2 two-node efficiency " + num(e2) + ", want 0.663");

  const auto& mr = raw["rib_multi"];
  const int me = mr["e_digits"];
  const double base = round_display(mr["rows"][0][1].get<double>(), mr["rows"][0][2].get<int>());
  const auto& mexp = exp["rib_multi"]["rows"];
  for (std::size_t i = 0; i < mexp.size(); ++i) {
    const auto& r = mr["rows"][i];
    const double s1 = round_display(r[1].get<double>(), r[2].get<int>());
    const double sm = round_display(r[3].get<double>(), r[4].get<int>());
    const std::string at = "rib_multi row " + std::to_string(i);
    check(round_display(parallel_efficiency(s1, r[0], base), me) == mexp[i]["e_single"].get<double>(), at + " E");
    check(round_display(parallel_efficiency(sm, r[0], base), me) == mexp[i]["e_multi"].get<double>(), at + " E multi");
    check(round_display(multi_sim_gain(s1, sm), 1) == mexp[i]["gain_pct"].get<double>(), at + " gain");
    if (r[0].get<int>() == 4) {
      const double g = multi_sim_gain(s1, sm);
      check(std::fabs(g - 27.0) <= 1.0, "four-node multi-simulation gain " + num(g) + "%, want 27 +- 1");
    }
  }
}

void cube_law(Check& check) {
  const Box rib{31.2, 31.2, 31.2};
  const double cutoffs[] = {1.157, 1.378, 1.447, 1.607};
  const double ratios[] = {1.54, 2.59, 2.99, 4.1};
  for (int i = 0; i < 4; ++i) {
    const auto s = balance_cutoff(1.0, 0.135, rib, std::pow(cutoffs[i], 3));
    check(std::fabs(s.pp_cost_ratio / ratios[i] - 1) < 0.03,
          "rc " + num(cutoffs[i]) + " gives PP ratio " + num(s.pp_cost_ratio) + ", want " + num(ratios[i]));
    const auto back = balance_cutoff(1.0, 0.135, rib, ratios[i]);
    check(std::fabs(back.rcoulomb / cutoffs[i] - 1) < 0.03,
          "PP ratio " + num(ratios[i]) + " gives rc " + num(back.rcoulomb) + ", want " + num(cutoffs[i]));
  }
  const auto s = balance_cutoff(1.0, 0.135, rib, std::pow(1.607, 3));
  check(s.grid0 == Grid3{240, 240, 240}, "initial grid " + std::to_string(s.grid0.nx) + ", want 240");
  check(s.grid == Grid3{144, 144, 144}, "scaled grid " + std::to_string(s.grid.nx) + ", want 144");
  check(round_display(s.pme_cost_ratio, 2) == 0.22, "PME ratio " + num(s.pme_cost_ratio) + ", want 0.22");
}

void logs(Check& check) {
  const auto over = parse_log(testing::fixture("si_pme_overprovisioned.log"));
  check(over.pme && over.pme->load == 0.625 && over.pme->wait_pct == 8.3, "PME load fragment (0.625, 8.3%)");
  const auto bal = parse_log(testing::fixture("si_pme_balanced.log"));
  check(bal.pme && bal.pme->load == 1.011 && bal.pme->wait_pct == 0.7, "PME load fragment (1.011, 0.7%)");
  const auto gc = parse_log(testing::fixture("si_gpu_cpu.log"));
  check(gc.gpu_cpu && *gc.gpu_cpu == GpuCpuRatio{5.673, 8.301, 0.683}, "GPU/CPU fragment (5.673, 8.301, 0.683)");
  const auto lb = parse_log(testing::fixture("si_load_balance.log"));
  check(lb.load_balance && lb.load_balance->initial == LoadBalanceRow{1.000, 1.012, {240, 240, 240}, 0.130, 0.289} &&
            lb.load_balance->final == LoadBalanceRow{1.607, 1.619, {144, 144, 144}, 0.217, 0.465},
        "load balance table rows");
  check(lb.load_balance && lb.load_balance->cost_ratio_pp == 4.10 && lb.load_balance->cost_ratio_pme == 0.22,
        "load balance cost ratios 4.10 / 0.22");
}

// Every balanced, ordered, covering assignment of n ranks to g GPUs.
std::set<std::string> partitions(std::uint32_t g, std::uint32_t n) {
  std::set<std::string> out;
  const std::uint32_t q = n / g, r = n % g;
  for (std::uint32_t mask = 0; mask < (1U << g); ++mask) {
    if (static_cast<std::uint32_t>(__builtin_popcount(mask)) != r) continue;
    std::string s;
    for (std::uint32_t i = 0; i < g; ++i) s.append(q + ((mask >> i) & 1U), static_cast<char>('0' + i));
    out.insert(s);
  }
  return out;
}

void mapping(Check& check) {
  check(gpu_id_string(2, 6) == "000111", "gpu_id_string(2, 6)");
  check(gpu_id_string(4, 10) == "0001122233", "gpu_id_string(4, 10)");
  for (std::uint32_t g = 1; g <= 8; ++g)
    for (std::uint32_t n = g; n <= 64; ++n) {
      const auto s = gpu_id_string(g, n);
      check(partitions(g, n).count(s) == 1, "G=" + std::to_string(g) + " N=" + std::to_string(n) + " gives " + s);
    }
}

std::size_t brute_force_best(const std::vector<SweepRow>& rows) {
  auto dlb = [](Dlb d) { return d == Dlb::off ? 0 : d == Dlb::auto_ ? 1 : 2; };
  auto key = [&](std::size_t i) {
    const auto& c = rows[i].config;
    return std::make_tuple(-rows[i].mean, c.n_rank, dlb(c.dlb), c.use_ht ? 1 : 0, i);
  };
  std::size_t best = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].ok && (best == rows.size() || key(i) < key(best))) best = i;
  return best;
}

LaunchConfig gpu_config(std::uint32_t gpus, std::uint32_t nstlist) {
  LaunchConfig c;
  c.n_rank = 8;
  c.n_th = 5;
  c.use_ht = true;
  c.dlb = Dlb::on;
  c.gpu_id = gpu_id_string(gpus, 8);
  c.nstlist = nstlist;
  return c;
}

void orchestrator(Check& check) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int trial = 0; trial < 60; ++trial) {
    SyntheticNodeProfile p;
    p.node = testing::node_2x10(rng() % 5);
    p.cpu_rate *= u(rng);
    p.gpu_rate *= u(rng);
    p.nstlist_penalty *= u(rng);
    const auto w = rng() % 2 ? testing::mem_workload() : testing::rib_workload();
    EnumerationOptions opt;
    if (rng() % 2) opt.nstlist = {10, 20, 40, 80};
    auto configs = enumerate_single_node(p.node, opt);
    std::shuffle(configs.begin(), configs.end(), rng);
    configs.resize(std::min<std::size_t>(configs.size(), 4 + rng() % 40));
    SyntheticExecutor ex(p);
    SweepOptions o;
    o.repeats = 1;
    const auto res = run_sweep(configs, ex, w, o);
    const auto want = brute_force_best(res.rows);
    check(res.best && *res.best == want && select_best(res) == res.rows[want].config,
          "sweep " + std::to_string(trial) + ": select_best differs from the brute-force argmax");
  }

  SyntheticNodeProfile p;
  p.node = testing::node_2x10(2);
  EnumerationOptions opt;
  opt.nstlist = {10, 40};
  const auto configs = enumerate_single_node(p.node, opt);
  std::string first;
  for (int i = 0; i < 3; ++i) {
    SyntheticExecutor ex(p);
    const auto text = dump(encode(run_sweep(configs, ex, testing::mem_workload())));
    if (i == 0) first = text;
    check(text == first, "sweep output differs between identical runs");
  }

  std::uint32_t best = 0;
  double best_p = 0;
  for (std::uint32_t n = 5; n <= 100; n += 5) {
    const double perf = predict_performance(p, gpu_config(2, n), testing::mem_workload());
    if (perf > best_p) {
      best_p = perf;
      best = n;
    }
  }
  check(best >= 20 && best <= 70, "nstlist optimum at " + std::to_string(best) + ", want within [20, 70]");
}

void clock_fit(Check& check) {
  const auto fx = ojson::parse(testing::fixture("clock_points.json"));
  const auto& k40 = fx["K40"];
  std::vector<ClockPoint> pts;
  for (const auto& p : k40["points"]) pts.push_back({p[0], p[1]});
  const auto f = clock_perf_fit(pts, k40["default_mhz"], k40["max_mhz"]);
  check(std::fabs(100 * f.gain - 6.4) <= 1.0, "K40 default to max gain " + num(100 * f.gain) + "%, want 6.4 +- 1");
}

// Runs every test binary of the suite and times it together with the checks above.
void suite_runtime(Check& check, double elapsed_s) {
  std::stringstream list(MDTUNE_TEST_BINARIES);
  const auto start = std::chrono::steady_clock::now();
  for (std::string bin; std::getline(list, bin, ';');) {
    if (bin.empty()) continue;
    const int status = std::system(("'" + bin + "' >/dev/null 2>&1").c_str());
    check(status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0, bin + " failed");
  }
  const double total =
      elapsed_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check(total < 60.0, "suite took " + num(total) + " s");
  check.detail = format_fixed(total, 2) + " s";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Criterion> criteria = {
      {"1 table reproduction", tables},
      {"2 cube-law balance", cube_law},
      {"3 log parsing", logs},
      {"4 gpu_id mapping strings", mapping},
      {"5 orchestrator correctness", orchestrator},
      {"6 clock fit", clock_fit},
  };
  int failed = 0;
  auto report = [&](const char* name, Check& c) {
    std::cout << (c.failures.empty() ? "PASS" : "FAIL") << "  " << name << " (" << c.count - c.failures.size()
              << "/" << c.count << " checks" << (c.detail.empty() ? "" : ", " + c.detail) << ")\n";
    for (const auto& f : c.failures) std::cout << "  - " << f << "\n";
    failed += c.failures.empty() ? 0 : 1;
  };
  for (const auto& cr : criteria) {
    Check c;
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    report(cr.name, c);
  }
  Check c;
  suite_runtime(c, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  report("7 suite runtime under 60 s", c);
  return failed == 0 ? 0 : 1;
}
