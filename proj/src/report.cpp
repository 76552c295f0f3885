#include "mdtune/report.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mdtune/error.hpp"
#include "mdtune/numfmt.hpp"

namespace mdtune {

namespace {

const char* const kSweepFormat = "mdtune-sweep/1";

[[noreturn]] void bad(const std::string& path, const std::string& msg) { throw InvalidConfig(path + ": " + msg); }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> known) {
  if (!j.is_object()) bad(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) bad(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
  }
}

std::optional<double> num_at(const json& j, const char* key, const std::string& path, bool required) {
  const auto p = path.empty() ? std::string(key) : path + "." + key;
  if (!j.contains(key) || j[key].is_null()) {
    if (required) bad(p, "missing required field");
    return std::nullopt;
  }
  if (!j[key].is_number()) bad(p, "expected a number");
  return j[key].get<double>();
}

std::string str_at(const json& j, const char* key, const std::string& path) {
  const auto p = path.empty() ? std::string(key) : path + "." + key;
  if (!j.contains(key)) bad(p, "missing required field");
  if (!j[key].is_string()) bad(p, "expected a string");
  return j[key].get<std::string>();
}

const json& array_at(const json& j, const char* key, const std::string& path) {
  const auto p = path.empty() ? std::string(key) : path + "." + key;
  if (!j.contains(key)) bad(p, "missing required field");
  if (!j[key].is_array()) bad(p, "expected an array");
  return j[key];
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

std::string fixed_or(const std::optional<double>& v, int digits, const char* missing = "n/a") {
  return v && std::isfinite(*v) ? format_fixed(*v, digits) : std::string(missing);
}

json num_or_null(const std::optional<double>& v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

std::string grid_text(const DdGrid& g) {
  return std::to_string(g.x) + "x" + std::to_string(g.y) + "x" + std::to_string(g.z);
}

}  // namespace

ReportFormat parse_report_format(const std::string& s) {
  if (s == "md" || s == "markdown") return ReportFormat::md;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw InvalidArgument("unknown format '" + s + "' (expected csv, md or json)");
}

json encode(const SweepDocument& d) {
  json j;
  j["format"] = kSweepFormat;
  j["workload"] = encode(d.workload);
  j["node"] = encode(d.node);
  j["econ"] = encode(d.econ);
  j["result"] = encode(d.result);
  return j;
}

SweepDocument decode_sweep_document(const json& j) {
  only_keys(j, "", {"format", "workload", "node", "econ", "result"});
  if (!j.contains("format") || j["format"] != kSweepFormat)
    bad("format", std::string("expected \"") + kSweepFormat + "\"");
  SweepDocument d;
  if (!j.contains("workload")) bad("workload", "missing required field");
  d.workload = decode<Workload>(j["workload"], "workload");
  if (!j.contains("node")) bad("node", "missing required field");
  d.node = decode<NodeSpec>(j["node"], "node");
  if (j.contains("econ")) d.econ = decode<EconParams>(j["econ"], "econ");
  if (!j.contains("result")) bad("result", "missing required field");
  d.result = decode<SweepResult>(j["result"], "result");
  return d;
}

DdGrid dd_grid_for(std::uint32_t pp_ranks, const Box& box) {
  if (pp_ranks == 0) throw InvalidArgument("pp_ranks must be >= 1");
  DdGrid best{pp_ranks, 1, 1};
  double best_area = std::numeric_limits<double>::infinity();
  for (std::uint32_t x = pp_ranks; x >= 1; --x) {
    if (pp_ranks % x) continue;
    const std::uint32_t rest = pp_ranks / x;
    for (std::uint32_t y = rest; y >= 1; --y) {
      if (rest % y) continue;
      const std::uint32_t z = rest / y;
      // Total halo area: every cut across a dimension adds one box cross-section.
      const double area = (x > 1 ? x * box.y * box.z : 0.0) + (y > 1 ? y * box.x * box.z : 0.0) +
                          (z > 1 ? z * box.x * box.y : 0.0);
      if (area < best_area - 1e-9 * std::max(1.0, area)) {
        best_area = area;
        best = {x, y, z};
      }
    }
  }
  return best;
}

std::optional<double> config_cost(const LaunchConfig& cfg, const NodeSpec& node, const EconParams& econ) {
  try {
    ClusterSpec c{node, cfg.nodes, econ.per_node_network_cost_eur};
    return cluster_investment(c, cfg.gpus_used());
  } catch (const MissingDatum&) {
    return std::nullopt;
  }
}

std::string render(const Table& t, ReportFormat format) {
  std::ostringstream os;
  switch (format) {
    case ReportFormat::json:
      return dump(t.data);
    case ReportFormat::csv:
      for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_escape(t.columns[i]);
      os << '\n';
      for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_escape(r[i]);
        os << '\n';
      }
      return os.str();
    case ReportFormat::md:
      if (!t.title.empty()) os << "# " << t.title << "\n\n";
      os << '|';
      for (const auto& c : t.columns) os << ' ' << md_cell(c) << " |";
      os << "\n|";
      for (std::size_t i = 0; i < t.columns.size(); ++i) os << "---|";
      os << '\n';
      for (const auto& r : t.rows) {
        os << '|';
        for (const auto& c : r) os << ' ' << md_cell(c) << " |";
        os << '\n';
      }
      for (const auto& n : t.notes) os << '\n' << n << '\n';
      return os.str();
  }
  return {};
}

Table sweep_table(const SweepDocument& doc, const ReportOptions& options) {
  if (!(options.price_normalizer > 0.0)) throw InvalidArgument("price normalizer must be > 0");
  const auto& rows = doc.result.rows;
  const bool econ = options.power_w.has_value();
  const std::string per = "P per " + format_shortest(options.price_normalizer) + " EUR";

  Table t;
  t.title = "Sweep: " + doc.workload.name;
  t.columns = {"Rank", "DD grid", "N_rank", "N_pme", "N_th", "N_th_pme", "DLB", "HT", "nstlist", "gpu_id",
               "P (ns/d)", "stdev", "Cost (EUR)", per};
  if (econ) {
    t.columns.insert(t.columns.end(), {"Energy (EUR)", "Traj. cost (EUR/us)", "Yield (us/kEUR)"});
  }
  t.columns.insert(t.columns.end(), {"Runs ok/failed", "Advisories", "Command"});

  json jrows = json::array();
  std::vector<std::string> advisory_lines;
  std::size_t rank = 0;
  for (std::size_t idx : rank_rows(rows)) {
    const auto& r = rows[idx];
    const auto& c = r.config;
    const std::string rank_text = r.ok ? std::to_string(++rank) : "-";
    const DdGrid dd = c.dd_grid ? *c.dd_grid : dd_grid_for(c.pp_ranks(), doc.workload.box);
    const auto cost = config_cost(c, doc.node, doc.econ);
    std::optional<double> ppp;
    if (r.ok && cost && *cost > 0.0) ppp = perf_per_price(r.mean, *cost, options.price_normalizer);
    std::optional<EconRow> er;
    if (econ && r.ok && cost) er = econ_row(r.mean, *options.power_w, *cost, doc.econ);

    std::string kinds;
    for (const auto& a : r.advisories) kinds += (kinds.empty() ? "" : ";") + std::string(to_string(a.kind));

    std::vector<std::string> cells = {rank_text,
                                      grid_text(dd),
                                      std::to_string(c.n_rank),
                                      std::to_string(c.n_pme),
                                      c.n_th ? std::to_string(c.n_th) : "auto",
                                      c.n_pme ? std::to_string(c.pme_threads()) : "-",
                                      std::string(to_string(c.dlb)),
                                      c.use_ht ? "on" : "off",
                                      c.nstlist ? std::to_string(c.nstlist) : "-",
                                      c.gpu_id.empty() ? "-" : c.gpu_id,
                                      r.ok ? format_fixed(r.mean, 3) : "failed",
                                      r.ok ? format_fixed(r.stdev, 3) : "-",
                                      fixed_or(cost, 0),
                                      fixed_or(ppp, 2)};
    if (econ) {
      cells.push_back(er ? format_fixed(er->energy_cost, 0) : "n/a");
      cells.push_back(er ? format_fixed(er->trajectory_cost, 0) : "n/a");
      cells.push_back(er ? format_fixed(er->yield, 3) : "n/a");
    }
    cells.push_back(std::to_string(r.repeats_ok) + "/" + std::to_string(r.repeats_failed));
    cells.push_back(kinds.empty() ? "-" : kinds);
    cells.push_back(r.command);
    t.rows.push_back(std::move(cells));

    json jr;
    jr["rank"] = r.ok ? json(rank) : json(nullptr);
    jr["index"] = idx;
    jr["ok"] = r.ok;
    jr["config"] = encode(c);
    jr["dd_grid"] = encode(dd);
    jr["mean_ns_day"] = r.ok ? json(r.mean) : json(nullptr);
    jr["stdev_ns_day"] = r.ok ? json(r.stdev) : json(nullptr);
    jr["repeats_ok"] = r.repeats_ok;
    jr["repeats_failed"] = r.repeats_failed;
    jr["cost_eur"] = num_or_null(cost);
    jr["perf_per_price"] = num_or_null(ppp);
    if (econ) jr["econ"] = er ? encode(*er) : json(nullptr);
    json adv = json::array();
    for (const auto& a : r.advisories) adv.push_back(encode(a));
    jr["advisories"] = adv;
    jr["error"] = r.error;
    jr["command"] = r.command;
    jrows.push_back(std::move(jr));

    for (const auto& a : r.advisories) {
      advisory_lines.push_back("Rank " + rank_text + " (" + std::string(to_string(a.kind)) + "): `" + r.command +
                               "`\n\n```\n" + a.text + "\n```");
    }
  }

  t.notes.push_back("Best: " + (doc.result.best ? rows[*doc.result.best].command : std::string("none")));
  t.notes.push_back("Executor: " + doc.result.executor + ", repeats per config: " +
                    std::to_string(doc.result.repeats));
  if (!advisory_lines.empty()) {
    t.notes.push_back("## Advisories");
    t.notes.insert(t.notes.end(), advisory_lines.begin(), advisory_lines.end());
  }
  if (!doc.result.failures.empty()) {
    t.notes.push_back("## Failures");
    std::string list;
    for (const auto& f : doc.result.failures)
      list += "- row " + std::to_string(f.row) + ", repeat " + std::to_string(f.repeat) + ": " + f.message + "\n";
    list.pop_back();
    t.notes.push_back(list);
  }

  json data;
  data["workload"] = doc.workload.name;
  data["executor"] = doc.result.executor;
  data["repeats"] = doc.result.repeats;
  data["best_index"] = doc.result.best ? json(*doc.result.best) : json(nullptr);
  data["price_normalizer_eur"] = options.price_normalizer;
  data["power_w"] = num_or_null(options.power_w);
  data["rows"] = jrows;
  t.data = data;
  return t;
}

std::string render_sweep_report(const SweepDocument& doc, ReportFormat format, const ReportOptions& options) {
  return render(sweep_table(doc, options), format);
}

Table cost_table(const json& input) {
  only_keys(input, "", {"title", "econ", "digits", "normalizer", "rows"});
  EconParams params;
  if (input.contains("econ")) params = decode<EconParams>(input["econ"], "econ");
  DisplayDigits d;
  if (input.contains("digits")) {
    const auto& dj = input["digits"];
    only_keys(dj, "digits", {"power", "energy", "production", "trajectory_cost", "yield", "yield_scale"});
    auto dig = [&](const char* k, int& out) {
      if (auto v = num_at(dj, k, "digits", false)) {
        if (*v < 0 || *v > 12 || *v != std::floor(*v)) bad(std::string("digits.") + k, "expected an integer 0..12");
        out = static_cast<int>(*v);
      }
    };
    dig("power", d.power);
    dig("energy", d.energy);
    dig("production", d.production);
    dig("trajectory_cost", d.trajectory_cost);
    dig("yield", d.yield);
    if (auto v = num_at(dj, "yield_scale", "digits", false)) {
      if (!(*v > 0)) bad("digits.yield_scale", "must be > 0");
      d.yield_scale = *v;
    }
  }
  const auto normalizer = num_at(input, "normalizer", "", false);
  if (normalizer && !(*normalizer > 0)) bad("normalizer", "must be > 0");

  Table t;
  t.title = input.contains("title") && input["title"].is_string() ? input["title"].get<std::string>()
                                                                   : "Lifetime cost";
  const std::string yunit = d.yield_scale == 1000.0 ? "ns/kEUR" : d.yield_scale == 1.0 ? "us/kEUR" : "scaled/kEUR";
  t.columns = {"Hardware", "P (ns/d)", "Power (W)", "Energy (EUR)", "Node (EUR)", "Production (us)",
               "Traj. cost (EUR/us)", "Yield (" + yunit + ")"};
  if (normalizer) t.columns.push_back("P per " + format_shortest(*normalizer) + " EUR");

  const auto& rows = array_at(input, "rows", "");
  json out = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string path = "rows[" + std::to_string(i) + "]";
    const auto& r = rows[i];
    only_keys(r, path, {"label", "performance", "power_w", "reading", "node_cost_eur"});
    const auto label = str_at(r, "label", path);
    const auto perf = num_at(r, "performance", path, false);
    double power = 0.0;
    if (r.contains("reading")) {
      if (r.contains("power_w")) bad(path, "give either power_w or reading, not both");
      try {
        power = effective_power(decode<PowerReading>(r["reading"], path + ".reading"));
      } catch (const InvalidArgument& e) {
        bad(path + ".reading", e.what());
      }
    } else {
      power = *num_at(r, "power_w", path, true);
      if (power < 0) bad(path + ".power_w", "must be >= 0");
    }
    const double node_cost = *num_at(r, "node_cost_eur", path, true);
    if (node_cost < 0) bad(path + ".node_cost_eur", "must be >= 0");
    if (perf && !(*perf > 0)) bad(path + ".performance", "must be > 0");

    json jr;
    jr["label"] = label;
    jr["performance"] = num_or_null(perf);
    std::vector<std::string> cells{label, perf ? format_shortest(*perf) : "-"};
    if (perf) {
      const auto shown = econ_row_display(*perf, power, node_cost, params, d);
      const auto exact = econ_row(*perf, power, node_cost, params);
      cells.insert(cells.end(), {format_fixed(shown.effective_power_w, d.power), format_fixed(shown.energy_cost, d.energy),
                                 format_fixed(node_cost, 0), format_fixed(shown.production_us, d.production),
                                 format_fixed(shown.trajectory_cost, d.trajectory_cost),
                                 format_fixed(shown.yield, d.yield)});
      jr["display"] = encode(shown);
      jr["exact"] = encode(exact);
    } else {
      const double pw = round_display(power, d.power);
      const double energy = round_display(energy_cost(pw, params), d.energy);
      cells.insert(cells.end(), {format_fixed(pw, d.power), format_fixed(energy, d.energy), format_fixed(node_cost, 0),
                                 "-", "-", "-"});
      jr["display"] = {{"effective_power_w", pw}, {"energy_cost_eur", energy}, {"node_cost_eur", node_cost}};
      jr["exact"] = {{"effective_power_w", power},
                     {"energy_cost_eur", energy_cost(power, params)},
                     {"node_cost_eur", node_cost}};
    }
    if (normalizer) {
      std::optional<double> ppp;
      if (perf && node_cost > 0) ppp = perf_per_price(*perf, node_cost, *normalizer);
      cells.push_back(fixed_or(ppp, 2, "-"));
      jr["perf_per_price"] = num_or_null(ppp);
    }
    t.rows.push_back(std::move(cells));
    out.push_back(std::move(jr));
  }
  t.notes.push_back("Lifetime " + format_shortest(params.lifetime_years) + " years at " +
                    format_shortest(params.energy_price_eur_per_kwh) + " EUR/kWh including cooling.");
  t.data = {{"econ", encode(params)}, {"rows", out}};
  return t;
}

Table scaling_table(const json& input) {
  only_keys(input, "", {"title", "e_digits", "series", "multi"});
  int e_digits = 2;
  if (auto v = num_at(input, "e_digits", "", false)) {
    if (*v < 0 || *v > 12 || *v != std::floor(*v)) bad("e_digits", "expected an integer 0..12");
    e_digits = static_cast<int>(*v);
  }
  Table t;
  t.title = input.contains("title") && input["title"].is_string() ? input["title"].get<std::string>()
                                                                   : "Parallel efficiency";
  t.columns = {"Series", "Nodes", "P (ns/d)", "E", "P multi (ns/d)", "E multi", "Multi gain (%)"};
  json jseries = json::array();

  if (input.contains("series")) {
    const auto& series = array_at(input, "series", "");
    for (std::size_t s = 0; s < series.size(); ++s) {
      const std::string path = "series[" + std::to_string(s) + "]";
      only_keys(series[s], path, {"label", "points"});
      const auto label = str_at(series[s], "label", path);
      const auto& pts = array_at(series[s], "points", path);
      std::vector<std::pair<std::uint32_t, double>> points;
      std::optional<double> p1;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto pp = path + ".points[" + std::to_string(i) + "]";
        if (!pts[i].is_array() || pts[i].size() != 2 || !pts[i][0].is_number_unsigned() || !pts[i][1].is_number())
          bad(pp, "expected [nodes, ns_per_day]");
        const auto m = pts[i][0].get<std::uint32_t>();
        const double p = pts[i][1].get<double>();
        if (m < 1 || !(p > 0)) bad(pp, "nodes must be >= 1 and performance > 0");
        if (m == 1) p1 = p;
        points.emplace_back(m, p);
      }
      if (!p1) bad(path + ".points", "needs a single-node point [1, P]");
      json jp = json::array();
      for (const auto& [m, p] : points) {
        const double e = parallel_efficiency(p, m, *p1);
        t.rows.push_back({label, std::to_string(m), format_shortest(p), format_fixed(e, e_digits), "", "", ""});
        jp.push_back({{"nodes", m}, {"performance", p}, {"efficiency", e},
                      {"efficiency_display", round_display(e, e_digits)}});
      }
      jseries.push_back({{"label", label}, {"points", jp}});
    }
  }

  json jmulti = json::array();
  if (input.contains("multi")) {
    const auto& multi = array_at(input, "multi", "");
    std::optional<double> base;
    for (std::size_t i = 0; i < multi.size(); ++i) {
      const std::string path = "multi[" + std::to_string(i) + "]";
      only_keys(multi[i], path, {"nodes_per_replica", "single", "multi"});
      const auto m = num_at(multi[i], "nodes_per_replica", path, true);
      const double single = *num_at(multi[i], "single", path, true);
      const double per_replica = *num_at(multi[i], "multi", path, true);
      if (*m < 1 || *m != std::floor(*m)) bad(path + ".nodes_per_replica", "expected an integer >= 1");
      const auto nodes = static_cast<std::uint32_t>(*m);
      if (i == 0) {
        if (nodes != 1) bad(path + ".nodes_per_replica", "the first multi row must be the single-node one");
        base = single;
      }
      const double es = parallel_efficiency(single, nodes, *base);
      const double em = parallel_efficiency(per_replica, nodes, *base);
      const double gain = multi_sim_gain(single, per_replica);
      t.rows.push_back({"multi-sim", std::to_string(nodes), format_shortest(single), format_fixed(es, e_digits),
                        format_shortest(per_replica), format_fixed(em, e_digits), format_fixed(gain, 1)});
      jmulti.push_back({{"nodes_per_replica", nodes}, {"single", single}, {"multi", per_replica},
                        {"e_single", es}, {"e_multi", em}, {"gain_pct", gain}});
    }
  }
  t.notes.push_back("E = P_m / (m * P_1); multi gain = per-replica P over the single run.");
  t.data = {{"series", jseries}, {"multi", jmulti}};
  return t;
}

Table recommend_table(const json& input, const CriteriaWeights& weights) {
  only_keys(input, "", {"title", "candidates"});
  const auto& cj = array_at(input, "candidates", "");
  std::vector<HardwareCandidate> cands;
  for (std::size_t i = 0; i < cj.size(); ++i)
    cands.push_back(decode<HardwareCandidate>(cj[i], "candidates[" + std::to_string(i) + "]"));
  const auto ranked = rank_hardware(cands, weights);

  Table t;
  t.title = input.contains("title") && input["title"].is_string() ? input["title"].get<std::string>()
                                                                   : "Hardware ranking";
  t.columns = {"Rank", "Hardware", "Score", "C1 P/price", "C2 node P", "C3 best P", "C4 yield", "C5 rack U"};
  std::string wtext;
  json jw = json::object();
  for (const auto& [c, w] : weights) {
    wtext += (wtext.empty() ? "" : ", ") + to_string(c) + "=" + format_shortest(w);
    jw[to_string(c)] = w;
  }
  json out = json::array();
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const auto& c = cands[ranked[k].index];
    auto cell = [](const std::optional<double>& v) { return v ? format_shortest(*v) : std::string("-"); };
    t.rows.push_back({std::to_string(k + 1), c.label, format_fixed(ranked[k].score, 3), cell(c.perf_per_price),
                      cell(c.node_performance), cell(c.time_to_solution), cell(c.yield),
                      c.rack_units ? format_shortest(*c.rack_units) : "desktop"});
    json jr = encode(c);
    jr["rank"] = k + 1;
    jr["index"] = ranked[k].index;
    jr["score"] = ranked[k].score;
    out.push_back(std::move(jr));
  }
  t.notes.push_back("Weights: " + wtext + ". Criteria are min-max normalized; C5 counts lower as better.");
  t.data = {{"weights", jw}, {"ranking", out}};
  return t;
}

Table metrics_table(const std::vector<std::pair<std::string, PerfMetrics>>& logs) {
  Table t;
  t.title = "Log metrics";
  t.columns = {"Source", "P (ns/d)", "PME load", "PP/PME wait (%)", "GPU (ms)", "CPU (ms)", "GPU/CPU",
               "rc initial", "rc final", "PP cost ratio", "PME cost ratio", "Advisories", "Warnings"};
  auto opt = [](const std::optional<double>& v) { return v ? format_shortest(*v) : std::string("-"); };
  json out = json::array();
  for (const auto& [src, m] : logs) {
    std::string kinds;
    for (const auto& n : m.notes) kinds += (kinds.empty() ? "" : ";") + std::string(to_string(n.kind));
    std::vector<std::string> cells{src, opt(m.performance)};
    cells.push_back(m.pme ? format_shortest(m.pme->load) : "-");
    cells.push_back(m.pme ? opt(m.pme->wait_pct) : "-");
    if (m.gpu_cpu) {
      cells.insert(cells.end(), {format_shortest(m.gpu_cpu->gpu_ms), format_shortest(m.gpu_cpu->cpu_ms),
                                 format_shortest(m.gpu_cpu->ratio)});
    } else {
      cells.insert(cells.end(), {"-", "-", "-"});
    }
    if (m.load_balance) {
      const auto& lb = *m.load_balance;
      cells.insert(cells.end(), {format_shortest(lb.initial.rcoulomb), format_shortest(lb.final.rcoulomb),
                                 format_shortest(lb.cost_ratio_pp), format_shortest(lb.cost_ratio_pme)});
    } else {
      cells.insert(cells.end(), {"-", "-", "-", "-"});
    }
    cells.push_back(kinds.empty() ? "-" : kinds);
    cells.push_back(std::to_string(m.warnings.size()));
    t.rows.push_back(std::move(cells));

    for (const auto& n : m.notes)
      t.notes.push_back(src + " (" + std::string(to_string(n.kind)) + "):\n\n```\n" + n.text + "\n```");
    for (const auto& w : m.warnings) t.notes.push_back(src + ": warning: " + w);
    json jm = encode(m);
    jm["source"] = src;
    out.push_back(std::move(jm));
  }
  t.data = out;
  return t;
}

}  // namespace mdtune
