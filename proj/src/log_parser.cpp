#include "mdtune/log_parser.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mdtune/error.hpp"
#include "mdtune/numfmt.hpp"

namespace mdtune {

namespace {

constexpr std::string_view kPmeLoad = "Average PME mesh/force load:";
constexpr std::string_view kPmeWait = "spent waiting due to PP/PME imbalance:";
constexpr std::string_view kGpuCpu = "Force evaluation time GPU/CPU:";
constexpr std::string_view kLbHeader = "PP/PME load balancing changed the cut-off and PME settings:";
constexpr std::string_view kPerformance = "Performance:";

struct Line {
  std::string_view text;
  std::size_t offset;
};

std::vector<Line> split_lines(std::string_view s) {
  std::vector<Line> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view t = s.substr(start, end - start);
    if (!t.empty() && t.back() == '\r') t.remove_suffix(1);
    if (end == s.size() && t.empty()) break;
    out.push_back({t, start});
    start = end + 1;
  }
  return out;
}

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool is_blank(std::string_view s) { return ltrim(s).empty(); }

// Left-to-right reader over one line; errors carry absolute byte offsets.
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t base, std::size_t pos = 0) : s_(text), base_(base), pos_(pos) {}

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  void expect(std::string_view lit) {
    skip_ws();
    if (s_.substr(pos_, lit.size()) != lit)
      throw ParseError("expected '" + std::string(lit) + "'", base_ + pos_);
    pos_ += lit.size();
  }

  bool accept(std::string_view lit) {
    skip_ws();
    if (s_.substr(pos_, lit.size()) != lit) return false;
    pos_ += lit.size();
    return true;
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_number_char(s_[pos_])) ++pos_;
    const auto tok = s_.substr(start, pos_ - start);
    if (tok.empty()) throw ParseError("expected a number", base_ + start);
    double v = 0.0;
    if (!parse_double(tok, v) || !std::isfinite(v))
      throw ParseError("malformed number '" + std::string(tok) + "' (only '.' decimals are accepted)", base_ + start);
    return v;
  }

  std::uint32_t count() {
    skip_ws();
    const std::size_t start = pos_;
    const double v = number();
    if (v < 1.0 || v != std::floor(v) || v > 1e9) throw ParseError("expected a positive integer", base_ + start);
    return static_cast<std::uint32_t>(v);
  }

  std::size_t abs() const { return base_ + pos_; }

 private:
  static bool is_number_char(char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == ',' || c == '-' || c == '+' || c == 'e' || c == 'E';
  }
  std::string_view s_;
  std::size_t base_;
  std::size_t pos_;
};

// Index of the last line containing `needle`, or -1.
long last_line_with(const std::vector<Line>& lines, std::string_view needle) {
  for (long i = static_cast<long>(lines.size()) - 1; i >= 0; --i)
    if (lines[static_cast<std::size_t>(i)].text.find(needle) != std::string_view::npos) return i;
  return -1;
}

Cursor after(const Line& l, std::string_view marker) {
  const auto p = l.text.find(marker);
  return Cursor(l.text, l.offset, p + marker.size());
}

LoadBalanceRow parse_lb_row(const Line& l, std::string_view label) {
  Cursor c(l.text, l.offset);
  c.expect(label);
  LoadBalanceRow r;
  r.rcoulomb = c.number();
  c.expect("nm");
  r.rlist = c.number();
  c.expect("nm");
  r.grid.nx = c.count();
  r.grid.ny = c.count();
  r.grid.nz = c.count();
  r.spacing = c.number();
  c.expect("nm");
  r.inv_beta = c.number();
  c.expect("nm");
  if (!(r.rcoulomb > 0 && r.rlist > 0 && r.spacing > 0 && r.inv_beta > 0))
    throw ParseError("load balancing lengths must be positive", l.offset);
  return r;
}

}  // namespace

std::string_view to_string(AdvisoryKind k) {
  switch (k) {
    case AdvisoryKind::pme_overprovisioned: return "pme_overprovisioned";
    case AdvisoryKind::gpu_underutilized: return "gpu_underutilized";
    case AdvisoryKind::other: return "other";
  }
  return "other";
}

AdvisoryKind parse_advisory_kind(std::string_view text) {
  if (text == "pme_overprovisioned") return AdvisoryKind::pme_overprovisioned;
  if (text == "gpu_underutilized") return AdvisoryKind::gpu_underutilized;
  if (text == "other") return AdvisoryKind::other;
  throw InvalidArgument("unknown advisory kind '" + std::string(text) + "'");
}

std::optional<PmeLoad> parse_pme_load(std::string_view text) {
  const auto lines = split_lines(text);
  const long i = last_line_with(lines, kPmeLoad);
  if (i < 0) return std::nullopt;
  const auto& line = lines[static_cast<std::size_t>(i)];
  PmeLoad out;
  out.load = after(line, kPmeLoad).number();
  if (out.load < 0) throw ParseError("PME load must be >= 0", line.offset);
  // The wait line follows directly; tolerate a blank line in between.
  for (std::size_t j = static_cast<std::size_t>(i) + 1; j < lines.size() && j <= static_cast<std::size_t>(i) + 2; ++j) {
    if (lines[j].text.find(kPmeWait) != std::string_view::npos) {
      auto c = after(lines[j], kPmeWait);
      const double w = c.number();
      if (w < 0 || w > 100) throw ParseError("PP/PME wait percentage outside [0,100]", lines[j].offset);
      out.wait_pct = w;
      break;
    }
    if (!is_blank(lines[j].text)) break;
  }
  return out;
}

std::optional<GpuCpuRatio> parse_gpu_cpu_ratio(std::string_view text) {
  const auto lines = split_lines(text);
  const long i = last_line_with(lines, kGpuCpu);
  if (i < 0) return std::nullopt;
  auto c = after(lines[static_cast<std::size_t>(i)], kGpuCpu);
  GpuCpuRatio r;
  r.gpu_ms = c.number();
  c.expect("ms/");
  r.cpu_ms = c.number();
  c.expect("ms");
  c.expect("=");
  r.ratio = c.number();
  if (r.gpu_ms < 0 || r.cpu_ms < 0 || r.ratio < 0)
    throw ParseError("GPU/CPU timings must be >= 0", lines[static_cast<std::size_t>(i)].offset);
  return r;
}

std::optional<ParsedLoadBalance> parse_load_balance_table(std::string_view text) {
  const auto lines = split_lines(text);
  const long h = last_line_with(lines, kLbHeader);
  if (h < 0) return std::nullopt;
  const auto& header = lines[static_cast<std::size_t>(h)];
  const Line* initial = nullptr;
  const Line* final_row = nullptr;
  const Line* cost = nullptr;
  for (std::size_t j = static_cast<std::size_t>(h) + 1; j < lines.size() && j <= static_cast<std::size_t>(h) + 6; ++j) {
    const auto t = ltrim(lines[j].text);
    if (t.empty()) break;
    if (t.substr(0, 7) == "initial") initial = &lines[j];
    else if (t.substr(0, 5) == "final") final_row = &lines[j];
    else if (t.substr(0, 10) == "cost-ratio") cost = &lines[j];
  }
  if (!initial) throw ParseError("load balancing table has no 'initial' row", header.offset);
  if (!final_row) throw ParseError("load balancing table has no 'final' row", header.offset);
  if (!cost) throw ParseError("load balancing table has no 'cost-ratio' row", header.offset);

  ParsedLoadBalance lb;
  lb.initial = parse_lb_row(*initial, "initial");
  lb.final = parse_lb_row(*final_row, "final");
  Cursor c(cost->text, cost->offset);
  c.expect("cost-ratio");
  lb.cost_ratio_pp = c.number();
  lb.cost_ratio_pme = c.number();
  if (!(lb.cost_ratio_pp > 0 && lb.cost_ratio_pme > 0))
    throw ParseError("cost ratios must be positive", cost->offset);
  return lb;
}

AdvisoryKind classify_advisory(std::string_view note) {
  if (note.find("had less work to do") != std::string_view::npos ||
      note.find("decrease the number of PME") != std::string_view::npos)
    return AdvisoryKind::pme_overprovisioned;
  if (note.find("less load than the CPU") != std::string_view::npos) return AdvisoryKind::gpu_underutilized;
  // Some copies of the log cut the line at the percent sign; the
  // overloaded-GPU variant still tells itself apart by its advice.
  if (note.find("The GPU has >") != std::string_view::npos && note.find("more load") == std::string_view::npos &&
      note.find("shorter cut-off") == std::string_view::npos)
    return AdvisoryKind::gpu_underutilized;
  return AdvisoryKind::other;
}

std::vector<Advisory> parse_advisories(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<Advisory> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].text.substr(0, 5) != "NOTE:") continue;
    std::string block(lines[i].text);
    std::size_t j = i + 1;
    while (j < lines.size() && !lines[j].text.empty() && (lines[j].text[0] == ' ' || lines[j].text[0] == '\t') &&
           !is_blank(lines[j].text)) {
      block += '\n';
      block += lines[j].text;
      ++j;
    }
    out.push_back({classify_advisory(block), std::move(block)});
    i = j - 1;
  }
  return out;
}

std::optional<double> parse_performance(std::string_view text) {
  const auto lines = split_lines(text);
  for (long i = static_cast<long>(lines.size()) - 1; i >= 0; --i) {
    const auto& l = lines[static_cast<std::size_t>(i)];
    const auto t = ltrim(l.text);
    if (t.substr(0, kPerformance.size()) != kPerformance) continue;
    Cursor c(l.text, l.offset, l.text.size() - t.size() + kPerformance.size());
    const double p = c.number();
    if (!(p > 0)) throw ParseError("performance must be > 0", l.offset);
    return p;
  }
  return std::nullopt;
}

std::optional<std::string> check_ratio(const GpuCpuRatio& r) {
  if (r.cpu_ms <= 0) return std::string("GPU/CPU ratio: CPU time is zero, printed ratio not checked");
  const double q = r.gpu_ms / r.cpu_ms;
  if (std::fabs(q - r.ratio) > 0.001 + 1e-12) {
    return "GPU/CPU ratio: printed " + format_shortest(r.ratio) + " but " + format_shortest(r.gpu_ms) + "/" +
           format_shortest(r.cpu_ms) + " = " + format_fixed(q, 4);
  }
  return std::nullopt;
}

std::optional<std::string> check_cube_law(const ParsedLoadBalance& lb) {
  const double cube = std::pow(lb.final.rcoulomb / lb.initial.rcoulomb, 3.0);
  if (std::fabs(cube - lb.cost_ratio_pp) > 0.02 * lb.cost_ratio_pp) {
    return "load balancing: PP cost ratio " + format_shortest(lb.cost_ratio_pp) + " differs from (rc/rc0)^3 = " +
           format_fixed(cube, 3) + " by more than 2%";
  }
  return std::nullopt;
}

std::vector<std::string> integrity_warnings(const PerfMetrics& m) {
  std::vector<std::string> w;
  if (m.gpu_cpu)
    if (auto s = check_ratio(*m.gpu_cpu)) w.push_back(*s);
  if (m.load_balance) {
    if (auto s = check_cube_law(*m.load_balance)) w.push_back(*s);
    if (m.load_balance->shrunk()) w.emplace_back("load balancing: final cut-off is shorter than the initial one");
  }
  return w;
}

PerfMetrics parse_log(std::string_view text) {
  PerfMetrics m;
  m.performance = parse_performance(text);
  m.pme = parse_pme_load(text);
  m.gpu_cpu = parse_gpu_cpu_ratio(text);
  m.load_balance = parse_load_balance_table(text);
  m.notes = parse_advisories(text);
  m.warnings = integrity_warnings(m);
  return m;
}

std::string render_log(const PerfMetrics& m) {
  std::ostringstream os;
  if (m.load_balance) {
    const auto& lb = *m.load_balance;
    auto row = [&](const char* label, const LoadBalanceRow& r) {
      os << "   " << label << "  " << format_exact(r.rcoulomb, 3) << " nm  " << format_exact(r.rlist, 3) << " nm  "
         << "   " << r.grid.nx << ' ' << r.grid.ny << ' ' << r.grid.nz << "   " << format_exact(r.spacing, 3)
         << " nm  " << format_exact(r.inv_beta, 3) << " nm\n";
    };
    os << " " << kLbHeader << "\n"
       << "           particle-particle                    PME\n"
       << "            rcoulomb  rlist            grid      spacing   1/beta\n";
    row("initial", lb.initial);
    row("final  ", lb.final);
    os << " cost-ratio           " << format_exact(lb.cost_ratio_pp, 2) << "             "
       << format_exact(lb.cost_ratio_pme, 2) << "\n\n";
  }
  if (m.pme) {
    os << " " << kPmeLoad << " " << format_exact(m.pme->load, 3) << "\n";
    if (m.pme->wait_pct)
      os << " Part of the total run time " << kPmeWait << " " << format_exact(*m.pme->wait_pct, 1) << " %\n";
    os << "\n";
  }
  if (m.gpu_cpu) {
    const auto& g = *m.gpu_cpu;
    os << " " << kGpuCpu << " " << format_exact(g.gpu_ms, 3) << " ms/" << format_exact(g.cpu_ms, 3)
       << " ms = " << format_exact(g.ratio, 3) << "\n";
    if (g.ratio < 0.75 || g.ratio > 1.2) os << "For optimal performance this ratio should be close to 1!\n";
    os << "\n";
  }
  for (const auto& n : m.notes) os << n.text << "\n\n";
  if (m.performance) {
    const double p = *m.performance;
    os << "                 (ns/day)    (hour/ns)\n"
       << "Performance:    " << format_exact(p, 3) << "    " << format_fixed(24.0 / p, 3) << "\n";
  }
  return os.str();
}

std::string metrics_csv_header() {
  return "source,performance_ns_day,pme_mesh_force_load,pp_pme_wait_pct,gpu_ms,cpu_ms,gpu_cpu_ratio,"
         "initial_rcoulomb,final_rcoulomb,initial_grid,final_grid,cost_ratio_pp,cost_ratio_pme,advisories,warnings";
}

std::string metrics_csv_row(const PerfMetrics& m, std::string_view source) {
  auto opt = [](const std::optional<double>& v) { return v ? format_shortest(*v) : std::string(); };
  auto grid = [](const Grid3& g) {
    return std::to_string(g.nx) + "x" + std::to_string(g.ny) + "x" + std::to_string(g.nz);
  };
  std::string kinds;
  for (const auto& n : m.notes) kinds += (kinds.empty() ? "" : ";") + std::string(to_string(n.kind));
  std::ostringstream os;
  os << csv_escape(source) << ',' << opt(m.performance) << ',';
  if (m.pme) os << format_shortest(m.pme->load) << ',' << opt(m.pme->wait_pct) << ',';
  else os << ",,";
  if (m.gpu_cpu)
    os << format_shortest(m.gpu_cpu->gpu_ms) << ',' << format_shortest(m.gpu_cpu->cpu_ms) << ','
       << format_shortest(m.gpu_cpu->ratio) << ',';
  else os << ",,,";
  if (m.load_balance) {
    const auto& lb = *m.load_balance;
    os << format_shortest(lb.initial.rcoulomb) << ',' << format_shortest(lb.final.rcoulomb) << ','
       << grid(lb.initial.grid) << ',' << grid(lb.final.grid) << ',' << format_shortest(lb.cost_ratio_pp) << ','
       << format_shortest(lb.cost_ratio_pme) << ',';
  } else {
    os << ",,,,,,";
  }
  os << csv_escape(kinds) << ',' << m.warnings.size();
  return os.str();
}

}  // namespace mdtune
