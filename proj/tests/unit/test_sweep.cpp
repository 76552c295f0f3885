#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

#include "mdtune/error.hpp"
#include "mdtune/json_io.hpp"
#include "mdtune/numfmt.hpp"
#include "mdtune/sweep.hpp"
#include "support.hpp"

using namespace mdtune;
namespace fs = std::filesystem;

namespace {

// Replies with a fixed ns/day per rendered command; unknown commands fail.
class TableExecutor : public Executor {
 public:
  std::map<std::string, double> perf;
  std::string extra_log;
  std::uint32_t fail_first_repeats = 0;
  bool exclusive_ = false;

  RunOutcome run(const LaunchConfig& cfg, const Workload&, const EngineProfile& e, std::uint32_t repeat) override {
    const auto it = perf.find(render_command(cfg, e));
    if (it == perf.end()) return {false, "", "no such config"};
    if (repeat < fail_first_repeats) return {false, "", "flaky node"};
    return {true, extra_log + "Performance:    " + format_shortest(it->second) + "    1.000\n", ""};
  }
  bool exclusive() const override { return exclusive_; }
  std::string name() const override { return "table"; }
};

LaunchConfig cfg(std::uint32_t ranks, Dlb dlb = Dlb::auto_, bool ht = false) {
  LaunchConfig c;
  c.n_rank = ranks;
  c.n_th = 40 / ranks / (ht ? 1 : 2);
  c.dlb = dlb;
  c.use_ht = ht;
  return c;
}

std::vector<LaunchConfig> random_configs(std::mt19937& rng, const NodeSpec& node) {
  EnumerationOptions opt;
  if (rng() % 2) opt.nstlist = {10, 20, 40, 80};
  auto all = enumerate_single_node(node, opt);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min<std::size_t>(all.size(), 4 + rng() % 24));
  return all;
}

// Independent ordering: larger printed mean, then fewer ranks, DLB off < auto < on, HT off, input order.
std::size_t brute_force_best(const std::vector<SweepRow>& rows) {
  auto dlb = [](Dlb d) { return d == Dlb::off ? 0 : d == Dlb::auto_ ? 1 : 2; };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].ok) continue;
    const auto& c = rows[i].config;
    const auto key = std::make_tuple(-rows[i].mean, c.n_rank, dlb(c.dlb), c.use_ht ? 1 : 0, i);
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = rows[*best].config;
    if (key < std::make_tuple(-rows[*best].mean, b.n_rank, dlb(b.dlb), b.use_ht ? 1 : 0, *best)) best = i;
  }
  return *best;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "mdtune-test-XXXXXX").string();
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("synthetic repeats are identical, so the spread is zero") {
  SyntheticNodeProfile p;
  p.node = testing::node_2x10(2);
  SyntheticExecutor ex(p);
  SweepOptions o;
  o.repeats = 3;
  const auto res = run_sweep(enumerate_single_node(p.node), ex, testing::mem_workload(), o);
  REQUIRE(res.best);
  for (const auto& r : res.rows) {
    CHECK(r.ok);
    CHECK(r.repeats_ok == 3);
    CHECK(r.samples.size() == 3);
    CHECK(r.stdev == 0.0);
    CHECK(r.mean == r.samples[0]);
  }
  CHECK(res.failures.empty());
}

TEST_CASE("select_best equals the brute-force argmax on generated sweeps") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    SyntheticNodeProfile p;
    p.node = testing::node_2x10(rng() % 5);
    p.cpu_rate *= 0.5 + std::uniform_real_distribution<double>(0, 1)(rng);
    p.gpu_rate *= 0.5 + std::uniform_real_distribution<double>(0, 1)(rng);
    p.nstlist_penalty *= 0.5 + std::uniform_real_distribution<double>(0, 1)(rng);
    const auto w = rng() % 2 ? testing::mem_workload() : testing::rib_workload();
    const auto configs = random_configs(rng, p.node);
    SyntheticExecutor ex(p);
    SweepOptions o;
    o.repeats = 1;
    const auto res = run_sweep(configs, ex, w, o);
    REQUIRE(res.best);
    CHECK(*res.best == brute_force_best(res.rows));
    CHECK(select_best(res) == res.rows[*res.best].config);
    // No config the model rates higher after printing was passed over.
    double top = 0;
    for (const auto& c : configs) top = std::max(top, round_display(predict_performance(p, c, w), 3));
    CHECK(res.rows[*res.best].mean == top);
  }
}

TEST_CASE("best is scale invariant and independent of executor concurrency") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    TableExecutor a, b;
    std::vector<LaunchConfig> configs;
    for (std::uint32_t r : {1U, 2U, 4U, 5U, 10U, 20U})
      for (Dlb d : {Dlb::off, Dlb::auto_, Dlb::on})
        for (bool ht : {false, true}) {
          configs.push_back(cfg(r, d, ht));
          const double v = 1 + rng() % 8;  // few distinct values: plenty of ties
          a.perf[render_command(configs.back(), engine_for(testing::mem_workload(), {}))] = v;
          b.perf[render_command(configs.back(), engine_for(testing::mem_workload(), {}))] = v * 1024;
        }
    b.exclusive_ = true;
    const auto ra = run_sweep(configs, a, testing::mem_workload());
    const auto rb = run_sweep(configs, b, testing::mem_workload());
    REQUIRE(ra.best);
    CHECK(ra.best == rb.best);
    CHECK(*ra.best == brute_force_best(ra.rows));
    CHECK(rank_rows(ra.rows) == rank_rows(rb.rows));
  }
}

TEST_CASE("means equal to 12 significant digits tie, and the smaller run wins") {
  TableExecutor ex;
  const auto e = engine_for(testing::mem_workload(), {});
  const auto big = cfg(20, Dlb::on), small = cfg(4, Dlb::on);
  ex.perf[render_command(big, e)] = 79.13400000000001;
  ex.perf[render_command(small, e)] = 79.134;
  auto res = run_sweep({big, small}, ex, testing::mem_workload());
  CHECK(res.best == 1);

  ex.perf[render_command(big, e)] = 79.13400001;
  res = run_sweep({big, small}, ex, testing::mem_workload());
  CHECK(res.best == 0);

  const auto off = cfg(4, Dlb::off), on = cfg(4, Dlb::on), aut = cfg(4, Dlb::auto_);
  for (const auto& c : {off, on, aut}) ex.perf[render_command(c, e)] = 50;
  res = run_sweep({on, aut, off}, ex, testing::mem_workload());
  CHECK(res.best == 2);
  CHECK(rank_rows(res.rows) == std::vector<std::size_t>{2, 1, 0});
}

TEST_CASE("rows with partial failures still count; fully failed rows rank last") {
  TableExecutor ex;
  ex.fail_first_repeats = 1;
  const auto e = engine_for(testing::mem_workload(), {});
  const auto good = cfg(2), missing = cfg(5);
  ex.perf[render_command(good, e)] = 10;
  SweepOptions o;
  o.repeats = 3;
  const auto res = run_sweep({missing, good}, ex, testing::mem_workload(), o);
  CHECK(!res.rows[0].ok);
  CHECK(res.rows[0].repeats_failed == 3);
  CHECK(res.rows[0].error == "no such config");
  CHECK(res.rows[1].ok);
  CHECK(res.rows[1].repeats_ok == 2);
  CHECK(res.rows[1].repeats_failed == 1);
  CHECK(res.rows[1].error.empty());
  CHECK(res.best == 1);
  CHECK(rank_rows(res.rows) == std::vector<std::size_t>{1, 0});
  CHECK(res.failures.size() == 4);
}

TEST_CASE("no successful row means no best") {
  TableExecutor ex;
  const auto res = run_sweep({cfg(2)}, ex, testing::mem_workload());
  CHECK(!res.best);
  CHECK_THROWS_AS(select_best(res), InvalidArgument);
}

TEST_CASE("sample standard deviation over repeats") {
  class Alternating : public TableExecutor {
   public:
    RunOutcome run(const LaunchConfig&, const Workload&, const EngineProfile&, std::uint32_t r) override {
      const double v[] = {10.0, 12.0, 14.0};
      return {true, "Performance: " + format_shortest(v[r % 3]) + " 1\n", ""};
    }
  } ex;
  SweepOptions o;
  o.repeats = 3;
  const auto res = run_sweep({cfg(2)}, ex, testing::mem_workload(), o);
  CHECK(res.rows[0].mean == 12.0);
  CHECK(res.rows[0].stdev == doctest::Approx(2.0));
}

TEST_CASE("a log without a Performance line is a failed repeat") {
  class Silent : public TableExecutor {
   public:
    RunOutcome run(const LaunchConfig&, const Workload&, const EngineProfile&, std::uint32_t) override {
      return {true, "Started mdrun\n", ""};
    }
  } ex;
  const auto res = run_sweep({cfg(2)}, ex, testing::mem_workload());
  CHECK(!res.rows[0].ok);
  CHECK(res.rows[0].error == "log has no Performance line");
}

TEST_CASE("PME overprovisioning advisories reach the sweep row verbatim") {
  TableExecutor ex;
  ex.extra_log = testing::fixture("si_pme_overprovisioned.log") + "\n";
  const auto e = engine_for(testing::mem_workload(), {});
  ex.perf[render_command(cfg(4), e)] = 20;
  const auto res = run_sweep({cfg(4)}, ex, testing::mem_workload());
  REQUIRE(res.rows[0].advisories.size() == 1);
  CHECK(res.rows[0].advisories[0].kind == AdvisoryKind::pme_overprovisioned);
  CHECK(res.rows[0].advisories[0].text.find("had less work to do than the PP nodes.") != std::string::npos);
  REQUIRE(res.rows[0].metrics);
  CHECK(res.rows[0].metrics->pme->load == 0.625);
}

TEST_CASE("synthetic sweeps are byte-reproducible") {
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
    CHECK(text == first);
  }
}

TEST_CASE("engine_for applies steps and the reset point") {
  auto w = testing::mem_workload();
  SweepOptions o;
  auto e = engine_for(w, o);
  CHECK(e.nsteps == 15000);
  CHECK(e.resetstep == 10000);
  CHECK(e.tpr == "MEM.tpr");
  o.reset_fraction = 0.5;
  CHECK(engine_for(w, o).resetstep == 7500);
  o.reset_fraction = 1.0;
  CHECK_THROWS_AS(engine_for(w, o), InvalidArgument);
  o.reset_fraction.reset();
  o.repeats = 0;
  TableExecutor ex;
  CHECK_THROWS_AS(run_sweep({cfg(1)}, ex, w, o), InvalidArgument);
}

TEST_CASE("run directory names are stable hashes") {
  const auto a = ShellExecutor::run_dir_name("mdrun -ntmpi 2 -s in.tpr", 0);
  CHECK(a == ShellExecutor::run_dir_name("mdrun -ntmpi 2 -s in.tpr", 0));
  CHECK(a != ShellExecutor::run_dir_name("mdrun -ntmpi 2 -s in.tpr", 1));
  CHECK(a.size() == 4 + 16);
  CHECK(a.rfind("run_", 0) == 0);
  // FNV-1a 64 of "#0".
  CHECK(ShellExecutor::run_dir_name("", 0) == "run_9acb9100c59c5970");
}

TEST_CASE("shell executor runs a fake engine found on PATH") {
  TempDir bin, work;
  const auto script = bin.path / "mdrun";
  {
    std::ofstream s(script);
    s << "#!/bin/sh\n"
         "case \"$*\" in *\"-ntmpi 5\"*) echo crashed >&2; exit 3;; esac\n"
         "n=$(echo \"$*\" | sed 's/.*-ntmpi \\([0-9]*\\).*/\\1/')\n"
         "printf 'NOTE: 8.3 %% performance was lost because the PME nodes\\n"
         "      had less work to do than the PP nodes.\\n\\n' > md.log\n"
         "echo \"Performance:    $((10 + n)).500    1.000\" >> md.log\n";
  }
  fs::permissions(script, fs::perms::owner_all);
  const std::string old_path = std::getenv("PATH") ? std::getenv("PATH") : "";
  ::setenv("PATH", (bin.path.string() + ":" + old_path).c_str(), 1);

  ShellExecutor ex(work.path);
  SweepOptions o;
  o.repeats = 2;
  const auto res = run_sweep({cfg(2), cfg(5), cfg(4)}, ex, testing::mem_workload(), o);
  ::setenv("PATH", old_path.c_str(), 1);

  CHECK(res.executor == "shell");
  CHECK(res.rows[0].mean == 12.5);
  CHECK(!res.rows[1].ok);
  CHECK(res.rows[1].error.find("status 3") != std::string::npos);
  CHECK(res.rows[2].mean == 14.5);
  CHECK(res.best == 2);
  CHECK(res.rows[2].advisories.size() == 1);
  CHECK(fs::exists(work.path / ShellExecutor::run_dir_name(res.rows[0].command, 1) / "md.log"));
  CHECK(testing::slurp(work.path / ShellExecutor::run_dir_name(res.rows[1].command, 0) / "mdrun.out") ==
        "crashed\n");
}

TEST_CASE("shell executor without an engine binary is unavailable") {
  TempDir work;
  ShellExecutor ex(work.path);
  SweepOptions o;
  o.engine.mdrun = "mdrun-that-does-not-exist-anywhere";
  CHECK_THROWS_AS(run_sweep({cfg(2)}, ex, testing::mem_workload(), o), ExecutorUnavailable);
  o.engine.flavor = MpiFlavor::external_mpi;
  o.engine.mpirun = "/nonexistent/mpirun";
  CHECK_THROWS_AS(ex.check_available(o.engine), ExecutorUnavailable);
}
