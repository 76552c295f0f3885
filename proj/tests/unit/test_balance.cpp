#include <doctest.h>

#include <cmath>
#include <random>

#include "mdtune/balance.hpp"
#include "mdtune/error.hpp"
#include "mdtune/log_parser.hpp"
#include "mdtune/numfmt.hpp"
#include "support.hpp"

using namespace mdtune;

namespace {

// Largest prime factor by trial division.
std::uint32_t largest_prime_factor(std::uint32_t n) {
  std::uint32_t best = 1;
  for (std::uint32_t p = 2; p * p <= n; ++p)
    while (n % p == 0) {
      best = p;
      n /= p;
    }
  return n > 1 ? std::max(best, n) : best;
}

}  // namespace

TEST_CASE("FFT-friendly sizes against trial division") {
  for (std::uint32_t n = 1; n <= 2000; ++n) CHECK(is_fft_friendly(n) == (largest_prime_factor(n) <= 7));
  CHECK(!is_fft_friendly(0));
  for (double t : {1.0, 7.5, 11.0, 143.2, 144.0, 144.0000001, 231.1, 997.0}) {
    const auto n = fft_size_at_least(t);
    CAPTURE(t);
    CHECK(n >= std::ceil(t - 1e-6));
    CHECK(largest_prime_factor(n) <= 7);
    for (auto m = static_cast<std::uint32_t>(std::ceil(t - 1e-6)); m < n; ++m) CHECK(largest_prime_factor(m) > 7);
  }
  CHECK(fft_size_at_least(240.0) == 240);
  CHECK(fft_size_at_least(31.2 / 0.13) == 240);
  CHECK_THROWS_AS(fft_size_at_least(0.0), InvalidArgument);
}

TEST_CASE("cutoff follows the cube root of the PP cost multiplier") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> k(1.0, 6.0);
  const Box box{10.8, 10.2, 9.6};
  for (int i = 0; i < 200; ++i) {
    const double kk = k(rng);
    const auto s = balance_cutoff(1.0, 0.12, box, kk);
    CHECK(std::pow(s.rcoulomb, 3) == doctest::Approx(kk).epsilon(1e-12));
    CHECK(s.pp_cost_ratio == kk);
    CHECK(s.actual_spacing <= s.spacing + 1e-12);
    CHECK(s.pme_cost_ratio <= 1.0);
    CHECK(s.pme_cost_ratio == doctest::Approx(static_cast<double>(s.grid.points()) / s.grid0.points()));
  }
}

TEST_CASE("grids shrink monotonically as k grows") {
  const Box box{31.2, 31.2, 31.2};
  Grid3 prev = balance_cutoff(1.0, 0.135, box, 1.0).grid;
  for (double k = 1.05; k <= 6.0; k += 0.05) {
    const auto g = balance_cutoff(1.0, 0.135, box, k).grid;
    CHECK(g.nx <= prev.nx);
    prev = g;
  }
}

TEST_CASE("published cutoff / cost-ratio pairs obey the cube law") {
  const auto table = testing::oracle("tables_expected.json")["gpu_balance"]["rows"];
  for (const auto& r : table) {
    const double rc = r["cutoff_nm"], printed = r["pp_cost_ratio"];
    CAPTURE(rc);
    const auto s = balance_cutoff(1.0, 0.135, {31.2, 31.2, 31.2}, std::pow(rc, 3));
    CHECK(std::fabs(s.pp_cost_ratio / printed - 1.0) < 0.03);
    const auto back = balance_cutoff(1.0, 0.135, {31.2, 31.2, 31.2}, printed);
    CHECK(std::fabs(back.rcoulomb / rc - 1.0) < 0.03);
  }
}

TEST_CASE("240 cubed grid goes to 144 cubed at a 1.607 nm cutoff") {
  const auto s = balance_cutoff(1.0, 0.135, {31.2, 31.2, 31.2}, std::pow(1.607, 3));
  CHECK(s.grid0 == Grid3{240, 240, 240});
  CHECK(s.grid == Grid3{144, 144, 144});
  CHECK(round_display(s.pme_cost_ratio, 2) == 0.22);
}

TEST_CASE("starting from the printed 0.130 nm spacing lands one FFT size coarser") {
  const auto s = balance_cutoff(1.0, 0.130, {31.2, 31.2, 31.2}, std::pow(1.607, 3));
  CHECK(s.grid0 == Grid3{240, 240, 240});
  CHECK(s.grid == Grid3{150, 150, 150});
}

TEST_CASE("balance_cutoff argument checks") {
  CHECK_THROWS_AS(balance_cutoff(1.0, 0.12, {1, 1, 1}, 0.9), InvalidArgument);
  CHECK_THROWS_AS(balance_cutoff(0.0, 0.12, {1, 1, 1}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(balance_cutoff(1.0, 0.12, {1, 0, 1}, 1.0), InvalidArgument);
}

namespace {

SyntheticNodeProfile gpu_profile(std::uint32_t gpus) {
  SyntheticNodeProfile p;
  p.node = testing::node_2x10(gpus);
  return p;
}

LaunchConfig gpu_config(std::uint32_t ranks, std::uint32_t threads, std::uint32_t gpus, std::uint32_t nstlist) {
  LaunchConfig c;
  c.n_rank = ranks;
  c.n_th = threads;
  c.use_ht = ranks * threads > 20;
  c.dlb = Dlb::on;
  c.gpu_id = gpu_id_string(gpus, ranks);
  c.nstlist = nstlist;
  return c;
}

}  // namespace

TEST_CASE("synthetic nstlist scan has an interior optimum") {
  const auto p = gpu_profile(2);
  const auto w = testing::mem_workload();
  std::uint32_t best = 0;
  double best_p = 0;
  for (std::uint32_t n = 5; n <= 100; n += 5) {
    const double perf = predict_performance(p, gpu_config(8, 5, 2, n), w);
    if (perf > best_p) {
      best_p = perf;
      best = n;
    }
  }
  CHECK(best >= 20);
  CHECK(best <= 70);
}

TEST_CASE("offloading shifts work until the GPU and CPU balance") {
  const auto p = gpu_profile(2);
  const auto run = simulate(p, gpu_config(2, 10, 2, 0), testing::rib_workload());
  CHECK(run.tuned);
  CHECK(run.balance.k > 1.0);
  REQUIRE(run.gpu_ms);
  // With the cutoff tuned the two sides end up close to each other.
  CHECK(*run.gpu_ms / *run.cpu_ms > 0.7);
}

TEST_CASE("more GPUs never slow the best config down") {
  const auto w = testing::rib_workload();
  const double one = predict_performance(gpu_profile(1), gpu_config(4, 5, 1, 0), w);
  const double two = predict_performance(gpu_profile(2), gpu_config(4, 5, 2, 0), w);
  CHECK(two > one);
}

TEST_CASE("the synthetic log parses back to the simulated run") {
  const auto p = gpu_profile(2);
  const auto w = testing::mem_workload();
  const auto run = simulate(p, gpu_config(8, 5, 2, 0), w);
  const auto m = parse_log(synthetic_log(run, w));
  REQUIRE(m.performance);
  CHECK(*m.performance == doctest::Approx(run.performance).epsilon(1e-3));
  REQUIRE(m.gpu_cpu);
  CHECK(m.gpu_cpu->gpu_ms == doctest::Approx(*run.gpu_ms).epsilon(1e-3));
  if (run.tuned) {
    REQUIRE(m.load_balance);
    CHECK(m.load_balance->final.grid == run.balance.grid);
  }
}

TEST_CASE("too many PME ranks produce the overprovisioning note") {
  SyntheticNodeProfile p;
  p.node = testing::node_2x10(0);
  LaunchConfig c;
  c.n_rank = 20;
  c.n_pme = 10;
  c.n_th = 1;
  c.dlb = Dlb::on;
  const auto run = simulate(p, c, testing::mem_workload());
  REQUIRE(run.pme_load);
  CHECK(*run.pme_load < 1.0);
  const auto m = parse_log(synthetic_log(run, testing::mem_workload()));
  REQUIRE(!m.notes.empty());
  CHECK(m.notes[0].kind == AdvisoryKind::pme_overprovisioned);
}

TEST_CASE("invalid configs and profiles are rejected") {
  auto p = gpu_profile(1);
  LaunchConfig c;
  c.n_rank = 64;
  c.n_th = 1;
  CHECK_THROWS_AS(simulate(p, c, testing::mem_workload()), InvalidConfig);
  p.ht_yield = 0.5;
  CHECK_THROWS_AS(p.validate(), InvalidConfig);
}
