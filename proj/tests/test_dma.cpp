#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "aquas/dma.hpp"

using namespace aquas::dma;

TEST_CASE("burst latency follows init + streaming words") {
  LatencyModel m;  // load direction defaults
  CHECK(m.t_bur(64) == 15 + 8);
  CHECK(m.t_bur(8) == 15 + 1);
  m.direction = Direction::Store;
  CHECK(m.t_bur(64) == 5 + 8);
}

TEST_CASE("latency of explicit partitions") {
  LatencyModel m;
  Partition p;
  p.bursts[64] = 1;
  CHECK(latency(p, m) == 23);

  Partition empty;
  CHECK(latency(empty, m) == 0);

  Partition ss;
  ss.single_shots = 8;
  CHECK(latency(ss, m) == 24);
}

TEST_CASE("burst size set spans bus width to cacheline") {
  LatencyModel m;
  CHECK(burst_sizes(m) == std::vector<int64_t>{8, 16, 32, 64});
  m.bus_width_bytes = 4;
  m.cacheline_bytes = 32;
  CHECK(burst_sizes(m) == std::vector<int64_t>{4, 8, 16, 32});
}

TEST_CASE("optimize handles the degenerate and spot cases") {
  LatencyModel m;
  TransferSpec s;
  s.total_bytes = 0;
  auto p0 = optimize(s, m);
  CHECK(p0.total_cycles == 0);
  CHECK(p0.transfer_count() == 0);

  s.total_bytes = 64;
  auto p64 = optimize(s, m);
  CHECK(p64.total_cycles == brute_force(s, m).total_cycles);
  CHECK(p64.total_cycles == 23);  // one 64 B burst beats 8 single-shots

  s.total_bytes = 8;
  auto p8 = optimize(s, m);
  CHECK(p8.total_cycles == brute_force(s, m).total_cycles);
  CHECK(p8.total_cycles == 3);  // one single-shot beats any burst

  s.total_bytes = 1;  // sub-d_ss transfer still needs one access
  auto p1 = optimize(s, m);
  CHECK(p1.single_shots == 1);
  CHECK(p1.total_cycles == 3);

  m.direction = Direction::Store;
  s.total_bytes = 64;
  auto ps = optimize(s, m);
  CHECK(ps.total_cycles == 13);  // 5 + 8 beats 24
  CHECK(ps.bursts.at(64) == 1);
}

TEST_CASE("optimize equals brute force across sizes, directions, models") {
  std::vector<LatencyModel> models(3);
  models[1].t_ss = 2;
  models[2].bus_width_bytes = 4;
  models[2].cacheline_bytes = 32;
  for (auto dir : {Direction::Load, Direction::Store}) {
    for (auto m : models) {
      m.direction = dir;
      for (int64_t d = 0; d <= 512; d += 8) {
        TransferSpec s;
        s.total_bytes = d;
        auto fast = optimize(s, m);
        auto slow = brute_force(s, m);
        CHECK(fast.total_cycles == slow.total_cycles);
        CHECK(fast.covered_bytes(s) >= d);
      }
    }
  }
}

TEST_CASE("coverage constraint holds exactly as written") {
  LatencyModel m;
  std::mt19937 rng(3);
  for (int t = 0; t < 50; ++t) {
    TransferSpec s;
    s.total_bytes = int64_t(rng() % 4000);
    auto p = optimize(s, m);
    CHECK(p.covered_bytes(s) >= s.total_bytes);
    CHECK(p.single_shots >= 0);
  }
}

TEST_CASE("optimal cycles are monotone in transfer size") {
  LatencyModel m;
  int64_t prev = 0;
  for (int64_t d = 0; d <= 1024; d += 8) {
    TransferSpec s;
    s.total_bytes = d;
    auto p = optimize(s, m);
    CHECK(p.total_cycles >= prev);
    prev = p.total_cycles;
  }
}

TEST_CASE("latency is linear: doubling counts doubles cycles") {
  LatencyModel m;
  std::mt19937 rng(5);
  for (int t = 0; t < 30; ++t) {
    Partition p;
    p.single_shots = rng() % 5;
    for (int64_t b : burst_sizes(m))
      if (rng() % 2) p.bursts[b] = rng() % 4;
    Partition dbl = p;
    dbl.single_shots *= 2;
    for (auto& [b, n] : dbl.bursts) n *= 2;
    CHECK(latency(dbl, m) == 2 * latency(p, m));
  }
}

TEST_CASE("brute force rejects transfers over the cap") {
  LatencyModel m;
  TransferSpec s;
  s.total_bytes = 5000;
  CHECK_THROWS_AS(brute_force(s, m), std::invalid_argument);
}

TEST_CASE("model validation") {
  LatencyModel m;
  m.bus_width_bytes = 128;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = LatencyModel{};
  m.cacheline_bytes = 48;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
