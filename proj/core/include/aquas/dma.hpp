#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Implementation selection for blockwise memory transfers: partition a bulk
// transfer of D bytes into burst transfers (power-of-two sizes between the
// bus width and the cacheline) and fixed-size single-shot accesses so that
// total latency is minimal. The solver is an exact dynamic program; a
// brute-force enumerator serves as its verification oracle.

namespace aquas::dma {

enum class Direction { Load, Store };

struct LatencyModel {
  int64_t t_ss = 3;                // cycles per single-shot transfer
  int64_t burst_init_load = 15;    // burst startup, load direction
  int64_t burst_init_store = 5;    // burst startup, store direction
  int64_t per_word = 1;            // cycles per bus word once streaming
  int64_t bus_width_bytes = 8;
  int64_t cacheline_bytes = 64;
  Direction direction = Direction::Load;

  int64_t burst_init() const {
    return direction == Direction::Load ? burst_init_load : burst_init_store;
  }
  // Latency of one burst of b bytes: startup plus streaming words.
  int64_t t_bur(int64_t b) const {
    return burst_init() + (b / bus_width_bytes) * per_word;
  }
  void validate() const;
};

// B = { 2^l bytes : bus_width <= 2^l <= cacheline }, ascending.
std::vector<int64_t> burst_sizes(const LatencyModel& m);

struct TransferSpec {
  int64_t total_bytes = 0;       // D
  int64_t d_ss = 8;              // bytes per single-shot transfer
};

struct Partition {
  std::map<int64_t, int64_t> bursts;  // burst size -> count
  int64_t single_shots = 0;
  int64_t total_cycles = 0;

  int64_t covered_bytes(const TransferSpec& s) const;
  int64_t transfer_count() const;
};

// Exact cycle count of a given partition.
int64_t latency(const Partition& p, const LatencyModel& m);

// Globally minimal partition covering s.total_bytes. Deterministic
// tie-break: fewer total transfers, then larger bursts first.
Partition optimize(const TransferSpec& s, const LatencyModel& m);

// Exhaustive enumeration (provably minimal); D capped to keep it tractable.
Partition brute_force(const TransferSpec& s, const LatencyModel& m,
                      int64_t cap = 4096);

}  // namespace aquas::dma
