#include "aquas/dma.hpp"

#include <algorithm>
#include <numeric>

namespace aquas::dma {

namespace {

bool is_pow2(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

}  // namespace

void LatencyModel::validate() const {
  if (t_ss <= 0 || burst_init_load <= 0 || burst_init_store <= 0 ||
      per_word <= 0 || bus_width_bytes <= 0 || cacheline_bytes <= 0)
    throw std::invalid_argument("latency model parameters must be positive");
  if (bus_width_bytes > cacheline_bytes)
    throw std::invalid_argument("bus width must not exceed the cacheline");
  if (!is_pow2(bus_width_bytes) || !is_pow2(cacheline_bytes))
    throw std::invalid_argument("bus width and cacheline must be powers of two");
}

std::vector<int64_t> burst_sizes(const LatencyModel& m) {
  std::vector<int64_t> sizes;
  for (int64_t b = m.bus_width_bytes; b <= m.cacheline_bytes; b *= 2)
    sizes.push_back(b);
  return sizes;
}

int64_t Partition::covered_bytes(const TransferSpec& s) const {
  int64_t covered = single_shots * s.d_ss;
  for (const auto& [size, count] : bursts) covered += size * count;
  return covered;
}

int64_t Partition::transfer_count() const {
  int64_t n = single_shots;
  for (const auto& [size, count] : bursts) n += count;
  return n;
}

int64_t latency(const Partition& p, const LatencyModel& m) {
  m.validate();
  if (p.single_shots < 0) throw std::invalid_argument("negative transfer count");
  int64_t cycles = p.single_shots * m.t_ss;
  for (const auto& [size, count] : p.bursts) {
    if (count < 0) throw std::invalid_argument("negative transfer count");
    if (!is_pow2(size) || size < m.bus_width_bytes || size > m.cacheline_bytes)
      throw std::invalid_argument("burst size outside the legal set");
    cycles += count * m.t_bur(size);
  }
  return cycles;
}

namespace {

struct Option {
  int64_t size;
  int64_t cycles;
  bool is_burst;
};

// Options ordered large-burst-first with the single-shot last; the DP takes
// the first strict improvement, which realizes the documented tie-break.
std::vector<Option> transfer_options(const TransferSpec& s,
                                     const LatencyModel& m) {
  std::vector<Option> opts;
  auto sizes = burst_sizes(m);
  for (auto it = sizes.rbegin(); it != sizes.rend(); ++it)
    opts.push_back(Option{*it, m.t_bur(*it), true});
  opts.push_back(Option{s.d_ss, m.t_ss, false});
  return opts;
}

}  // namespace

Partition optimize(const TransferSpec& s, const LatencyModel& m) {
  m.validate();
  if (s.total_bytes < 0) throw std::invalid_argument("negative transfer size");
  if (s.d_ss <= 0) throw std::invalid_argument("single-shot size must be positive");

  Partition result;
  if (s.total_bytes == 0) return result;

  auto opts = transfer_options(s, m);
  int64_t gran = s.d_ss;
  for (const auto& o : opts) gran = std::gcd(gran, o.size);
  int64_t states = ceil_div(s.total_bytes, gran);

  constexpr int64_t kInf = INT64_MAX / 4;
  struct Cell {
    int64_t cycles = kInf;
    int64_t transfers = kInf;
    int choice = -1;
  };
  std::vector<Cell> dp(states + 1);
  dp[0] = Cell{0, 0, -1};
  for (int64_t i = 1; i <= states; ++i) {
    for (size_t c = 0; c < opts.size(); ++c) {
      int64_t prev = std::max<int64_t>(0, i - opts[c].size / gran);
      if (dp[prev].cycles >= kInf) continue;
      int64_t cycles = dp[prev].cycles + opts[c].cycles;
      int64_t transfers = dp[prev].transfers + 1;
      if (cycles < dp[i].cycles ||
          (cycles == dp[i].cycles && transfers < dp[i].transfers)) {
        dp[i] = Cell{cycles, transfers, static_cast<int>(c)};
      }
    }
  }

  for (int64_t i = states; i > 0;) {
    const Option& o = opts[dp[i].choice];
    if (o.is_burst)
      result.bursts[o.size] += 1;
    else
      result.single_shots += 1;
    i = std::max<int64_t>(0, i - o.size / gran);
  }
  result.total_cycles = dp[states].cycles;
  return result;
}

namespace {

struct BruteSearch {
  const TransferSpec& spec;
  const LatencyModel& model;
  std::vector<int64_t> sizes;  // descending bursts
  Partition best;
  int64_t best_cycles = INT64_MAX;

  void search(size_t i, int64_t remaining, int64_t cycles, Partition& cur) {
    if (cycles >= best_cycles) return;
    if (i == sizes.size()) {
      int64_t ss = remaining > 0 ? ceil_div(remaining, spec.d_ss) : 0;
      int64_t total = cycles + ss * model.t_ss;
      if (total < best_cycles) {
        best = cur;
        best.single_shots = ss;
        best.total_cycles = total;
        best_cycles = total;
      }
      return;
    }
    int64_t max_count = remaining > 0 ? ceil_div(remaining, sizes[i]) : 0;
    for (int64_t n = max_count; n >= 0; --n) {
      if (n > 0) cur.bursts[sizes[i]] = n;
      search(i + 1, remaining - n * sizes[i],
             cycles + n * model.t_bur(sizes[i]), cur);
      cur.bursts.erase(sizes[i]);
    }
  }
};

}  // namespace

Partition brute_force(const TransferSpec& s, const LatencyModel& m,
                      int64_t cap) {
  m.validate();
  if (s.total_bytes > cap)
    throw std::invalid_argument("transfer size exceeds the brute-force cap");
  if (s.d_ss <= 0) throw std::invalid_argument("single-shot size must be positive");

  Partition empty;
  if (s.total_bytes <= 0) return empty;

  BruteSearch search{s, m, burst_sizes(m), {}, INT64_MAX};
  std::reverse(search.sizes.begin(), search.sizes.end());
  Partition cur;
  search.search(0, s.total_bytes, 0, cur);
  return search.best;
}

}  // namespace aquas::dma
