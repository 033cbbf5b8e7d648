#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "privprof/model_bank.hpp"
#include "privprof/session.hpp"

namespace privprof::bench {

struct Latency {
  std::size_t samples = 0;
  double mean_ms = 0;
  double p50_ms = 0;
  double p90_ms = 0;
  double max_ms = 0;
};

// Nearest-rank percentiles over the samples (milliseconds).
Latency summarize(std::vector<double> ms);

struct SweepPoint {
  unsigned ell = 0;
  std::uint32_t rounds = 0;
  Latency latency;
};

struct Report {
  std::size_t runs = 0;
  Variant variant = Variant::kBasic;
  Latency clear;
  Latency priv;
  double slowdown = 0;  // mean private / mean clear
  std::vector<SweepPoint> sweep;
};

struct Config {
  std::size_t runs = 20;
  Variant variant = Variant::kBasic;
  // Ring widths for the kernel sweep; empty skips it.
  std::vector<unsigned> sweep_ells;
  std::uint64_t seed = 1;
};

// Full profiles over TCP loopback: `runs` clear-mode and `runs` private-mode
// sessions against an in-process server. The sweep runs the nine pipelines
// on uniform ring inputs at each width, since real models need ell = 64.
Report run(const ModelBank& bank, const app::ClientInputs& inputs, const Config& cfg);

// Nine pipelines of the bank's dimensions on random ring inputs over TCP
// loopback; returns wall time in milliseconds and the round count.
std::pair<double, std::uint32_t> time_raw_pipelines(const std::vector<std::size_t>& dims, unsigned ell,
                                                    Variant variant, std::uint64_t seed);

std::string to_json(const Report& r);

}  // namespace privprof::bench
