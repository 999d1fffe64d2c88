#pragma once

// Benchmark harness: solves model files over engines, UAR modes and domain
// sizes and reports one CSV row per run.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "uarmpe/pipeline.hpp"

namespace uarmpe {

struct BenchOptions {
  std::vector<std::string> models;  // file paths
  std::vector<Engine> engines{Engine::Ve};
  std::vector<bool> uar_modes{true};
  /// Domain sizes to rescale every model to; empty keeps declared sizes.
  std::vector<std::size_t> sizes;
  std::size_t repetitions = 1;
  EngineOptions engine_options;
};

struct BenchRow {
  std::string model;
  std::string engine;
  bool uar = true;
  std::size_t domain_size = 0;
  double detect_ms = 0.0;
  double reduce_ms = 0.0;
  double solve_ms = 0.0;
  double total_ms = 0.0;
  double log_weight = 0.0;
  std::string status;  // ok, parse_error, validation_error, budget_exceeded, ...
};

/// Runs every combination in input order; failures become status rows.
/// `on_row` sees each row as soon as it is finished.
std::vector<BenchRow> run_bench(const BenchOptions& opts, const std::function<void(const BenchRow&)>& on_row = {});

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);

}  // namespace uarmpe
