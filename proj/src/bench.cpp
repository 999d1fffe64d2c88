#include "uarmpe/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "uarmpe/errors.hpp"
#include "uarmpe/generate.hpp"
#include "uarmpe/io.hpp"

namespace uarmpe {

namespace {

std::string status_of(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
  if (dynamic_cast<const BudgetExceeded*>(&e)) return "budget_exceeded";
  if (dynamic_cast<const FixpointBudgetExceeded*>(&e)) return "budget_exceeded";
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const DomainMismatch*>(&e)) return "validation_error";
  if (dynamic_cast<const NonNormalForm*>(&e)) return "non_normal_form";
  if (dynamic_cast<const UnsupportedShape*>(&e)) return "unsupported";
  if (dynamic_cast<const ConsistencyFailure*>(&e)) return "consistency_failure";
  return "error";
}

std::size_t largest_domain(const Model& m) {
  std::size_t n = 0;
  for (const auto& d : m.domains) n = std::max(n, d.size);
  return n;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string num(double x, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& opts, const std::function<void(const BenchRow&)>& on_row) {
  std::vector<BenchRow> rows;
  auto emit = [&](BenchRow r) {
    if (on_row) on_row(r);
    rows.push_back(std::move(r));
  };
  for (const auto& path : opts.models) {
    Model base;
    try {
      base = load_model(path);
      require_valid(base);
    } catch (const std::exception& e) {
      BenchRow r;
      r.model = path;
      r.status = status_of(e);
      if (r.status == "error") r.status = "parse_error";  // unreadable file
      emit(std::move(r));
      continue;
    }
    std::vector<std::size_t> sizes = opts.sizes;
    if (sizes.empty()) sizes.push_back(0);
    for (std::size_t size : sizes)
      for (Engine engine : opts.engines)
        for (bool uar : opts.uar_modes)
          for (std::size_t rep = 0; rep < std::max<std::size_t>(1, opts.repetitions); ++rep) {
            BenchRow r;
            r.model = path;
            r.engine = engine_name(engine);
            r.uar = uar;
            try {
              const Model m = size ? with_domain_size(base, size) : base;
              r.domain_size = largest_domain(m);
              SolveOptions so;
              so.engine = engine;
              so.use_uar = uar;
              so.engine_options = opts.engine_options;
              const SolveResult s = solve(m, so);
              r.detect_ms = s.stats.detect_ms;
              r.reduce_ms = s.stats.reduce_ms;
              r.solve_ms = s.stats.solve_ms;
              r.total_ms = s.stats.total_ms;
              r.log_weight = s.log_weight;
              r.status = "ok";
            } catch (const std::exception& e) {
              if (!r.domain_size) r.domain_size = size ? size : largest_domain(base);
              r.status = status_of(e);
            }
            emit(std::move(r));
          }
  }
  return rows;
}

std::string bench_csv_header() {
  return "model,engine,uar,domain_size,detect_ms,reduce_ms,solve_ms,total_ms,log_weight,status";
}

std::string bench_csv_row(const BenchRow& r) {
  std::string out = csv_field(r.model) + "," + r.engine + "," + (r.uar ? "on" : "off") + "," +
                    std::to_string(r.domain_size);
  if (r.status == "ok" || r.status.empty()) {
    out += "," + num(r.detect_ms, "%.3f") + "," + num(r.reduce_ms, "%.3f") + "," + num(r.solve_ms, "%.3f") + "," +
           num(r.total_ms, "%.3f") + "," + (std::isfinite(r.log_weight) ? num(r.log_weight, "%.17g") : "-inf");
  } else {
    out += ",,,,,";
  }
  return out + "," + r.status;
}

}  // namespace uarmpe
