// uarmpe command line: validate, shatter, simplify, solve, expand, gen-random, bench.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uarmpe/bench.hpp"
#include "uarmpe/errors.hpp"
#include "uarmpe/generate.hpp"
#include "uarmpe/io.hpp"
#include "uarmpe/pipeline.hpp"
#include "uarmpe/shatter.hpp"
#include "uarmpe/uar.hpp"

namespace {

using namespace uarmpe;

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kBudget = 3, kConsistency = 4 };

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BudgetExceeded*>(&e) || dynamic_cast<const FixpointBudgetExceeded*>(&e)) return kBudget;
  if (dynamic_cast<const ConsistencyFailure*>(&e) || dynamic_cast<const InternalError*>(&e)) return kConsistency;
  return kInput;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uniform assignment reduction for first-order MPE"};
  app.require_subcommand(1);

  std::string model_path, out_path, map_out, condition, engine = "ve", map_path, assignment_path;
  bool trace = false, no_uar = false, no_auto_condition = false;
  double enum_budget = 16777216.0, table_budget = 4194304.0;
  unsigned threads = 0;

  auto* validate = app.add_subcommand("validate", "Check a model file");
  validate->add_option("model", model_path, "Model file")->required();

  auto* shatter_cmd = app.add_subcommand("shatter", "Print the completely shattered model");
  shatter_cmd->add_option("model", model_path, "Model file")->required();
  shatter_cmd->add_option("-o,--out", out_path, "Output file");

  auto* simplify_cmd = app.add_subcommand("simplify", "Detect uniform assignments and print the reduced model");
  simplify_cmd->add_option("model", model_path, "Model file")->required();
  simplify_cmd->add_option("-o,--out", out_path, "Output file for the reduced model");
  simplify_cmd->add_flag("--trace", trace, "Print the detection stages");
  simplify_cmd->add_option("--map-out", map_out, "Write the reduction map as JSON");

  auto* solve_cmd = app.add_subcommand("solve", "Compute an MPE assignment");
  solve_cmd->add_option("model", model_path, "Model file")->required();
  solve_cmd->add_option("--engine", engine, "Ground engine")->check(CLI::IsMember({"brute", "ve"}));
  solve_cmd->add_flag("--no-uar", no_uar, "Solve the original model directly");
  solve_cmd->add_option("--condition", condition, "Condition on a unary boolean predicate");
  solve_cmd->add_flag("--no-auto-condition", no_auto_condition, "Never condition automatically");
  solve_cmd->add_option("--enum-budget", enum_budget, "Brute-force assignment budget");
  solve_cmd->add_option("--table-budget", table_budget, "Largest elimination table");
  solve_cmd->add_option("--threads", threads, "Brute-force worker threads (0: all cores)");
  solve_cmd->add_option("-o,--out", out_path, "Output file");

  auto* expand_cmd = app.add_subcommand("expand", "Expand a simplified assignment onto the original model");
  expand_cmd->add_option("model", model_path, "Original model file")->required();
  expand_cmd->add_option("--map", map_path, "Reduction map from simplify --map-out")->required();
  expand_cmd->add_option("--assignment", assignment_path, "Assignment JSON over the simplified model")->required();
  expand_cmd->add_option("-o,--out", out_path, "Output file");

  std::size_t n_parfactors = 3, domain = 5;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen-random", "Generate a random benchmark model");
  gen->add_option("--parfactors", n_parfactors, "Number of parfactors")->required()->check(CLI::PositiveNumber);
  gen->add_option("--domain", domain, "Domain size")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Random seed")->required();
  gen->add_option("-o,--out", out_path, "Output file");

  std::vector<std::string> bench_models;
  std::string sizes, engines = "ve", uar_modes = "on";
  std::size_t reps = 1;
  auto* bench = app.add_subcommand("bench", "Benchmark models and write CSV");
  bench->add_option("models", bench_models, "Model files")->required();
  bench->add_option("--sizes", sizes, "Comma-separated domain sizes");
  bench->add_option("--engines", engines, "Comma-separated engines");
  bench->add_option("--uar", uar_modes, "Comma-separated UAR modes: on, off");
  bench->add_option("--reps", reps, "Repetitions per configuration");
  bench->add_option("--out", out_path, "CSV output file");
  bench->add_option("--enum-budget", enum_budget, "Brute-force assignment budget");
  bench->add_option("--table-budget", table_budget, "Largest elimination table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) {
      const Model m = load_model(model_path);
      const ValidationReport report = validate_model(m);
      std::cout << (report.findings.empty() ? std::string("ok\n") : report.to_string() + "\n");
      return report.error_count() ? kInput : kOk;
    }
    if (*shatter_cmd) {
      const Model m = load_model(model_path);
      require_valid(m);
      const ShatterResult r = shatter(m);
      std::string text;
      for (const auto& c : r.renames.cells) text += "# " + c.renamed + " <- " + c.original + ": " + c.pattern + "\n";
      write_output(out_path, text + serialize_model(r.model));
      return kOk;
    }
    if (*simplify_cmd) {
      const Model m = load_model(model_path);
      require_valid(m);
      const ShatterResult sh = shatter(m);
      const SimplifyResult r = simplify(sh.model);
      if (trace) std::cout << format_trace(r.trace) << "\n";
      std::string text;
      for (const auto& c : sh.renames.cells) text += "# shattered " + c.renamed + " <- " + c.original + "\n";
      for (const auto& f : r.detection.formulas) text += "# anchored " + format_formula(sh.model, f) + "\n";
      write_output(out_path, text + serialize_model(r.model));
      if (!map_out.empty()) write_output(map_out, reduction_map_json(r.map) + "\n");
      return kOk;
    }
    if (*solve_cmd) {
      const Model m = load_model(model_path);
      SolveOptions so;
      so.engine = parse_engine(engine);
      so.use_uar = !no_uar;
      so.auto_condition = !no_auto_condition;
      if (!condition.empty()) so.condition = condition;
      so.engine_options.enumeration_budget = enum_budget;
      so.engine_options.max_table_entries = table_budget;
      so.engine_options.threads = threads;
      const SolveResult r = solve(m, so);
      write_output(out_path, solve_result_json(m, r) + "\n");
      return kOk;
    }
    if (*expand_cmd) {
      const Model m = load_model(model_path);
      require_valid(m);
      const ShatterResult sh = shatter(m);
      const ReductionMap rm = reduction_map_from_json(read_file(map_path));
      const SimplifyResult simp = simplify(sh.model);
      const Assignment reduced = assignment_from_json(simp.model, read_file(assignment_path));
      const Assignment v = sh.renames.to_original(expand_assignment(sh.model, rm, reduced));
      write_output(out_path, assignment_json(m, v) + "\n");
      return kOk;
    }
    if (*gen) {
      write_output(out_path, serialize_model(gen_random(n_parfactors, domain, seed)));
      return kOk;
    }
    if (*bench) {
      BenchOptions bo;
      bo.models = bench_models;
      bo.engines.clear();
      for (const auto& e : split_list(engines)) bo.engines.push_back(parse_engine(e));
      bo.uar_modes.clear();
      for (const auto& u : split_list(uar_modes)) {
        if (u != "on" && u != "off") throw ValidationError("--uar takes on and/or off");
        bo.uar_modes.push_back(u == "on");
      }
      for (const auto& s : split_list(sizes)) {
        try {
          const auto v = std::stoull(s);
          if (v == 0) throw std::invalid_argument(s);
          bo.sizes.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
          throw ValidationError("bad domain size '" + s + "'");
        }
      }
      bo.repetitions = reps;
      bo.engine_options.enumeration_budget = enum_budget;
      bo.engine_options.max_table_entries = table_budget;
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!out_path.empty() && out_path != "-") {
        file.open(out_path);
        if (!file) throw Error("cannot write '" + out_path + "'");
        out = &file;
      }
      *out << bench_csv_header() << "\n";
      run_bench(bo, [&](const BenchRow& row) { *out << bench_csv_row(row) << "\n" << std::flush; });
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kUsage;
}
