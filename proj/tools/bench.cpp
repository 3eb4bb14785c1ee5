#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fpaccel/bench.hpp"
#include "fpaccel/problems/dataset_io.hpp"
#include "fpaccel/problems/interval_censor.hpp"
#include "fpaccel/problems/mvt.hpp"
#include "fpaccel/problems/probit.hpp"

namespace {

using fpaccel::bench::BenchSpec;

std::vector<fpaccel::bench::Method> parse_methods(const std::string& csv) {
  std::vector<fpaccel::bench::Method> out;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ','))
    if (!token.empty()) out.push_back(fpaccel::bench::method_from_string(token));
  return out;
}

Eigen::VectorXd read_vector_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read start vector file: " + path);
  std::vector<double> vals;
  double v;
  while (is >> v) vals.push_back(v);
  Eigen::VectorXd x(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) x(static_cast<Eigen::Index>(i)) = vals[i];
  return x;
}

void print_table(const BenchSpec& spec, const std::vector<fpaccel::bench::BenchRecord>& records) {
  const auto summary = nlohmann::json::parse(fpaccel::bench::summarize(spec, records));
  std::cout << "problem " << fpaccel::bench::to_string(spec.problem) << "  reps " << spec.reps
            << "  seed " << spec.seed << "\n";
  std::cout << std::left << std::setw(9) << "method" << std::right << std::setw(6) << "conv"
            << std::setw(12) << "evals med" << std::setw(12) << "evals mean" << std::setw(12)
            << "wall med" << std::setw(16) << "-loglik med" << "\n";
  for (auto m : spec.methods) {
    const auto& e = summary["methods"][fpaccel::bench::to_string(m)];
    const auto num = [&](const nlohmann::json& j) {
      return j.is_null() ? std::string("-") : (std::ostringstream{} << std::setprecision(6)
                                                                    << j.get<double>())
                                                  .str();
    };
    std::cout << std::left << std::setw(9) << fpaccel::bench::to_string(m) << std::right
              << std::setw(3) << e["converged"].get<std::size_t>() << "/" << std::left
              << std::setw(2) << e["records"].get<std::size_t>() << std::right << std::setw(12)
              << num(e["map_evals"]["median"]) << std::setw(12) << num(e["map_evals"]["mean"])
              << std::setw(12) << num(e["wall_seconds"]["median"]) << std::setw(16)
              << num(e["negative_loglik"]["median"]) << "\n";
  }
}

int do_dump(const BenchSpec& spec, std::uint64_t stream, const std::string& out) {
  std::ostringstream buf;
  switch (spec.problem) {
    case fpaccel::bench::ProblemKind::Probit:
      fpaccel::dataio::dump(buf, fpaccel::probit::generate(spec.resolved_n(), spec.p, spec.seed,
                                                           stream));
      break;
    case fpaccel::bench::ProblemKind::Mvt:
      fpaccel::dataio::dump(buf, fpaccel::mvt::generate(spec.resolved_n(), spec.q, spec.nu,
                                                        spec.seed, stream));
      break;
    case fpaccel::bench::ProblemKind::Icens:
      fpaccel::dataio::dump(buf, fpaccel::icens::generate(spec.resolved_n(), spec.seed, stream));
      break;
  }
  if (out.empty() || out == "-") {
    std::cout << buf.str();
  } else {
    std::ofstream os(out, std::ios::trunc);
    if (!os) throw std::invalid_argument("cannot write " + out);
    os << buf.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fixed-point acceleration benchmark harness"};
  app.require_subcommand(1);

  BenchSpec spec;
  std::string problem = "probit";
  std::string methods_csv = "em,aa,raa,aa1,daarem,squarem,qnz";
  std::string out_dir;
  std::string start_file;

  auto* run = app.add_subcommand("run", "run a method x replication grid");
  run->add_option("--problem", problem, "problem kind: probit, mvt, ic")->capture_default_str();
  run->add_option("--methods", methods_csv, "comma-separated methods")->capture_default_str();
  run->add_option("--reps", spec.reps, "replications")->capture_default_str();
  run->add_option("--seed", spec.seed, "base seed; replication r uses stream r")
      ->capture_default_str();
  run->add_option("--order", spec.solver.order, "history length m (0 = auto)")
      ->capture_default_str();
  run->add_option("--epsilon", spec.solver.epsilon, "per-step merit slack")
      ->capture_default_str();
  run->add_option("--epsilon-c", spec.solver.epsilon_c, "cycle-end merit slack")
      ->capture_default_str();
  run->add_option("--tol", spec.solver.tol, "stop when the step norm drops below this")
      ->capture_default_str();
  run->add_option("--max-fevals", spec.solver.max_map_evals, "map evaluation budget per solve")
      ->capture_default_str();
  run->add_option("--jobs", spec.jobs, "replications run in parallel")->capture_default_str();
  run->add_option("--out", out_dir, "output directory for records.csv / summary.json")
      ->required();
  run->add_option("--n", spec.n, "observations (0 = problem default)");
  run->add_option("--p", spec.p, "probit covariates")->capture_default_str();
  run->add_option("--q", spec.q, "mvt dimension")->capture_default_str();
  run->add_option("--nu", spec.nu, "mvt degrees of freedom")->capture_default_str();
  run->add_flag("--trace", spec.trace, "write trace-<method>-<rep>.jsonl per solve");
  run->add_option("--start", start_file, "file with a whitespace-separated start vector");

  std::uint64_t dump_stream = 0;
  std::string dump_out = "-";
  auto* dump = app.add_subcommand("dump", "write a generated dataset as text");
  dump->add_option("--problem", problem, "problem kind: probit, mvt, ic")->capture_default_str();
  dump->add_option("--seed", spec.seed, "base seed")->capture_default_str();
  dump->add_option("--stream", dump_stream, "replication stream index")->capture_default_str();
  dump->add_option("--n", spec.n, "observations (0 = problem default)");
  dump->add_option("--p", spec.p, "probit covariates")->capture_default_str();
  dump->add_option("--q", spec.q, "mvt dimension")->capture_default_str();
  dump->add_option("--nu", spec.nu, "mvt degrees of freedom")->capture_default_str();
  dump->add_option("--out", dump_out, "output file (- for stdout)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    spec.problem = fpaccel::bench::problem_from_string(problem);
    if (dump->parsed()) return do_dump(spec, dump_stream, dump_out);

    spec.methods = parse_methods(methods_csv);
    spec.out_dir = out_dir;
    if (!start_file.empty()) spec.start = read_vector_file(start_file);
    const auto records = fpaccel::bench::run_bench(spec);
    print_table(spec, records);
    std::cout << "wrote " << records.size() << " records to " << out_dir << "\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
