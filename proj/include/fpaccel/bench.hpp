#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fpaccel/types.hpp"

namespace fpaccel::bench {

enum class Method { Em, Aa, Raa, Aa1, Daarem, Squarem, Qnz };
enum class ProblemKind { Probit, Mvt, Icens };

const char* to_string(Method m);
const char* to_string(ProblemKind k);
Method method_from_string(const std::string& s);
ProblemKind problem_from_string(const std::string& s);
std::vector<Method> all_methods();

struct BenchSpec {
  ProblemKind problem = ProblemKind::Probit;
  std::vector<Method> methods = all_methods();
  int reps = 20;
  std::uint64_t seed = 0;
  SolverConfig solver;  // order 0 = per-problem auto
  int n = 0;            // observations; 0 = problem default (500 / 100 / 300)
  int p = 10;           // probit covariates
  int q = 5;            // mvt dimension
  double nu = 1.0;      // mvt degrees of freedom
  bool trace = false;   // write trace-<method>-<rep>.jsonl
  int jobs = 1;         // replication-level parallelism
  std::string out_dir;  // destination; empty = no files, records returned only
  VectorXd start;       // optional: overrides the per-problem default start

  int resolved_n() const;
};

struct BenchRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  Method method = Method::Em;
  bool converged = false;
  std::uint64_t n_map_evals = 0;
  std::uint64_t n_iterations = 0;
  std::uint64_t n_fallbacks = 0;
  double wall_seconds = 0.0;
  double final_negative_loglik = kNaN;  // NaN when the solve failed
};

// Runs the methods x replications grid. Replication r regenerates its
// dataset from (seed, stream = r); every method in a replication starts from
// the same default start. Records come back ordered by (rep, method); with
// out_dir set, records.csv and summary.json are written there (plus trace
// files when requested). Solver exceptions are captured per record, never
// propagated.
std::vector<BenchRecord> run_bench(const BenchSpec& spec);

void write_records_csv(std::ostream& os, const std::vector<BenchRecord>& records);
std::vector<BenchRecord> read_records_csv(std::istream& is);

// per-method aggregates plus a meta block echoing the spec; JSON text
std::string summarize(const BenchSpec& spec, const std::vector<BenchRecord>& records);

// one JSON object per produced iterate: {k, step_norm, merit, delta, lambda, outcome}
void write_trace_jsonl(std::ostream& os, const std::vector<TraceEntry>& trace);

}  // namespace fpaccel::bench
