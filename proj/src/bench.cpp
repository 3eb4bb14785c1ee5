#include "fpaccel/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <system_error>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "fpaccel/baselines.hpp"
#include "fpaccel/engine.hpp"
#include "fpaccel/problems/interval_censor.hpp"
#include "fpaccel/problems/mvt.hpp"
#include "fpaccel/problems/probit.hpp"
#include "fpaccel/rng.hpp"

namespace fpaccel::bench {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* to_string(Method m) {
  switch (m) {
    case Method::Em: return "em";
    case Method::Aa: return "aa";
    case Method::Raa: return "raa";
    case Method::Aa1: return "aa1";
    case Method::Daarem: return "daarem";
    case Method::Squarem: return "squarem";
    case Method::Qnz: return "qnz";
  }
  return "unknown";
}

const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Probit: return "probit";
    case ProblemKind::Mvt: return "mvt";
    case ProblemKind::Icens: return "ic";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  for (Method m : all_methods())
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method: " + s);
}

ProblemKind problem_from_string(const std::string& s) {
  for (ProblemKind k : {ProblemKind::Probit, ProblemKind::Mvt, ProblemKind::Icens})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown problem: " + s);
}

std::vector<Method> all_methods() {
  return {Method::Em,     Method::Aa,      Method::Raa, Method::Aa1,
          Method::Daarem, Method::Squarem, Method::Qnz};
}

int BenchSpec::resolved_n() const {
  if (n > 0) return n;
  switch (problem) {
    case ProblemKind::Probit: return 500;
    case ProblemKind::Mvt: return 100;
    case ProblemKind::Icens: return 300;
  }
  return 0;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("records: bad numeric field '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("records: bad integer field '" + s + "'");
  return v;
}

constexpr const char* kCsvHeader =
    "rep,seed,method,converged,n_map_evals,n_iterations,n_fallbacks,wall_seconds,"
    "final_negative_loglik";

void write_record_row(std::ostream& os, const BenchRecord& r) {
  os << r.rep << ',' << r.seed << ',' << to_string(r.method) << ',' << (r.converged ? 1 : 0)
     << ',' << r.n_map_evals << ',' << r.n_iterations << ',' << r.n_fallbacks << ','
     << fmt(r.wall_seconds) << ',' << fmt(r.final_negative_loglik) << '\n';
}

// dataset storage + problem wiring for one replication
struct Instance {
  std::shared_ptr<void> data;
  FixedPointProblem prob;
  VectorXd x0;
};

Instance make_instance(const BenchSpec& spec, int rep) {
  Instance inst;
  switch (spec.problem) {
    case ProblemKind::Probit: {
      auto d = std::make_shared<probit::Data>(
          probit::generate(spec.resolved_n(), spec.p, spec.seed, static_cast<std::uint64_t>(rep)));
      inst.prob = probit::make_problem(*d);
      inst.x0 = probit::default_start(*d);
      inst.data = std::move(d);
      break;
    }
    case ProblemKind::Mvt: {
      auto d = std::make_shared<mvt::Data>(mvt::generate(
          spec.resolved_n(), spec.q, spec.nu, spec.seed, static_cast<std::uint64_t>(rep)));
      inst.prob = mvt::make_problem(*d, /*parameter_expanded=*/false);
      inst.x0 = mvt::default_start(*d);
      inst.data = std::move(d);
      break;
    }
    case ProblemKind::Icens: {
      auto d = std::make_shared<icens::Data>(
          icens::generate(spec.resolved_n(), spec.seed, static_cast<std::uint64_t>(rep)));
      inst.prob = icens::make_problem(*d);
      inst.x0 = icens::default_start(*d);
      inst.data = std::move(d);
      break;
    }
  }
  if (spec.start.size() > 0) {
    if (spec.start.size() != inst.prob.dim)
      throw std::invalid_argument("start override has dimension " +
                                  std::to_string(spec.start.size()) + ", problem needs " +
                                  std::to_string(inst.prob.dim));
    inst.x0 = spec.start;
  }
  return inst;
}

SolveReport dispatch(Method m, const FixedPointProblem& prob, const VectorXd& x0,
                     const SolverConfig& cfg) {
  switch (m) {
    case Method::Em: return solve_em(prob, x0, cfg);
    case Method::Aa: return solve_aa(prob, x0, cfg);
    case Method::Raa: return solve_raa(prob, x0, cfg);
    case Method::Aa1: return solve_aa1(prob, x0, cfg);
    case Method::Daarem: return solve_daarem(prob, x0, cfg);
    case Method::Squarem: return solve_squarem(prob, x0, cfg);
    case Method::Qnz: return solve_qnz(prob, x0, cfg);
  }
  throw std::logic_error("unreachable method dispatch");
}

void validate(const BenchSpec& spec) {
  if (spec.reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (spec.methods.empty()) throw std::invalid_argument("method list is empty");
  for (std::size_t i = 0; i < spec.methods.size(); ++i)
    for (std::size_t j = i + 1; j < spec.methods.size(); ++j)
      if (spec.methods[i] == spec.methods[j])
        throw std::invalid_argument(std::string("duplicate method: ") +
                                    to_string(spec.methods[i]));
  if (spec.jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (spec.resolved_n() < 1) throw std::invalid_argument("n must be positive");
  if (spec.problem == ProblemKind::Probit && spec.p < 1)
    throw std::invalid_argument("p must be positive");
  if (spec.problem == ProblemKind::Probit && spec.resolved_n() < spec.p)
    throw std::invalid_argument("probit needs n >= p");
  if (spec.problem == ProblemKind::Mvt && spec.q < 1)
    throw std::invalid_argument("q must be positive");
  if (spec.problem == ProblemKind::Mvt && !(spec.nu > 0))
    throw std::invalid_argument("nu must be positive");
}

struct Stats {
  double mean = kNaN;
  double median = kNaN;
  double sd = 0.0;
  std::size_t count = 0;
};

Stats stats_of(std::vector<double> v) {
  Stats s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  if (n >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

json to_json(const Stats& s) {
  return json{{"mean", s.mean}, {"median", s.median}, {"sd", s.sd}};
}

}  // namespace

void write_records_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) write_record_row(os, r);
}

std::vector<BenchRecord> read_records_csv(std::istream& is) {
  std::vector<BenchRecord> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::runtime_error("records: unexpected CSV header");
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 9) break;  // truncated trailing row from an interrupted run
    BenchRecord r;
    r.rep = static_cast<int>(parse_u64(fields[0]));
    r.seed = parse_u64(fields[1]);
    r.method = method_from_string(fields[2]);
    r.converged = parse_u64(fields[3]) != 0;
    r.n_map_evals = parse_u64(fields[4]);
    r.n_iterations = parse_u64(fields[5]);
    r.n_fallbacks = parse_u64(fields[6]);
    r.wall_seconds = parse_double(fields[7]);
    r.final_negative_loglik = parse_double(fields[8]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string summarize(const BenchSpec& spec, const std::vector<BenchRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  ordered_json meta;
  meta["problem"] = to_string(spec.problem);
  {
    std::vector<std::string> names;
    for (Method m : spec.methods) names.emplace_back(to_string(m));
    meta["methods"] = names;
  }
  meta["reps"] = spec.reps;
  meta["seed"] = spec.seed;
  meta["n"] = spec.resolved_n();
  if (spec.problem == ProblemKind::Probit) meta["p"] = spec.p;
  if (spec.problem == ProblemKind::Mvt) {
    meta["q"] = spec.q;
    meta["nu"] = spec.nu;
  }
  meta["order"] = spec.solver.order;
  meta["epsilon"] = spec.solver.epsilon;
  meta["epsilon_c"] = spec.solver.epsilon_c;
  meta["tol"] = spec.solver.tol;
  meta["max_map_evals"] = spec.solver.max_map_evals;
  meta["jobs"] = spec.jobs;
  meta["generator"] = rng::kGeneratorName;

  ordered_json methods_out;
  for (Method m : spec.methods) {
    std::vector<double> evals, iters, falls, walls, logliks, logliks_conv;
    std::size_t total = 0, conv = 0, failed = 0;
    for (const auto& r : records) {
      if (r.method != m) continue;
      ++total;
      evals.push_back(static_cast<double>(r.n_map_evals));
      iters.push_back(static_cast<double>(r.n_iterations));
      falls.push_back(static_cast<double>(r.n_fallbacks));
      walls.push_back(r.wall_seconds);
      if (r.converged) ++conv;
      if (std::isfinite(r.final_negative_loglik)) {
        logliks.push_back(r.final_negative_loglik);
        if (r.converged) logliks_conv.push_back(r.final_negative_loglik);
      } else {
        ++failed;
      }
    }
    if (total == 0) continue;
    ordered_json entry;
    entry["records"] = total;
    entry["converged"] = conv;
    entry["proportion_converged"] = static_cast<double>(conv) / static_cast<double>(total);
    entry["map_evals"] = to_json(stats_of(evals));
    entry["iterations"] = to_json(stats_of(iters));
    entry["fallbacks"] = to_json(stats_of(falls));
    entry["wall_seconds"] = to_json(stats_of(walls));
    // mean over converged runs only; median/min/max over every finite value,
    // so capped runs still contribute
    ordered_json nll;
    Stats conv_stats = stats_of(logliks_conv);
    Stats all_stats = stats_of(logliks);
    nll["mean_converged"] = conv_stats.mean;
    nll["median"] = all_stats.median;
    nll["min"] = logliks.empty() ? kNaN : *std::min_element(logliks.begin(), logliks.end());
    nll["max"] = logliks.empty() ? kNaN : *std::max_element(logliks.begin(), logliks.end());
    entry["negative_loglik"] = nll;
    entry["failed"] = failed;
    methods_out[to_string(m)] = entry;
  }

  ordered_json root;
  root["meta"] = meta;
  root["methods"] = methods_out;
  return root.dump(2) + "\n";
}

void write_trace_jsonl(std::ostream& os, const std::vector<TraceEntry>& trace) {
  auto num_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& e : trace) {
    ordered_json line;
    line["k"] = e.k;
    line["step_norm"] = num_or_null(e.step_norm);
    line["merit"] = num_or_null(e.merit);
    line["delta"] = num_or_null(e.delta);
    line["lambda"] = num_or_null(e.lambda);
    line["outcome"] = to_string(e.outcome);
    os << line.dump() << '\n';
  }
}

std::vector<BenchRecord> run_bench(const BenchSpec& spec) {
  validate(spec);
  make_instance(spec, 0);  // surface generator/start-override errors before any work

  const int n_methods = static_cast<int>(spec.methods.size());
  const int total = spec.reps * n_methods;
  std::vector<BenchRecord> records(static_cast<std::size_t>(total));
  std::vector<char> done(static_cast<std::size_t>(total), 0);

  const bool writing = !spec.out_dir.empty();
  fs::path dir;
  auto trace_path = [&](Method m, int rep) {
    return dir / ("trace-" + std::string(to_string(m)) + "-" + std::to_string(rep) + ".jsonl");
  };

  if (writing) {
    dir = spec.out_dir;
    fs::create_directories(dir);
    // resume: records already on disk for this grid are kept, not re-solved
    const fs::path rec_path = dir / "records.csv";
    if (fs::exists(rec_path)) {
      try {
        std::ifstream is(rec_path);
        for (const auto& r : read_records_csv(is)) {
          if (r.seed != spec.seed || r.rep < 0 || r.rep >= spec.reps) continue;
          auto it = std::find(spec.methods.begin(), spec.methods.end(), r.method);
          if (it == spec.methods.end()) continue;
          if (spec.trace && !fs::exists(trace_path(r.method, r.rep))) continue;
          const int idx = r.rep * n_methods + static_cast<int>(it - spec.methods.begin());
          records[static_cast<std::size_t>(idx)] = r;
          done[static_cast<std::size_t>(idx)] = 1;
        }
      } catch (const std::exception&) {
        std::fill(done.begin(), done.end(), 0);  // unreadable file: redo everything
      }
    }
  }

  std::ofstream rec_out;
  int next_flush = 0;
  auto flush_ready = [&]() {
    if (!writing) return;
    while (next_flush < total && done[static_cast<std::size_t>(next_flush)]) {
      write_record_row(rec_out, records[static_cast<std::size_t>(next_flush)]);
      rec_out.flush();
      ++next_flush;
    }
  };
  if (writing) {
    rec_out.open(dir / "records.csv", std::ios::trunc);
    if (!rec_out) throw std::runtime_error("cannot write " + (dir / "records.csv").string());
    rec_out << kCsvHeader << '\n';
    flush_ready();
  }

  auto run_rep = [&](int rep) {
    bool any = false;
    for (int mi = 0; mi < n_methods; ++mi)
      any = any || !done[static_cast<std::size_t>(rep * n_methods + mi)];
    if (!any) return;

    Instance inst;
    std::string inst_error;
    try {
      inst = make_instance(spec, rep);
    } catch (const std::exception& e) {
      inst_error = e.what();
    }

    for (int mi = 0; mi < n_methods; ++mi) {
      const int idx = rep * n_methods + mi;
      if (done[static_cast<std::size_t>(idx)]) continue;
      const Method m = spec.methods[mi];
      BenchRecord rec;
      rec.rep = rep;
      rec.seed = spec.seed;
      rec.method = m;
      std::vector<TraceEntry> trace;

      const auto t0 = std::chrono::steady_clock::now();
      if (inst_error.empty()) {
        try {
          SolverConfig cfg = spec.solver;
          cfg.record_trace = spec.trace;
          SolveReport rep_out = dispatch(m, inst.prob, inst.x0, cfg);
          rec.converged = rep_out.converged;
          rec.n_map_evals = rep_out.n_map_evals;
          rec.n_iterations = rep_out.n_iterations;
          rec.n_fallbacks = rep_out.n_fallbacks;
          if (rep_out.merit_final) rec.final_negative_loglik = -*rep_out.merit_final;
          trace = std::move(rep_out.trace);
        } catch (const std::exception&) {
          // solver blew up: the record stays non-converged with NaN merit
        }
      }
      const auto t1 = std::chrono::steady_clock::now();
      rec.wall_seconds = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);

      if (writing && spec.trace && !trace.empty()) {
        std::ofstream ts(trace_path(m, rep), std::ios::trunc);
        write_trace_jsonl(ts, trace);
      }

#ifdef _OPENMP
#pragma omp critical(fpaccel_bench_collect)
#endif
      {
        records[static_cast<std::size_t>(idx)] = rec;
        done[static_cast<std::size_t>(idx)] = 1;
        flush_ready();
      }
    }
  };

#ifdef _OPENMP
  if (spec.jobs > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(spec.jobs)
    for (int rep = 0; rep < spec.reps; ++rep) run_rep(rep);
  } else {
    for (int rep = 0; rep < spec.reps; ++rep) run_rep(rep);
  }
#else
  for (int rep = 0; rep < spec.reps; ++rep) run_rep(rep);
#endif

  if (writing) {
    rec_out.close();
    std::ofstream sum(dir / "summary.json", std::ios::trunc);
    sum << summarize(spec, records);
  }
  return records;
}

}  // namespace fpaccel::bench
