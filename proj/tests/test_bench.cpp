#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpaccel/bench.hpp"
#include "oracles.hpp"

using namespace fpaccel;
using namespace fpaccel::bench;
namespace fs = std::filesystem;

namespace {

BenchSpec small_probit_spec() {
  BenchSpec spec;
  spec.problem = ProblemKind::Probit;
  spec.methods = {Method::Em, Method::Daarem, Method::Squarem};
  spec.reps = 3;
  spec.seed = 7;
  spec.n = 150;
  spec.p = 4;
  return spec;
}

bool same_but_timing(const BenchRecord& a, const BenchRecord& b) {
  const bool nll_equal =
      (std::isnan(a.final_negative_loglik) && std::isnan(b.final_negative_loglik)) ||
      a.final_negative_loglik == b.final_negative_loglik;
  return a.rep == b.rep && a.seed == b.seed && a.method == b.method &&
         a.converged == b.converged && a.n_map_evals == b.n_map_evals &&
         a.n_iterations == b.n_iterations && a.n_fallbacks == b.n_fallbacks && nll_equal;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("method and problem names round-trip") {
  for (Method m : all_methods()) CHECK(method_from_string(to_string(m)) == m);
  for (ProblemKind k : {ProblemKind::Probit, ProblemKind::Mvt, ProblemKind::Icens})
    CHECK(problem_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(method_from_string("nesterov"), std::invalid_argument);
  CHECK_THROWS_AS(problem_from_string("poisson"), std::invalid_argument);
}

TEST_CASE("grids are deterministic and ordered, timing aside") {
  const BenchSpec spec = small_probit_spec();
  const auto a = run_bench(spec);
  const auto b = run_bench(spec);
  REQUIRE(a.size() == 9);
  REQUIRE(b.size() == 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(same_but_timing(a[i], b[i]));
    CHECK(a[i].rep == static_cast<int>(i) / 3);
    CHECK(a[i].method == spec.methods[i % 3]);
    CHECK(a[i].wall_seconds > 0.0);
    CHECK(a[i].converged);
  }

  BenchSpec par = spec;
  par.jobs = 3;
  const auto c = run_bench(par);
  REQUIRE(c.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_but_timing(a[i], c[i]));
}

TEST_CASE("methods in a replication agree on the final objective") {
  BenchSpec spec;
  spec.problem = ProblemKind::Probit;
  spec.methods = {Method::Em, Method::Daarem};
  spec.reps = 2;
  spec.seed = 11;
  spec.n = 200;
  spec.p = 5;
  const auto recs = run_bench(spec);
  REQUIRE(recs.size() == 4);
  for (int rep = 0; rep < 2; ++rep) {
    const double a = recs[static_cast<std::size_t>(2 * rep)].final_negative_loglik;
    const double b = recs[static_cast<std::size_t>(2 * rep + 1)].final_negative_loglik;
    CHECK(std::isfinite(a));
    CHECK(std::abs(a - b) < 1e-4);
  }
}

TEST_CASE("records survive the CSV round-trip exactly") {
  auto recs = run_bench(small_probit_spec());
  BenchRecord odd;  // exercise the non-finite corners
  odd.rep = 99;
  odd.seed = 1234567890123456789ull;
  odd.method = Method::Qnz;
  odd.converged = false;
  odd.n_map_evals = 25000;
  odd.n_iterations = 12500;
  odd.n_fallbacks = 3;
  odd.wall_seconds = 0.12345678901234567;
  odd.final_negative_loglik = kNaN;
  recs.push_back(odd);
  odd.rep = 100;
  odd.final_negative_loglik = kInf;
  recs.push_back(odd);

  std::stringstream ss;
  write_records_csv(ss, recs);
  const auto back = read_records_csv(ss);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(same_but_timing(recs[i], back[i]));
    CHECK(recs[i].wall_seconds == back[i].wall_seconds);
  }

  std::stringstream bad("not,a,header\n1,2,3\n");
  CHECK_THROWS_AS(read_records_csv(bad), std::runtime_error);
}

TEST_CASE("summary statistics agree with an independent aggregation") {
  BenchSpec spec = small_probit_spec();
  spec.reps = 10;
  spec.methods = {Method::Em, Method::Daarem};
  const auto recs = run_bench(spec);
  const auto summary = nlohmann::json::parse(summarize(spec, recs));

  CHECK(summary["meta"]["problem"] == "probit");
  CHECK(summary["meta"]["reps"] == 10);
  for (Method m : spec.methods) {
    std::vector<double> evals, walls, nll;
    std::size_t conv = 0;
    for (const auto& r : recs) {
      if (r.method != m) continue;
      evals.push_back(static_cast<double>(r.n_map_evals));
      walls.push_back(r.wall_seconds);
      if (std::isfinite(r.final_negative_loglik)) nll.push_back(r.final_negative_loglik);
      if (r.converged) ++conv;
    }
    std::sort(evals.begin(), evals.end());
    std::sort(nll.begin(), nll.end());
    const double mean = oracle::compensated_sum(evals) / 10.0;
    double ss = 0.0;
    for (double e : evals) ss += (e - mean) * (e - mean);
    const double sd = std::sqrt(ss / 9.0);
    const double median = 0.5 * (evals[4] + evals[5]);

    const auto& entry = summary["methods"][to_string(m)];
    CHECK(entry["records"] == 10);
    CHECK(entry["converged"] == conv);
    CHECK(entry["map_evals"]["mean"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
    CHECK(entry["map_evals"]["median"].get<double>() == doctest::Approx(median).epsilon(1e-12));
    CHECK(entry["map_evals"]["sd"].get<double>() == doctest::Approx(sd).epsilon(1e-12));
    CHECK(entry["negative_loglik"]["min"].get<double>() == doctest::Approx(nll.front()));
    CHECK(entry["negative_loglik"]["max"].get<double>() == doctest::Approx(nll.back()));
    CHECK(entry["wall_seconds"]["mean"].get<double>() > 0.0);
  }
}

TEST_CASE("summary handles the textbook examples") {
  BenchSpec spec = small_probit_spec();
  spec.methods = {Method::Em, Method::Daarem};
  spec.reps = 3;
  std::vector<BenchRecord> recs;
  for (int i = 0; i < 3; ++i) {
    BenchRecord r;
    r.rep = i;
    r.method = Method::Em;
    r.converged = true;
    r.n_map_evals = static_cast<std::uint64_t>(10 * (i + 1));  // 10, 20, 30
    r.wall_seconds = 1.0;
    r.final_negative_loglik = 5.0 + 2.0 * i;  // 5, 7, 9
    recs.push_back(r);
  }
  BenchRecord single;
  single.rep = 0;
  single.method = Method::Daarem;
  single.converged = false;
  single.n_map_evals = 42;
  single.wall_seconds = 2.0;
  single.final_negative_loglik = 3.5;
  recs.push_back(single);

  const auto summary = nlohmann::json::parse(summarize(spec, recs));
  const auto& em = summary["methods"]["em"];
  CHECK(em["map_evals"]["mean"].get<double>() == 20.0);
  CHECK(em["map_evals"]["median"].get<double>() == 20.0);
  CHECK(em["map_evals"]["sd"].get<double>() == 10.0);
  CHECK(em["negative_loglik"]["mean_converged"].get<double>() == 7.0);
  CHECK(em["proportion_converged"].get<double>() == 1.0);

  const auto& da = summary["methods"]["daarem"];
  CHECK(da["map_evals"]["mean"].get<double>() == 42.0);
  CHECK(da["map_evals"]["median"].get<double>() == 42.0);
  CHECK(da["map_evals"]["sd"].get<double>() == 0.0);
  CHECK(da["converged"] == 0);
  // no converged run: the conditional mean is absent, the median is not
  CHECK(da["negative_loglik"]["mean_converged"].is_null());
  CHECK(da["negative_loglik"]["median"].get<double>() == 3.5);
}

TEST_CASE("output directory gets records, summary, and exact trace keys") {
  const fs::path dir = fresh_dir("fpaccel-bench-trace");
  BenchSpec spec;
  spec.problem = ProblemKind::Probit;
  spec.methods = {Method::Daarem, Method::Squarem};
  spec.reps = 1;
  spec.seed = 3;
  spec.n = 100;
  spec.p = 3;
  spec.trace = true;
  spec.out_dir = dir.string();
  const auto recs = run_bench(spec);
  REQUIRE(recs.size() == 2);
  CHECK(fs::exists(dir / "records.csv"));
  CHECK(fs::exists(dir / "summary.json"));

  {
    std::ifstream is(dir / "records.csv");
    const auto back = read_records_csv(is);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(same_but_timing(recs[i], back[i]));
  }
  {
    std::ifstream is(dir / "summary.json");
    const auto summary = nlohmann::json::parse(is);
    CHECK(summary["methods"].contains("daarem"));
    CHECK(summary["methods"].contains("squarem"));
  }

  const std::set<std::string> want = {"k", "step_norm", "merit", "delta", "lambda", "outcome"};
  const std::set<std::string> outcomes = {"em", "accepted", "fallback_monotonicity",
                                          "fallback_nonfinite", "fallback_infeasible"};
  for (const char* name : {"trace-daarem-0.jsonl", "trace-squarem-0.jsonl"}) {
    std::ifstream is(dir / name);
    REQUIRE(is.good());
    std::string line;
    std::uint64_t expect_k = 0;
    bool saw_lambda = false;
    while (std::getline(is, line)) {
      const auto obj = nlohmann::json::parse(line);
      std::set<std::string> keys;
      for (auto it = obj.begin(); it != obj.end(); ++it) keys.insert(it.key());
      CHECK(keys == want);
      CHECK(obj["k"].get<std::uint64_t>() == expect_k++);
      CHECK(outcomes.count(obj["outcome"].get<std::string>()) == 1);
      saw_lambda = saw_lambda || !obj["lambda"].is_null();
    }
    CHECK(expect_k > 1);
    if (std::string(name).find("daarem") != std::string::npos) CHECK(saw_lambda);
  }
  fs::remove_all(dir);
}

TEST_CASE("an interrupted grid resumes from the records already on disk") {
  const fs::path dir = fresh_dir("fpaccel-bench-resume");
  BenchSpec spec;
  spec.problem = ProblemKind::Probit;
  spec.methods = {Method::Em};
  spec.reps = 2;
  spec.seed = 19;
  spec.n = 120;
  spec.p = 3;
  spec.out_dir = dir.string();

  const auto first = run_bench(spec);
  REQUIRE(first.size() == 2);

  // keep only the first record, with a timing value no real solve would produce
  {
    std::ifstream is(dir / "records.csv");
    auto rows = read_records_csv(is);
    is.close();
    rows.resize(1);
    rows[0].wall_seconds = 123.456;
    std::ofstream os(dir / "records.csv", std::ios::trunc);
    write_records_csv(os, rows);
  }

  const auto second = run_bench(spec);
  REQUIRE(second.size() == 2);
  CHECK(second[0].wall_seconds == 123.456);  // reused, not re-solved
  CHECK(second[1].wall_seconds != 123.456);
  CHECK(same_but_timing(first[0], second[0]));
  CHECK(same_but_timing(first[1], second[1]));

  std::ifstream is(dir / "records.csv");
  const auto on_disk = read_records_csv(is);
  REQUIRE(on_disk.size() == 2);
  CHECK(on_disk[0].wall_seconds == 123.456);
  fs::remove_all(dir);
}

TEST_CASE("bad specifications are rejected before any work") {
  BenchSpec spec = small_probit_spec();
  spec.methods.clear();
  CHECK_THROWS_AS(run_bench(spec), std::invalid_argument);

  spec = small_probit_spec();
  spec.methods = {Method::Em, Method::Em};
  CHECK_THROWS_AS(run_bench(spec), std::invalid_argument);

  spec = small_probit_spec();
  spec.reps = 0;
  CHECK_THROWS_AS(run_bench(spec), std::invalid_argument);

  spec = small_probit_spec();
  spec.jobs = 0;
  CHECK_THROWS_AS(run_bench(spec), std::invalid_argument);

  spec = small_probit_spec();
  spec.start = VectorXd::Zero(2);  // problem dimension is 4
  CHECK_THROWS_AS(run_bench(spec), std::invalid_argument);
}

}  // TEST_SUITE
