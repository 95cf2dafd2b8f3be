#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "opcontour/parallel.hpp"
#include "opcontour/problem_file.hpp"

int main(int argc, char** argv) {
  CLI::App app{"operator-calculus batch driver: classify, solve and verify "
               "finite-dimensional model problems"};
  app.require_subcommand(1);

  std::string path;
  int threads = 0;
  unsigned long long seed = 0;
  bool allow_trace_warnings = false;
  app.add_option("--threads", threads, "worker threads (default: OPCONTOUR_THREADS or 1)");
  app.add_option("--seed", seed, "seed for all randomized estimates");
  app.add_flag("--allow-trace-warnings", allow_trace_warnings,
               "treat relaxed trace assumptions as ok instead of a warning");

  auto* classify = app.add_subcommand("classify", "run operator-class checks");
  classify->add_option("file", path, "problem description (JSON)")->required();
  auto* solve = app.add_subcommand("solve", "solve the described Cauchy problem");
  solve->add_option("file", path, "problem description (JSON)")->required();
  auto* verify = app.add_subcommand("verify", "run the invariant suite at the file's resolution");
  verify->add_option("file", path, "problem description (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  if (threads <= 0) {
    if (const char* env = std::getenv("OPCONTOUR_THREADS")) threads = std::atoi(env);
  }
  opcontour::set_thread_count(threads > 0 ? threads : 1);

  opcontour::RunOptions opts;
  opts.seed = seed;
  opts.allow_trace_warnings = allow_trace_warnings;

  try {
    const opcontour::ProblemFile file = opcontour::load_problem_file(path);
    opcontour::RunReport report;
    if (classify->parsed())
      report = opcontour::run_classify(file, opts);
    else if (solve->parsed())
      report = opcontour::run_solve(file, opts);
    else
      report = opcontour::run_verify(file, opts);
    std::cout << report.text();
    return report.exit_code();
  } catch (const opcontour::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const opcontour::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
