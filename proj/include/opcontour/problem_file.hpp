#pragma once

#include <string>
#include <utility>
#include <vector>

#include "opcontour/semilinear.hpp"

namespace opcontour {

/// Parsed batch-run description. Parsing is strict: unknown keys anywhere in
/// the document are rejected with SchemaError before any computation.
struct ProblemFile {
  ModelOperator op = ModelOperator::identity(1);

  enum class Kind { classify, schrodinger, wave, semilinear } kind = Kind::classify;
  int sign = +1;
  double T = 1.0;
  int N = 512;
  double p = 2.0;

  ContourSpec contour = ContourSpec::automatic(0.0);
  bool contour_auto = true;

  // classify section
  std::vector<std::string> checks;  // sectorial | strip | strip-decay | parabola | r-bound
  double K_max = 100.0;
  double phi = 0.0;

  bool has_nonlinearity = false;
  std::vector<TimePoly> nl_coeffs;

  std::string solution_csv;
  std::string report_path;
};

ProblemFile parse_problem_file(const std::string& json_text);
ProblemFile load_problem_file(const std::string& path);

enum class RunStatus { ok, warning, failed };

struct RunReport {
  RunStatus status = RunStatus::ok;
  std::vector<std::pair<std::string, std::string>> lines;  // key=value, in order
  int exit_code() const { return status == RunStatus::ok ? 0 : status == RunStatus::warning ? 1 : 2; }

  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  std::string text() const;  // key=value lines, LF endings
};

struct RunOptions {
  unsigned long long seed = 0;
  bool allow_trace_warnings = false;
};

RunReport run_classify(const ProblemFile& file, const RunOptions& opts = {});
RunReport run_solve(const ProblemFile& file, const RunOptions& opts = {});
RunReport run_verify(const ProblemFile& file, const RunOptions& opts = {});

/// Write-then-rename so readers never observe partial output.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace opcontour
