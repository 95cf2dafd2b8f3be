#include "opcontour/problem_file.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "opcontour/operator_classes.hpp"

namespace opcontour {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const char* where,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw SchemaError(std::string(where) + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) ok = true;
    if (!ok) throw SchemaError("unknown key '" + it.key() + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw SchemaError(std::string("missing key '") + key + "' in " + where);
  return *it;
}

Complex parse_complex(const json& v, const char* where) {
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Complex(v[0].get<double>(), v[1].get<double>());
  throw SchemaError(std::string("expected a number or [re, im] pair in ") + where);
}

ModelOperator parse_operator(const json& node) {
  require_keys(node, "operator", {"kind", "dim", "entries", "spectrum"});
  const std::string kind = require(node, "kind", "operator").get<std::string>();
  const int dim = require(node, "dim", "operator").get<int>();
  if (dim < 1) throw SchemaError("operator.dim must be >= 1");
  if (kind == "diagonal") {
    const json& spec = require(node, "spectrum", "operator");
    if (!spec.is_array() || static_cast<int>(spec.size()) != dim)
      throw SchemaError("operator.spectrum must list dim values");
    Vector d(dim);
    for (int i = 0; i < dim; ++i) d[i] = parse_complex(spec[i], "operator.spectrum");
    return ModelOperator::diagonal(d);
  }
  if (kind == "dense") {
    const json& entries = require(node, "entries", "operator");
    if (!entries.is_array() || static_cast<int>(entries.size()) != dim * dim)
      throw SchemaError("operator.entries must list dim*dim values, row major");
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        m(i, j) = parse_complex(entries[i * dim + j], "operator.entries");
    return ModelOperator::dense(m);
  }
  throw SchemaError("operator.kind must be 'dense' or 'diagonal'");
}

std::vector<TimePoly> parse_nonlinearity(const json& node, int dim) {
  require_keys(node, "nonlinearity", {"type", "coefficients"});
  const std::string type = require(node, "type", "nonlinearity").get<std::string>();
  if (type != "poly-in-t")
    throw SchemaError("nonlinearity.type must be the whitelisted tag 'poly-in-t'");
  const json& coeffs = require(node, "coefficients", "nonlinearity");
  if (!coeffs.is_array() || coeffs.empty())
    throw SchemaError("nonlinearity.coefficients must be a nonempty array");
  std::vector<TimePoly> out;
  for (const json& ck : coeffs) {
    if (!ck.is_array()) throw SchemaError("each coefficient must be an array of t-powers");
    TimePoly poly;
    for (const json& power : ck) {
      if (power.is_array() && !power.empty() && power[0].is_array()) {
        Vector v(power.size());
        for (std::size_t i = 0; i < power.size(); ++i)
          v[i] = parse_complex(power[i], "nonlinearity");
        if (v.size() != dim) throw SchemaError("vector coefficient has wrong dimension");
        poly.powers.push_back(v);
      } else {
        Vector v(1);
        v[0] = parse_complex(power, "nonlinearity");
        poly.powers.push_back(v);
      }
    }
    if (poly.powers.empty()) throw SchemaError("empty coefficient polynomial");
    out.push_back(std::move(poly));
  }
  return out;
}

}  // namespace

ProblemFile parse_problem_file(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  require_keys(doc, "document",
               {"operator", "problem", "contour", "nonlinearity", "classify", "output"});

  ProblemFile file;
  file.op = parse_operator(require(doc, "operator", "document"));

  const json& prob = require(doc, "problem", "document");
  require_keys(prob, "problem", {"kind", "sign", "T", "N", "p"});
  const std::string kind = require(prob, "kind", "problem").get<std::string>();
  if (kind == "classify")
    file.kind = ProblemFile::Kind::classify;
  else if (kind == "schrodinger")
    file.kind = ProblemFile::Kind::schrodinger;
  else if (kind == "wave")
    file.kind = ProblemFile::Kind::wave;
  else if (kind == "semilinear")
    file.kind = ProblemFile::Kind::semilinear;
  else
    throw SchemaError("problem.kind must be classify|schrodinger|wave|semilinear");
  if (prob.contains("sign")) {
    const std::string s = prob["sign"].get<std::string>();
    if (s == "+")
      file.sign = +1;
    else if (s == "-")
      file.sign = -1;
    else
      throw SchemaError("problem.sign must be '+' or '-'");
  }
  if (prob.contains("T")) file.T = prob["T"].get<double>();
  if (prob.contains("N")) file.N = prob["N"].get<int>();
  if (prob.contains("p")) file.p = prob["p"].get<double>();
  if (!(file.T > 0.0) || file.N < 8 || !(file.p > 1.0))
    throw SchemaError("problem requires T > 0, N >= 8, p > 1");

  if (doc.contains("contour")) {
    const json& node = doc["contour"];
    if (node.is_string() && node.get<std::string>() == "auto") {
      file.contour_auto = true;
    } else {
      require_keys(node, "contour", {"c", "R", "M"});
      const double c = require(node, "c", "contour").get<double>();
      const json& R = require(node, "R", "contour");
      const json& M = require(node, "M", "contour");
      if (R.is_string() || M.is_string()) {
        if (!(R.is_string() && R.get<std::string>() == "auto" && M.is_string() &&
              M.get<std::string>() == "auto"))
          throw SchemaError("contour.R and contour.M must both be numbers or both 'auto'");
        file.contour = ContourSpec::automatic(c);
        file.contour_auto = false;
      } else {
        file.contour = ContourSpec::fixed(c, R.get<double>(), M.get<int>());
        file.contour_auto = false;
      }
    }
  }

  if (doc.contains("classify")) {
    const json& node = doc["classify"];
    require_keys(node, "classify", {"checks", "c", "phi", "K_max"});
    const json& checks = require(node, "checks", "classify");
    if (!checks.is_array()) throw SchemaError("classify.checks must be an array");
    for (const json& c : checks) {
      const std::string name = c.get<std::string>();
      if (name != "sectorial" && name != "strip" && name != "strip-decay" &&
          name != "parabola" && name != "r-bound")
        throw SchemaError("unknown check '" + name + "'");
      file.checks.push_back(name);
    }
    if (node.contains("c")) file.contour.c = node["c"].get<double>();
    if (node.contains("phi")) file.phi = node["phi"].get<double>();
    if (node.contains("K_max")) file.K_max = node["K_max"].get<double>();
  }

  if (doc.contains("nonlinearity")) {
    file.nl_coeffs = parse_nonlinearity(doc["nonlinearity"], file.op.dim());
    file.has_nonlinearity = true;
  }

  if (doc.contains("output")) {
    const json& node = doc["output"];
    require_keys(node, "output", {"solution_csv", "report"});
    if (node.contains("solution_csv"))
      file.solution_csv = node["solution_csv"].get<std::string>();
    if (node.contains("report")) file.report_path = node["report"].get<std::string>();
  }

  if (file.kind == ProblemFile::Kind::semilinear && !file.has_nonlinearity)
    throw SchemaError("semilinear problems need a nonlinearity section");
  return file;
}

ProblemFile load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open problem file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem_file(ss.str());
}

void RunReport::add(const std::string& key, const std::string& value) {
  lines.emplace_back(key, value);
}

void RunReport::add(const std::string& key, double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  lines.emplace_back(key, buf);
}

std::string RunReport::text() const {
  std::string out;
  for (const auto& [k, v] : lines) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("cannot rename " + tmp + " to " + path);
}

namespace {

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::warning: return "warning";
    default: return "failed";
  }
}

// Reports deliberately carry no timing lines: for a fixed file, seed and
// build, the emitted bytes must not depend on the run.
void finish_report(RunReport& report, const ProblemFile& file) {
  report.add("status", status_name(report.status));
  if (!file.report_path.empty()) atomic_write(file.report_path, report.text());
}

void add_classification(RunReport& report, const std::string& prefix,
                        const ClassificationReport& rep) {
  report.add(prefix + "_K_hat", rep.K_hat);
  report.add(prefix + "_pass", rep.pass ? "true" : "false");
  report.add(prefix + "_samples", std::to_string(rep.sample_count));
  report.add(prefix + "_singular", rep.singular ? "true" : "false");
  if (rep.singular || !rep.pass) {
    report.add(prefix + "_worst_re", rep.worst_point.real());
    report.add(prefix + "_worst_im", rep.worst_point.imag());
  }
}

ContourSpec effective_contour(const ProblemFile& file) {
  if (file.contour_auto || file.contour.c == 0.0) return auto_contour(file.op);
  return file.contour;
}

GridFunction default_forcing(const ProblemFile& file) {
  const TimeGrid grid(file.T, file.N);
  if (file.has_nonlinearity) {
    TimePoly c0 = file.nl_coeffs[0];
    return GridFunction::sample(grid, file.op.dim(), [&](double t) {
      Vector v = c0.eval(t);
      if (v.size() == 1 && file.op.dim() > 1)
        return Vector(Vector::Constant(file.op.dim(), v[0]));
      return v;
    });
  }
  // Without a nonlinearity section the forcing defaults to the constant 1,
  // which carries a trace warning (nonzero value at t = 0).
  return GridFunction::sample(grid, file.op.dim(),
                              [&](double) { return Vector(Vector::Ones(file.op.dim())); });
}

}  // namespace

RunReport run_classify(const ProblemFile& file, const RunOptions& opts) {
  RunReport report;
  if (file.kind != ProblemFile::Kind::classify) {
    report.status = RunStatus::failed;
    report.add("error", "problem.kind is not classify");
    finish_report(report, file);
    return report;
  }
  const double c = file.contour.c > 0.0 ? file.contour.c : 1.0;
  std::vector<std::string> checks = file.checks;
  if (checks.empty()) checks = {"strip"};
  bool all_pass = true;
  for (const std::string& name : checks) {
    try {
      if (name == "sectorial") {
        auto rep = check_sectorial(file.op, default_sector_region(file.op, file.phi), file.K_max);
        add_classification(report, "sectorial", rep);
        all_pass = all_pass && rep.pass;
      } else if (name == "strip") {
        auto rep = check_strip(file.op, default_strip_region(file.op, c), file.K_max);
        add_classification(report, "strip", rep);
        all_pass = all_pass && rep.pass;
      } else if (name == "strip-decay") {
        auto rep = check_strip_decay(file.op, default_strip_region(file.op, c));
        add_classification(report, "strip_decay", rep);
        report.add("strip_decay_exponent", rep.decay_exponent);
        all_pass = all_pass && rep.pass;
      } else if (name == "parabola") {
        // The file's operator plays A; the parabola class is checked for A^2
        // with A itself as the square root.
        const ModelOperator squared = ModelOperator::dense(
            Matrix(file.op.matrix() * file.op.matrix()));
        auto rep = check_parabola(squared, default_parabola_region(squared, c), file.K_max,
                                  file.op);
        add_classification(report, "parabola", rep);
        all_pass = all_pass && rep.pass;
      } else if (name == "r-bound") {
        RademacherTrialSpec spec;
        spec.seed = opts.seed;
        auto rb = estimate_r_bound({file.op}, spec);
        report.add("r_bound_estimate", rb.estimate);
        report.add("r_bound_sup", rb.sup_norm);
        report.add("r_bound_exhaustive", rb.exhaustive ? "true" : "false");
      }
    } catch (const Error& e) {
      report.add(name + "_error", e.what());
      all_pass = false;
    }
  }
  report.status = all_pass ? RunStatus::ok : RunStatus::failed;
  finish_report(report, file);
  return report;
}

RunReport run_solve(const ProblemFile& file, const RunOptions& opts) {
  RunReport report;
  try {
    const ContourSpec contour = effective_contour(file);
    if (file.kind == ProblemFile::Kind::semilinear) {
      const TimeGrid grid(file.T, file.N);
      const PolynomialNonlinearity F = make_nonlinearity(grid, file.nl_coeffs);
      FixedPointConfig config;
      auto [bundle, trace] = fixed_point_solve(file.op, F, config, contour, file.p);
      for (std::size_t k = 0; k < trace.update_norms.size(); ++k)
        report.add("iter_" + std::to_string(k) + "_update", trace.update_norms[k]);
      for (std::size_t k = 0; k < trace.contraction_ratios.size(); ++k)
        report.add("iter_" + std::to_string(k) + "_ratio", trace.contraction_ratios[k]);
      report.add("converged", trace.converged ? "true" : "false");
      report.add("ball_exit", trace.status == IterationStatus::ball_exit ? "true" : "false");
      report.add("iterations", std::to_string(trace.iterations));
      report.add("residual", bundle.residual_norm);
      if (!file.solution_csv.empty()) {
        std::ostringstream csv;
        bundle.u.write_csv(csv);
        atomic_write(file.solution_csv, csv.str());
      }
      report.status = trace.converged && bundle.residual_ok ? RunStatus::ok : RunStatus::failed;
    } else if (file.kind == ProblemFile::Kind::schrodinger ||
               file.kind == ProblemFile::Kind::wave) {
      const GridFunction f = default_forcing(file);
      CauchyProblem problem{file.op, file.sign, f,
                            file.kind == ProblemFile::Kind::wave ? ProblemKind::wave
                                                                 : ProblemKind::schrodinger,
                            contour};
      const SolutionBundle bundle = file.kind == ProblemFile::Kind::wave
                                        ? solve_wave(problem, file.p)
                                        : solve_schrodinger(problem, file.p);
      report.add("residual", bundle.residual_norm);
      report.add("trace_u0", bundle.trace_u0);
      report.add("trace_du0", bundle.trace_du0);
      report.add("quadrature_estimate", bundle.quadrature_estimate);
      report.add("trace_warning", bundle.trace_warning ? "true" : "false");
      report.add("contour_c", contour.c);
      if (!file.solution_csv.empty()) {
        std::ostringstream csv;
        bundle.u.write_csv(csv);
        atomic_write(file.solution_csv, csv.str());
      }
      // A nonzero trace at t = 0 degrades the discrete residual near the
      // origin by design, so the residual gate only applies to clean data.
      if (bundle.trace_warning)
        report.status = opts.allow_trace_warnings ? RunStatus::ok : RunStatus::warning;
      else if (!bundle.residual_ok)
        report.status = RunStatus::failed;
    } else {
      report.status = RunStatus::failed;
      report.add("error", "solve requires a schrodinger, wave or semilinear problem");
    }
  } catch (const Error& e) {
    report.status = RunStatus::failed;
    report.add("error", e.what());
  }
  finish_report(report, file);
  return report;
}

RunReport run_verify(const ProblemFile& file, const RunOptions& opts) {
  RunReport report;
  bool all_pass = true;
  auto check = [&](const std::string& name, double measured, double threshold) {
    const bool ok = measured <= threshold;
    all_pass = all_pass && ok;
    report.add(name + "_measured", measured);
    report.add(name + "_threshold", threshold);
    report.add(name, ok ? "pass" : "fail");
  };

  try {
    const TimeGrid grid(file.T, file.N);
    const ModelOperator& A = file.op;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    {  // resolvent identity on random probe pairs
      double worst = 0.0;
      for (int t = 0; t < 20; ++t) {
        const Complex l(unif(rng) * 3.0, 3.0 + std::abs(unif(rng)) * 3.0);
        const Complex m(unif(rng) * 3.0, -(3.0 + std::abs(unif(rng)) * 3.0));
        Vector x(A.dim());
        for (int i = 0; i < A.dim(); ++i) x[i] = Complex(unif(rng), unif(rng));
        const Vector lhs = resolvent_apply(A, l, x) - resolvent_apply(A, m, x);
        const Vector rhs = (m - l) * resolvent_apply(A, l, resolvent_apply(A, m, x));
        worst = std::max(worst, (lhs - rhs).norm() / std::max(x.norm(), 1e-300));
      }
      check("resolvent_identity", worst, 1e-8);
    }

    {  // fractional power against the eigen oracle
      const ModelOperator shifted = ModelOperator::dense(
          Matrix(A.matrix() + 2.0 * (1.0 + A.scale()) *
                                  Matrix::Identity(A.dim(), A.dim())));
      const ModelOperator half = balakrishnan_power(shifted, 0.5);
      const ModelOperator oracle =
          matrix_function_oracle(shifted, [](Complex z) { return std::pow(z, -0.5); });
      check("balakrishnan_half_power",
            operator_norm_2(half.matrix() - oracle.matrix()), 1e-6);
    }

    {  // derivation-operator resolvent bound
      BrndReport rep = verify_brnd(Complex(1.0, 0.5), grid, 16, file.p, opts.seed);
      check("b_resolvent_bound", rep.max_ratio, 1.0 + 10.0 / grid.N());
    }

    {  // seminorm calibration on u(t) = t over a unit horizon
      const TimeGrid unit(1.0, grid.N());
      GridFunction u = GridFunction::sample(unit, 1, [](double t) {
        return Vector(Vector::Constant(1, Complex(t, 0.0)));
      });
      check("sobolev_calibration",
            std::abs(sobolev_seminorm(u, {0.5, 0, 2.0}).value - 1.0), 0.02);
    }

    {  // wave solve residual at the file's resolution
      const GridFunction f = GridFunction::sample(grid, A.dim(), [&](double t) {
        return Vector(Vector::Constant(A.dim(), Complex(t * t, 0.0)));
      });
      CauchyProblem problem{A, +1, f, ProblemKind::wave, effective_contour(file)};
      const SolutionBundle bundle = solve_wave(problem, file.p);
      check("wave_residual", bundle.residual_norm, 1e-3);
      check("wave_trace", bundle.trace_u0, 1e-10 * std::max(lp_norm(bundle.u, file.p), 1.0));
      check("inverse_composition",
            inverse_composition_check(A, f, effective_contour(file), file.p), 1e-3);
    }

    {  // R-bound shortcut
      RademacherTrialSpec spec;
      spec.seed = opts.seed;
      std::vector<ModelOperator> family = {A, ModelOperator::identity(A.dim())};
      const RBoundEstimate rb = estimate_r_bound(family, spec);
      check("r_bound_upper", rb.estimate - rb.sup_norm, 1e-8);
      check("r_bound_lower", 0.98 * rb.sup_norm - rb.estimate, 0.0);
    }
  } catch (const Error& e) {
    all_pass = false;
    report.add("error", e.what());
  }

  report.status = all_pass ? RunStatus::ok : RunStatus::failed;
  finish_report(report, file);
  return report;
}

}  // namespace opcontour
