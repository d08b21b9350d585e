#include "htopt/bench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <sstream>

#include "htopt/oracle.hpp"
#include "htopt/problem_file.hpp"
#include "htopt/trace_io.hpp"

namespace htopt::bench {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonFlags {
  std::string problem_path;
  std::string trace_path;
  double beta = 0, gamma = 0, alpha = 0;
  double lambda_h = 0, lambda_g = 0, grad_tol = 0;
  long max_iters = 0;
  std::uint64_t seed = 0;
  CLI::Option* beta_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* lambda_h_opt = nullptr;
  CLI::Option* lambda_g_opt = nullptr;
  CLI::Option* max_iters_opt = nullptr;
  CLI::Option* grad_tol_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  std::optional<double> beta_flag() const {
    return beta_opt->count() ? std::optional<double>(beta) : std::nullopt;
  }
  std::optional<double> gamma_flag() const {
    return gamma_opt->count() ? std::optional<double>(gamma) : std::nullopt;
  }
  std::optional<double> alpha_flag() const {
    return alpha_opt->count() ? std::optional<double>(alpha) : std::nullopt;
  }
  std::optional<double> lambda_h_flag() const {
    return lambda_h_opt->count() ? std::optional<double>(lambda_h) : std::nullopt;
  }
  std::optional<double> lambda_g_flag() const {
    return lambda_g_opt->count() ? std::optional<double>(lambda_g) : std::nullopt;
  }
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--problem", flags.problem_path, "problem JSON file")
      ->required();
  flags.beta_opt =
      cmd->add_option("--beta", flags.beta, "momentum gain in (0,1)");
  flags.gamma_opt = cmd->add_option(
      "--gamma", flags.gamma, "stepsize gain, below beta(2-beta)/(8+beta)");
  flags.alpha_opt =
      cmd->add_option("--alpha", flags.alpha, "inequality correction stepsize");
  flags.lambda_h_opt =
      cmd->add_option("--lambda-h", flags.lambda_h, "equality penalty weight");
  flags.lambda_g_opt =
      cmd->add_option("--lambda-g", flags.lambda_g, "inequality penalty weight");
  flags.max_iters_opt =
      cmd->add_option("--max-iters", flags.max_iters, "iteration budget");
  flags.grad_tol_opt = cmd->add_option("--grad-tol", flags.grad_tol,
                                       "gradient-norm stopping tolerance");
  flags.seed_opt =
      cmd->add_option("--seed", flags.seed, "seed for all pseudo-randomness");
  cmd->add_option("--trace", flags.trace_path, "trace CSV destination");
}

struct PreparedRun {
  LoadedProblem problem;
  loss::ReducedLoss rl;
  tuner::StopRule stop;
  Eigen::VectorXd theta0;
};

PreparedRun prepare(const CommonFlags& flags) {
  LoadedProblem problem = load_problem(flags.problem_path);
  const std::uint64_t seed =
      flags.seed_opt->count() ? flags.seed : problem.file.seed;
  loss::ReducedLoss rl = make_reduced_loss(problem, flags.lambda_h_flag(),
                                           flags.lambda_g_flag(), seed);
  tuner::StopRule stop = stop_rule_of(problem.file);
  if (flags.max_iters_opt->count()) stop.max_iters = flags.max_iters;
  if (flags.grad_tol_opt->count()) stop.grad_tol = flags.grad_tol;
  Eigen::VectorXd theta0 = initial_theta(problem);
  return PreparedRun{std::move(problem), std::move(rl), stop, std::move(theta0)};
}

tuner::Gains resolve_gains(const CommonFlags& flags, const ProblemFile& file) {
  const std::optional<double> beta =
      flags.beta_flag() ? flags.beta_flag() : file.beta;
  const std::optional<double> gamma =
      flags.gamma_flag() ? flags.gamma_flag() : file.gamma;
  const double alpha = flags.alpha_flag().value_or(file.alpha);
  if (!beta || !gamma) {
    throw tuner::GainError("the selected algorithm needs --beta and --gamma "
                           "(or a 'gains' block in the problem file)");
  }
  return tuner::validate_gains(*beta, *gamma, alpha);
}

tuner::RunResult dispatch(const std::string& algorithm, PreparedRun& run,
                          const CommonFlags& flags) {
  const auto& spec = *run.problem.spec;
  if (algorithm == "gd" || algorithm == "nesterov") {
    return tuner::run_baseline(run.rl, run.theta0, run.stop,
                               algorithm == "gd"
                                   ? tuner::BaselineMethod::GradientDescent
                                   : tuner::BaselineMethod::Nesterov);
  }
  const tuner::Gains gains = resolve_gains(flags, run.problem.file);
  if (algorithm == "ht1") {
    return tuner::run_alg1(run.rl, run.theta0, std::nullopt, gains, run.stop);
  }
  if (algorithm == "ht2") {
    if (!spec.has_inequality()) {
      throw LoadError("ht2 needs inequality constraints in the problem file");
    }
    return tuner::run_alg2(run.rl, run.rl.complete(run.theta0), std::nullopt,
                           gains, run.stop);
  }
  const auto region = region_of(run.problem.file);
  if (!region) {
    throw LoadError(algorithm + " needs a 'region' block in the problem file");
  }
  if (algorithm == "ht3") {
    return tuner::run_alg3(run.rl, run.theta0, std::nullopt, gains, run.stop,
                           *region);
  }
  if (algorithm == "ht4") {
    if (!spec.has_inequality()) {
      throw LoadError("ht4 needs inequality constraints in the problem file");
    }
    return tuner::run_alg4(run.rl, run.rl.complete(run.theta0), std::nullopt,
                           gains, run.stop, *region);
  }
  throw LoadError("unknown algorithm '" + algorithm + "' (expected ht1, ht2, "
                  "ht3, ht4, gd or nesterov)");
}

int exit_code_of(tuner::Termination termination) {
  switch (termination) {
    case tuner::Termination::GradTol:
    case tuner::Termination::LossTol:
      return 0;
    case tuner::Termination::MaxIters:
      return 2;
    case tuner::Termination::Aborted:
      return 1;
  }
  return 1;
}

const char* termination_name(tuner::Termination t) {
  switch (t) {
    case tuner::Termination::GradTol:  return "grad_tol";
    case tuner::Termination::LossTol:  return "loss_tol";
    case tuner::Termination::MaxIters: return "max_iters";
    case tuner::Termination::Aborted:  return "aborted";
  }
  return "unknown";
}

int do_run(const std::string& algorithm, const CommonFlags& flags,
           std::ostream& out) {
  PreparedRun run = prepare(flags);
  tuner::RunResult result = dispatch(algorithm, run, flags);
  if (!flags.trace_path.empty()) {
    emit_trace(result.trace, flags.trace_path);
  }
  double max_eq = 0.0, max_ineq = 0.0;
  for (const auto& row : result.trace.rows) {
    max_eq = std::max(max_eq, row.eq_residual_inf);
    max_ineq = std::max(max_ineq, row.ineq_violation_inf);
  }
  const auto& final_row = result.trace.rows.back();
  out << "algorithm=" << algorithm << " final_l=" << fmt(final_row.l)
      << " iterations=" << final_row.k << " max_eq_residual=" << fmt(max_eq)
      << " max_ineq_violation=" << fmt(max_ineq)
      << " termination=" << termination_name(result.termination)
      << " wall_seconds=" << fmt(result.trace.meta.wall_seconds) << "\n";
  return exit_code_of(result.termination);
}

int do_compare(const std::string& algorithms_csv, const CommonFlags& flags,
               std::ostream& out) {
  std::vector<std::string> methods;
  std::stringstream cut(algorithms_csv);
  std::string token;
  while (std::getline(cut, token, ',')) {
    if (!token.empty()) methods.push_back(token);
  }
  if (methods.empty()) {
    throw LoadError("--algorithms needs a comma-separated method list");
  }
  out << "method,iterations,converged,final_l,final_grad_norm,wall_seconds\n";
  for (const auto& method : methods) {
    // Fresh evaluator per method: warm-start caches are single-run state.
    PreparedRun run = prepare(flags);
    tuner::RunResult result = dispatch(method, run, flags);
    if (!flags.trace_path.empty()) {
      emit_trace(result.trace, flags.trace_path + "." + method + ".csv");
    }
    const auto& final_row = result.trace.rows.back();
    const bool converged = result.termination == tuner::Termination::GradTol ||
                           result.termination == tuner::Termination::LossTol;
    out << method << ',' << final_row.k << ',' << (converged ? "yes" : "no")
        << ',' << fmt(final_row.l) << ',' << fmt(final_row.grad_norm) << ','
        << fmt(result.trace.meta.wall_seconds) << "\n";
  }
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"high-order tuner benchmark front end"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string run_algorithm;
  CLI::App* run_cmd = app.add_subcommand("run", "solve one problem");
  run_cmd->add_option("--algorithm", run_algorithm,
                      "ht1|ht2|ht3|ht4|gd|nesterov")->required();
  add_common_flags(run_cmd, run_flags);

  CommonFlags cmp_flags;
  std::string cmp_algorithms;
  CLI::App* cmp_cmd = app.add_subcommand("compare",
                                         "run several methods, print a table");
  cmp_cmd->add_option("--algorithms", cmp_algorithms,
                      "comma-separated method list")->required();
  add_common_flags(cmp_cmd, cmp_flags);

  std::vector<const char*> argv;
  argv.push_back("htopt");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (run_cmd->parsed()) {
      return do_run(run_algorithm, run_flags, out);
    }
    return do_compare(cmp_algorithms, cmp_flags, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace htopt::bench
