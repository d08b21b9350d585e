#include "htopt/problem_file.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <utility>

#include "htopt/completion.hpp"
#include "htopt/expr.hpp"

namespace htopt::bench {

using nlohmann::json;

namespace {

Eigen::VectorXd vector_from(const json& j, const std::string& field) {
  if (!j.is_array()) {
    throw LoadError("field '" + field + "' must be an array of numbers");
  }
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw LoadError("field '" + field + "' must contain numbers");
    }
    v(static_cast<int>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw LoadError("field '" + field + "' must be a nonempty array of rows");
  }
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw LoadError("field '" + field + "' rows must be arrays of equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace

ProblemFile parse_problem_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw LoadError("problem file must be a JSON object");
  }

  ProblemFile f;
  if (!doc.contains("n") || !doc["n"].is_number_integer()) {
    throw LoadError("problem file missing required integer field 'n'");
  }
  f.n = doc["n"].get<int>();

  if (!doc.contains("objective")) {
    throw LoadError("problem file missing required field 'objective'");
  }
  const json& obj = doc["objective"];
  if (obj.is_object() && obj.contains("quadratic")) {
    const json& q = obj["quadratic"];
    if (!q.contains("Q") || !q.contains("c")) {
      throw LoadError("quadratic objective requires fields 'Q' and 'c'");
    }
    QuadraticObjective quad;
    quad.Q = matrix_from(q["Q"], "objective.quadratic.Q");
    quad.c = vector_from(q["c"], "objective.quadratic.c");
    f.quadratic = std::move(quad);
  } else if (obj.is_object() && obj.contains("expression")) {
    if (!obj["expression"].is_string()) {
      throw LoadError("objective expression must be a string");
    }
    f.objective_expression = obj["expression"].get<std::string>();
  } else {
    throw LoadError("field 'objective' must hold either 'quadratic' or "
                    "'expression'");
  }

  if (doc.contains("equality")) {
    const json& eq = doc["equality"];
    if (eq.contains("A") || eq.contains("b")) {
      if (!eq.contains("A") || !eq.contains("b")) {
        throw LoadError("affine equality requires both 'A' and 'b'");
      }
      f.equality_A = matrix_from(eq["A"], "equality.A");
      f.equality_b = vector_from(eq["b"], "equality.b");
    } else if (eq.contains("expressions")) {
      for (const auto& e : eq["expressions"]) {
        if (!e.is_string()) {
          throw LoadError("equality expressions must be strings");
        }
        f.equality_expressions.push_back(e.get<std::string>());
      }
      if (f.equality_expressions.empty()) {
        throw LoadError("equality expression list is empty");
      }
    } else {
      throw LoadError("field 'equality' must hold 'A'/'b' or 'expressions'");
    }
  }

  if (doc.contains("inequality")) {
    const json& iq = doc["inequality"];
    if (!iq.contains("expressions")) {
      throw LoadError("field 'inequality' must hold 'expressions'");
    }
    for (const auto& e : iq["expressions"]) {
      if (!e.is_string()) {
        throw LoadError("inequality expressions must be strings");
      }
      f.inequality_expressions.push_back(e.get<std::string>());
    }
    if (f.inequality_expressions.empty()) {
      throw LoadError("inequality expression list is empty");
    }
  }

  if (doc.contains("partition")) {
    const json& part = doc["partition"];
    if (!part.contains("dependent") || !part["dependent"].is_array()) {
      throw LoadError("field 'partition' must hold a 'dependent' index array");
    }
    std::vector<int> dep;
    for (const auto& e : part["dependent"]) {
      if (!e.is_number_integer()) {
        throw LoadError("partition indices must be integers");
      }
      dep.push_back(e.get<int>());
    }
    f.dependent = std::move(dep);
  }

  if (doc.contains("region")) {
    const json& reg = doc["region"];
    if (!reg.contains("kind") || !reg["kind"].is_string()) {
      throw LoadError("field 'region' requires a string 'kind'");
    }
    RegionFile r;
    r.kind = reg["kind"].get<std::string>();
    if (r.kind == "box") {
      if (!reg.contains("lower") || !reg.contains("upper")) {
        throw LoadError("box region requires 'lower' and 'upper'");
      }
      r.lower = vector_from(reg["lower"], "region.lower");
      r.upper = vector_from(reg["upper"], "region.upper");
    } else if (r.kind == "ball") {
      if (!reg.contains("center") || !reg.contains("radius")) {
        throw LoadError("ball region requires 'center' and 'radius'");
      }
      r.center = vector_from(reg["center"], "region.center");
      r.radius = reg["radius"].get<double>();
    } else if (r.kind == "halfspaces") {
      if (!reg.contains("normals") || !reg.contains("offsets")) {
        throw LoadError("halfspace region requires 'normals' and 'offsets'");
      }
      r.normals = matrix_from(reg["normals"], "region.normals");
      r.offsets = vector_from(reg["offsets"], "region.offsets");
    } else {
      throw LoadError("region kind '" + r.kind + "' is not one of box, ball, "
                      "halfspaces");
    }
    f.region = std::move(r);
  }

  if (doc.contains("weights")) {
    const json& w = doc["weights"];
    if (w.contains("lambda_h")) f.lambda_h = w["lambda_h"].get<double>();
    if (w.contains("lambda_g")) f.lambda_g = w["lambda_g"].get<double>();
  }
  if (doc.contains("gains")) {
    const json& g = doc["gains"];
    if (g.contains("beta")) f.beta = g["beta"].get<double>();
    if (g.contains("gamma")) f.gamma = g["gamma"].get<double>();
    if (g.contains("alpha")) f.alpha = g["alpha"].get<double>();
  }
  if (doc.contains("stop")) {
    const json& s = doc["stop"];
    if (s.contains("max_iters")) f.max_iters = s["max_iters"].get<long>();
    if (s.contains("grad_tol")) f.grad_tol = s["grad_tol"].get<double>();
    if (s.contains("loss_tol")) f.loss_tol = s["loss_tol"].get<double>();
    if (s.contains("loss_ref")) f.loss_ref = s["loss_ref"].get<double>();
  }
  if (doc.contains("smoothness")) f.smoothness = doc["smoothness"].get<double>();
  if (doc.contains("strong_convexity")) {
    f.strong_convexity = doc["strong_convexity"].get<double>();
  }
  if (doc.contains("seed")) f.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("initial")) f.initial = vector_from(doc["initial"], "initial");
  return f;
}

std::string emit_problem(const ProblemFile& f) {
  json doc;
  doc["n"] = f.n;
  if (f.quadratic) {
    doc["objective"]["quadratic"]["Q"] = to_json(f.quadratic->Q);
    doc["objective"]["quadratic"]["c"] = to_json(f.quadratic->c);
  } else if (f.objective_expression) {
    doc["objective"]["expression"] = *f.objective_expression;
  }
  if (f.equality_A) {
    doc["equality"]["A"] = to_json(*f.equality_A);
    doc["equality"]["b"] = to_json(*f.equality_b);
  } else if (!f.equality_expressions.empty()) {
    doc["equality"]["expressions"] = f.equality_expressions;
  }
  if (!f.inequality_expressions.empty()) {
    doc["inequality"]["expressions"] = f.inequality_expressions;
  }
  if (f.dependent) {
    doc["partition"]["dependent"] = *f.dependent;
  }
  if (f.region) {
    json reg;
    reg["kind"] = f.region->kind;
    if (f.region->kind == "box") {
      reg["lower"] = to_json(f.region->lower);
      reg["upper"] = to_json(f.region->upper);
    } else if (f.region->kind == "ball") {
      reg["center"] = to_json(f.region->center);
      reg["radius"] = f.region->radius;
    } else {
      reg["normals"] = to_json(f.region->normals);
      reg["offsets"] = to_json(f.region->offsets);
    }
    doc["region"] = std::move(reg);
  }
  doc["weights"]["lambda_h"] = f.lambda_h;
  doc["weights"]["lambda_g"] = f.lambda_g;
  if (f.beta) doc["gains"]["beta"] = *f.beta;
  if (f.gamma) doc["gains"]["gamma"] = *f.gamma;
  doc["gains"]["alpha"] = f.alpha;
  doc["stop"]["max_iters"] = f.max_iters;
  doc["stop"]["grad_tol"] = f.grad_tol;
  if (f.loss_tol) {
    doc["stop"]["loss_tol"] = *f.loss_tol;
    doc["stop"]["loss_ref"] = f.loss_ref;
  }
  if (f.smoothness) doc["smoothness"] = *f.smoothness;
  if (f.strong_convexity) doc["strong_convexity"] = *f.strong_convexity;
  doc["seed"] = f.seed;
  if (f.initial) doc["initial"] = to_json(*f.initial);
  return doc.dump(2) + "\n";
}

namespace {

problem::ScalarField expression_objective(const std::string& text, int n) {
  expr::ExpressionTree tree = expr::parse(text);
  if (tree.max_variable_index() > n) {
    throw LoadError("objective references x" +
                    std::to_string(tree.max_variable_index()) +
                    " but n = " + std::to_string(n));
  }
  auto shared = std::make_shared<expr::ExpressionTree>(std::move(tree));
  problem::ScalarField f;
  f.value = [shared](const Eigen::VectorXd& x) { return shared->evaluate(x); };
  return f;
}

problem::VectorField expression_field(const std::vector<std::string>& texts,
                                      int n, const std::string& what) {
  auto trees = std::make_shared<std::vector<expr::ExpressionTree>>();
  trees->reserve(texts.size());
  for (const auto& t : texts) {
    expr::ExpressionTree tree = expr::parse(t);
    if (tree.max_variable_index() > n) {
      throw LoadError(what + " expression references x" +
                      std::to_string(tree.max_variable_index()) + " but n = " +
                      std::to_string(n));
    }
    trees->push_back(std::move(tree));
  }
  problem::VectorField f;
  f.output_dim = static_cast<int>(trees->size());
  f.value = [trees](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(trees->size());
    for (std::size_t i = 0; i < trees->size(); ++i) {
      out(static_cast<int>(i)) = (*trees)[i].evaluate(x);
    }
    return out;
  };
  return f;
}

std::shared_ptr<const problem::ProblemSpec> build_spec(const ProblemFile& f) {
  if (f.n <= 0) {
    throw LoadError("'n' must be positive");
  }
  auto spec = std::make_shared<problem::ProblemSpec>();
  spec->n = f.n;

  if (f.quadratic) {
    if (f.quadratic->Q.rows() != f.n || f.quadratic->Q.cols() != f.n ||
        f.quadratic->c.size() != f.n) {
      throw LoadError("quadratic objective dimensions disagree with n");
    }
    spec->objective = problem::make_quadratic(f.quadratic->Q, f.quadratic->c);
  } else {
    try {
      spec->objective = expression_objective(*f.objective_expression, f.n);
    } catch (const expr::ParseFailure& e) {
      throw LoadError(std::string("objective: ") + e.what());
    }
  }

  int m = 0;
  if (f.equality_A) {
    m = static_cast<int>(f.equality_A->rows());
    spec->affine_equality =
        problem::AffineEquality{*f.equality_A, *f.equality_b};
  } else if (!f.equality_expressions.empty()) {
    m = static_cast<int>(f.equality_expressions.size());
    try {
      spec->nonlinear_equality =
          expression_field(f.equality_expressions, f.n, "equality");
    } catch (const expr::ParseFailure& e) {
      throw LoadError(std::string("equality: ") + e.what());
    }
  } else {
    spec->affine_equality =
        problem::AffineEquality{Eigen::MatrixXd(0, f.n), Eigen::VectorXd(0)};
  }

  if (!f.inequality_expressions.empty()) {
    try {
      spec->inequality =
          expression_field(f.inequality_expressions, f.n, "inequality");
    } catch (const expr::ParseFailure& e) {
      throw LoadError(std::string("inequality: ") + e.what());
    }
  }

  if (f.dependent) {
    std::vector<int> dep0;
    dep0.reserve(f.dependent->size());
    for (int i : *f.dependent) {
      if (i < 1 || i > f.n) {
        throw LoadError("partition index " + std::to_string(i) +
                        " outside 1.." + std::to_string(f.n));
      }
      dep0.push_back(i - 1);
    }
    spec->partition = problem::VariablePartition::from_dependent(f.n, dep0);
  } else if (spec->affine_equality) {
    spec->partition = problem::default_partition(spec->affine_equality->A);
  } else {
    throw LoadError("a partition with " + std::to_string(m) +
                    " dependent indices is required for expression equality "
                    "constraints");
  }

  spec->smoothness = f.smoothness;
  spec->strong_convexity = f.strong_convexity;

  const auto diagnostics = problem::validate(*spec);
  if (!diagnostics.empty()) {
    std::ostringstream msg;
    msg << "problem validation failed:";
    for (const auto& d : diagnostics) {
      msg << "\n  [" << d.code << "] " << d.message;
    }
    throw LoadError(msg.str());
  }
  return spec;
}

}  // namespace

LoadedProblem load_problem_text(const std::string& json_text) {
  LoadedProblem p;
  p.file = parse_problem_text(json_text);
  p.spec = build_spec(p.file);
  return p;
}

LoadedProblem load_problem(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw LoadError("cannot open problem file '" + path + "'");
  }
  std::ostringstream content;
  content << file.rdbuf();
  return load_problem_text(content.str());
}

completion::CompletionMap make_completion(const LoadedProblem& p) {
  const auto& spec = *p.spec;
  if (spec.affine_equality) {
    return completion::build_affine_completion(spec.affine_equality->A,
                                               spec.affine_equality->b,
                                               spec.partition);
  }
  return completion::NewtonCompletion(*spec.nonlinear_equality, spec.partition);
}

loss::ReducedLoss make_reduced_loss(const LoadedProblem& p,
                                    std::optional<double> lambda_h,
                                    std::optional<double> lambda_g,
                                    std::uint64_t seed) {
  loss::PenaltyWeights weights;
  weights.lambda_h = lambda_h.value_or(p.file.lambda_h);
  weights.lambda_g = lambda_g.value_or(p.file.lambda_g);
  return loss::ReducedLoss(p.spec, make_completion(p), weights,
                           loss::GradientMode::ChainRule, seed);
}

std::optional<problem::ConvexRegionSpec> region_of(const ProblemFile& file) {
  if (!file.region) return std::nullopt;
  const RegionFile& r = *file.region;
  if (r.kind == "box") {
    return problem::ConvexRegionSpec::box(r.lower, r.upper);
  }
  if (r.kind == "ball") {
    return problem::ConvexRegionSpec::ball(r.center, r.radius);
  }
  return problem::ConvexRegionSpec::halfspaces(r.normals, r.offsets);
}

Eigen::VectorXd initial_theta(const LoadedProblem& p) {
  const int nf = p.spec->partition.nf();
  if (p.file.initial) {
    if (p.file.initial->size() != nf) {
      throw LoadError("'initial' must have n_f = " + std::to_string(nf) +
                      " entries");
    }
    return *p.file.initial;
  }
  return Eigen::VectorXd::Zero(nf);
}

tuner::StopRule stop_rule_of(const ProblemFile& file) {
  tuner::StopRule stop;
  stop.max_iters = file.max_iters;
  stop.grad_tol = file.grad_tol;
  stop.loss_tol = file.loss_tol;
  stop.loss_ref = file.loss_ref;
  return stop;
}

}  // namespace htopt::bench
