#include "htopt/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace htopt::bench {

namespace {

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

std::string format_trace(const tuner::IterationTrace& trace) {
  std::string out;
  out.reserve(64 * (trace.rows.size() + 8));
  out += "# algorithm: " + trace.meta.algorithm + "\n";
  out += "# beta: ";
  append_number(out, trace.meta.beta);
  out += "\n# gamma: ";
  append_number(out, trace.meta.gamma);
  out += "\n# alpha: ";
  append_number(out, trace.meta.alpha);
  out += "\n# lambda_h: ";
  append_number(out, trace.meta.lambda_h);
  out += "\n# lambda_g: ";
  append_number(out, trace.meta.lambda_g);
  out += "\n# seed: " + std::to_string(trace.meta.seed) + "\n";
  out += "k,l,full_loss,eq_residual_inf,ineq_violation_inf,grad_norm,N_k\n";
  for (const auto& row : trace.rows) {
    out += std::to_string(row.k);
    out += ',';
    append_number(out, row.l);
    out += ',';
    append_number(out, row.full_loss);
    out += ',';
    append_number(out, row.eq_residual_inf);
    out += ',';
    append_number(out, row.ineq_violation_inf);
    out += ',';
    append_number(out, row.grad_norm);
    out += ',';
    append_number(out, row.normalizing);
    out += '\n';
  }
  return out;
}

void emit_trace(const tuner::IterationTrace& trace, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("emit_trace: cannot open '" + path + "' for writing");
  }
  const std::string body = format_trace(trace);
  file.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!file) {
    throw std::runtime_error("emit_trace: write to '" + path + "' failed");
  }
}

}  // namespace htopt::bench
