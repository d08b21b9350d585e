#ifndef HTOPT_TRACE_IO_HPP
#define HTOPT_TRACE_IO_HPP

#include <string>

#include "htopt/tuner.hpp"

namespace htopt::bench {

/// Trace file body: '#'-prefixed metadata comment lines, the fixed header
/// `k,l,full_loss,eq_residual_inf,ineq_violation_inf,grad_norm,N_k`, one
/// CSV row per iterate, doubles at 17 significant digits. Identical runs
/// produce identical bytes, so volatile metadata (wall time) stays out.
std::string format_trace(const tuner::IterationTrace& trace);

void emit_trace(const tuner::IterationTrace& trace, const std::string& path);

}  // namespace htopt::bench

#endif
