#ifndef HTOPT_BENCH_HPP
#define HTOPT_BENCH_HPP

#include <iostream>
#include <string>
#include <vector>

namespace htopt::bench {

/// CLI entry point: `run` and `compare` subcommands. Returns the process
/// exit code: 0 when the stop rule is satisfied, 2 on budget exhaustion,
/// 1 on any error.
int run_command(const std::vector<std::string>& args,
                std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace htopt::bench

#endif
