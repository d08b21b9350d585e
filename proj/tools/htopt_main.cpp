#include "htopt/bench.hpp"

int main(int argc, char** argv) {
  return htopt::bench::run_command(
      std::vector<std::string>(argv + 1, argv + argc));
}
