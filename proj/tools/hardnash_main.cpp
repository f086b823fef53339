#include <string>
#include <vector>

#include "hardnash/cli_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hardnash::run_command(args);
}
