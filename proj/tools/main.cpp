#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  int code = 0;
  const auto req = netcontest::cli::parse_command_line(argc, argv, std::cout, std::cerr, code);
  if (!req) return code;
  return netcontest::cli::run(*req, std::cout, std::cerr);
}
