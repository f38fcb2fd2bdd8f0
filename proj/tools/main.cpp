#include <iostream>

#include "qmrdx/cli.hpp"

int main(int argc, char** argv) {
  return qmrdx::dispatch(argc, argv, std::cin, std::cout, std::cerr);
}
