#include <iostream>

#include "gamefeat/cli.hpp"

int main(int argc, char** argv) {
  return gamefeat::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
