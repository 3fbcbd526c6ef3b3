#include <iostream>

#include "acceptance_suite.hpp"

int main() {
  lagflow::acceptance::Suite suite;
  return suite.run_all(std::cout) ? 0 : 1;
}
