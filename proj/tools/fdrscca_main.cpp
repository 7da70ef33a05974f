#include <iostream>
#include <locale>

#include "fdrscca/cli/commands.hpp"

int main(int argc, char** argv) {
  std::locale::global(std::locale::classic());
  return fdrscca::cli::run(argc, argv, std::cout, std::cerr);
}
