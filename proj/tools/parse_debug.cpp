#include <fstream>
#include <iostream>
#include <sstream>

#include "asc/syntax.hpp"

int main(int argc, char** argv) {
  std::stringstream buf;
  if (argc > 1) {
    std::ifstream in(argv[1]);
    buf << in.rdbuf();
  } else {
    buf << std::cin.rdbuf();
  }
  auto tree = asc::parse(buf.str());
  std::cout << tree.to_sexp() << "\n";
  return 0;
}
