// Writes a synthetic steps.jsonl with 1080x2400 screenshots for manual runs.
#include <cstdlib>
#include <iostream>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_fixtures <dir> [count] [seed]\n";
    return 2;
  }
  const int count = argc > 2 ? std::atoi(argv[2]) : 10;
  const auto seed = static_cast<std::uint32_t>(argc > 3 ? std::atoi(argv[3]) : 7);
  std::cout << rwtest::write_steps(argv[1], count, seed).string() << "\n";
}
