#include <cstdio>

int main() {
  std::puts("goalgen: no subcommand given (cli wiring pending)");
  return 1;
}
