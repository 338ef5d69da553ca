#include <cstdio>

int main() {
  std::puts("eitstore: CLI not wired yet");
  return 1;
}
