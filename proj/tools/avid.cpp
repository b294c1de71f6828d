#include <cstdio>
int main() { std::puts("avid: subcommands not yet wired"); return 2; }
