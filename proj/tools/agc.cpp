#include <cstdio>
int main() { std::puts("agc"); return 0; }
