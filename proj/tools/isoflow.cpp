#include <cstdio>
int main() { std::puts("isoflow (placeholder)"); return 0; }
