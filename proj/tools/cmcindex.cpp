#include <cstdio>
int main() { std::puts("cmcindex: placeholder"); return 0; }
