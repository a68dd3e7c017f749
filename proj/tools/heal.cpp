// heal - operator CLI for the self-healing workspace engine (placeholder
// while the pipeline modules land; full subcommand surface follows).
#include <cstdio>

int main() {
    std::fprintf(stderr, "heal: not yet wired\n");
    return 64;
}
