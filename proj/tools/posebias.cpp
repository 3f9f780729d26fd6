#include "posebias/cli.hpp"

int main(int argc, char** argv) { return posebias::cli::run(argc, argv); }
