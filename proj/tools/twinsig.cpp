#include "twinsig/cli.hpp"

int main(int argc, char** argv) { return twinsig::run_cli(argc, argv); }
