#include "perimeter/cli.hpp"

int main(int argc, char** argv) { return perimeter::run_cli(argc, argv); }
