#include "polgrad/cli.hpp"

int main(int argc, char** argv) { return polgrad::run_cli(argc, argv); }
