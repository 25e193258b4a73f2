#include "mcdc/cli.hpp"

int main(int argc, char** argv) { return mcdc::run_cli(argc, argv); }
