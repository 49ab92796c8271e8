#include "gpmil/cli.hpp"

int main(int argc, char** argv) { return gpmil::run_cli(argc, argv); }
