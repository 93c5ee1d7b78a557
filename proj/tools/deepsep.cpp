#include "deepsep/cli.hpp"

int main(int argc, char** argv) { return deepsep::run_cli(argc, argv); }
