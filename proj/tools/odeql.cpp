#include "odeql/cli.hpp"

int main(int argc, char** argv) { return odeql::run_cli(argc, argv); }
