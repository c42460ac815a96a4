#include "penflow/cli.hpp"

int main(int argc, char** argv) { return penflow::cli::main(argc, argv); }
