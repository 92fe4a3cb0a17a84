#include "ssi/cli/commands.hpp"

int main(int argc, char** argv) { return ssi::cli::run_cli(argc, argv); }
