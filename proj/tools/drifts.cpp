#include "drifts/cli/commands.hpp"

int main(int argc, char** argv) { return drifts::cli::run_cli(argc, argv); }
