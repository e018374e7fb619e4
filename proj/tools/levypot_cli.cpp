#include "levypot/cli_runner.hpp"

int main(int argc, char** argv) { return levypot::cli::main_cli(argc, argv); }
