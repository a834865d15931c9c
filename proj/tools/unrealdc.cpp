#include "unrealdc/cli.hpp"

int main(int argc, char** argv) { return unrealdc::cli::run_main(argc, argv); }
