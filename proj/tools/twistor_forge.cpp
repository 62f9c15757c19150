#include "twistor_forge/cli.hpp"

int main(int argc, char** argv) { return twistor_forge::cli::run(argc, argv); }
