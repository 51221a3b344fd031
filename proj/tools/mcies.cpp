#include "mcies/cli.hpp"

int main(int argc, char** argv) { return mcies::cli::run(argc, argv); }
