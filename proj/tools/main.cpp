#include "hace/cli.hpp"

int main(int argc, char** argv) { return hace::cli::run(argc, argv); }
