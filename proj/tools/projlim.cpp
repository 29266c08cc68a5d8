#include "projlim/cli.hpp"

int main(int argc, char** argv) { return projlim::cli::run(argc, argv); }
