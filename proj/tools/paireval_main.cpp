#include "paireval/cli.hpp"

int main(int argc, char** argv) { return paireval::cli::run(argc, argv); }
