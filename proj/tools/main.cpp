#include "seacache/cli.hpp"

int main(int argc, char** argv) { return seacache::cli::main(argc, argv); }
