#include "cli.hpp"

int main(int argc, char** argv) { return wdht::cli::run(argc, argv); }
