#include "pmsys/cli.hpp"

int main(int argc, char** argv) { return pmsys::cli::run(argc, argv); }
