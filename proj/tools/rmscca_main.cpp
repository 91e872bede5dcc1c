#include "rmscca/cli.hpp"

int main(int argc, char** argv) { return rmscca::cli::run(argc, argv); }
