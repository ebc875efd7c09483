#include "cli.hpp"

int main(int argc, char** argv) { return fisheyex::cli::run(argc, argv); }
