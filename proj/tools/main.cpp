#include "cli.hpp"

int main(int argc, char** argv) { return feedread::cli::main(argc, argv); }
