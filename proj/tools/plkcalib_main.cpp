#include "plkcalib/cli.hpp"

int main(int argc, char** argv) { return plkcalib::cli::main(argc, argv); }
