#include "gdrkit/cli.hpp"

int main(int argc, char** argv) { return gdrkit::cli::run(argc, argv); }
