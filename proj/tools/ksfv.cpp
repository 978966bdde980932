#include "ksfv/cli.hpp"

int main(int argc, char** argv) { return ksfv::cli_main(argc, argv); }
