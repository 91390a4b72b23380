#include "fsn/cli.hpp"

int main(int argc, char** argv) { return fsn::run_cli(argc, argv); }
