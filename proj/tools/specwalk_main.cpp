#include "specwalk/cli.hpp"

int main(int argc, char** argv) { return specwalk::run_cli(argc, argv); }
