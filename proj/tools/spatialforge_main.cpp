#include "spatialforge/cli.hpp"

int main(int argc, char** argv) { return spatialforge::run_cli(argc, argv); }
