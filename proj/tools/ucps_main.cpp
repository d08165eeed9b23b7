#include "ucps/runner.hpp"

int main(int argc, char** argv) { return ucps::run_cli(argc, argv); }
