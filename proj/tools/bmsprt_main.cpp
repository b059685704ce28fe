#include "bmsprt/cli.hpp"

int main(int argc, char** argv) { return bmsprt::cli::main(argc, argv); }
