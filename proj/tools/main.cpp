#include "advqa/cli.hpp"

int main(int argc, char** argv) { return advqa::run_cli(argc, argv); }
