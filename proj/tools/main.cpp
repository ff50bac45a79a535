#include "weakform/cli.hpp"

int main(int argc, char** argv) { return weakform::run_cli(argc, argv); }
