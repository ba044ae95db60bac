#include <bncred/cli.hpp>

int main(int argc, char** argv) { return bncred::run_cli(argc, argv); }
