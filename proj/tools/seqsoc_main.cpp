#include "harness/commands.hpp"

int main(int argc, char** argv) { return seqsoc::harness::run_cli(argc, argv); }
