#include "eitmc/experiment.hpp"

int main(int argc, char** argv) { return eitmc::run_cli(argc, argv); }
