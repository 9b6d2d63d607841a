#include "experiments.hpp"

int main(int argc, char** argv) { return steinwave::exp::run_cli(argc, argv); }
