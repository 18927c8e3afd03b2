#include "riskagg/experiment.hpp"

int main(int argc, char** argv) { return riskagg::experiment::cli_main(argc, argv); }
