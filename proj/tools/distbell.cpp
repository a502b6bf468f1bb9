#include "distbell/experiments.hpp"

int main(int argc, char** argv) { return distbell::cli_main(argc, argv); }
