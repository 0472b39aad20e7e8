#include "popdyn/harness.hpp"

int main(int argc, char** argv) { return popdyn::cli_main(argc, argv); }
