#include "msk/experiments.hpp"

int main(int argc, char** argv) { return msk::cli_main(argc, argv); }
