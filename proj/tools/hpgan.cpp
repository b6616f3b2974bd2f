#include "hpgan/cli.hpp"

int main(int argc, char** argv) { return hpgan::cli_dispatch(argc, argv); }
