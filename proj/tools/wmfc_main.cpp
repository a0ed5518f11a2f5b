#include "wmfc/cli.hpp"

int main(int argc, char** argv) { return wmfc::cli_main(argc, argv); }
