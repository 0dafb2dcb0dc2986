#include "hemocyte/cli.hpp"

int main(int argc, char** argv) { return hemocyte::run_command(argc, argv); }
