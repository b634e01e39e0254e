#include <hris/cli.hpp>

int main(int argc, char** argv) { return hris::run_cli(argc, argv); }
