#include "commands.hpp"

int main(int argc, char** argv) { return pepf::cli::run(argc, argv); }
