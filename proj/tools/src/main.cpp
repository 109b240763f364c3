#include "commands.hpp"

int main(int argc, char** argv) { return optiks::cli::run(argc, argv); }
