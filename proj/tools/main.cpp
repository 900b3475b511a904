#include "commands.hpp"

int main(int argc, char** argv) { return vaoi::cli::run(argc, argv); }
