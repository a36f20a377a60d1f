#include "commands.hpp"

int main(int argc, char** argv) { return cpo::cli::run(argc, argv); }
