#include "cli.hpp"

int main(int argc, char** argv) { return axistar::cli::run(argc, argv); }
