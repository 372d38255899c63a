#include "cli.hpp"

int main(int argc, char** argv) { return ausm::cli::run(argc, argv); }
