#include "sizenorm/cli.hpp"

int main(int argc, char** argv) { return sizenorm::cli::run(argc, argv); }
