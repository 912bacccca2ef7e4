#include "cli.hpp"

int main(int argc, char** argv) { return sislab::cli::run(argc, argv); }
