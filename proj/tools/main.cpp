#include "metaq/cli.hpp"

int main(int argc, char** argv) { return metaq::cli::run(argc, argv); }
