#include "lexipivot/cli/commands.hpp"

int main(int argc, char** argv) { return lexipivot::cli::run(argc, argv); }
