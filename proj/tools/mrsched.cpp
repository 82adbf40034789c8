#include "mrsched/cli.hpp"

int main(int argc, char** argv) { return mrsched::cli::run(argc, argv); }
