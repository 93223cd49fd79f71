#include "aitlm/cli.hpp"

int main(int argc, char** argv) { return aitlm::cli::run(argc, argv); }
