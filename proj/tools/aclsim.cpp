#include "cli.hpp"

int main(int argc, char** argv) { return aclsim::cli::run(argc, argv); }
