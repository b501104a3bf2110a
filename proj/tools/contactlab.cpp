#include "contactlab/cli.hpp"

int main(int argc, char** argv) { return contactlab::cli::main_entry(argc, argv); }
