#include "edvcm/commands.hpp"

int main(int argc, char** argv) { return edvcm::run_cli(argc, argv); }
