#include "metroflow/cli.hpp"

int main(int argc, char** argv) { return metroflow::cli::dispatch(argc, argv); }
