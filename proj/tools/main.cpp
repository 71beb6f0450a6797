#include "tia/pipeline.hpp"

int main(int argc, char** argv) { return tia::run_cli(argc, argv); }
