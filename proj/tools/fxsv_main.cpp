#include "fxsv/app.hpp"

int main(int argc, char** argv) { return fxsv::run_cli(argc, argv); }
