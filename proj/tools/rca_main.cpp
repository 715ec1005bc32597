#include "rca/service.hpp"

int main(int argc, char** argv) { return rca::cli_dispatch(argc, argv); }
