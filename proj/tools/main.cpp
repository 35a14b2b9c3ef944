#include "nextvisit/cli.hpp"

int main(int argc, char** argv) { return nextvisit::dispatch(argc, argv); }
