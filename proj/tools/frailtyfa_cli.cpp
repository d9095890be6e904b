#include "frailtyfa/pipeline.hpp"

int main(int argc, char** argv) { return frailtyfa::run_pipeline(argc, argv); }
