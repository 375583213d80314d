#include "propcast_app/app.hpp"

int main(int argc, char** argv) { return propcast::app::run_cli(argc, argv); }
