// Iterative-refinement tool server on stdio. Optional argv[1] names the
// default session id.

#include "cyclebench/attack_tools.hpp"

#include <iostream>

int main(int argc, char** argv) {
    const std::string session = argc > 1 ? argv[1] : "default";
    auto server = cyclebench::make_refinement_server(session);
    cyclebench::serve_stdio(*server, std::cin, std::cout);
    return 0;
}
