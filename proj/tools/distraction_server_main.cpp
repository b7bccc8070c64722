// Distraction tool server on stdio.

#include "cyclebench/attack_tools.hpp"

#include <iostream>

int main() {
    auto server = cyclebench::make_distraction_server();
    cyclebench::serve_stdio(*server, std::cin, std::cout);
    return 0;
}
