// Repeat-text tool server on stdio.

#include "cyclebench/attack_tools.hpp"

#include <iostream>

int main() {
    auto server = cyclebench::make_repeat_text_server();
    cyclebench::serve_stdio(*server, std::cin, std::cout);
    return 0;
}
