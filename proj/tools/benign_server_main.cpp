// Benign catalog server on stdio: serves a catalog file when given one,
// else the builtin catalog (argv[1] = size, default 100).

#include "cyclebench/benign_tools.hpp"

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    cyclebench::Catalog catalog;
    if (argc > 1) {
        const std::string arg = argv[1];
        if (arg.find_first_not_of("0123456789") == std::string::npos)
            catalog = cyclebench::builtin_catalog(std::stoul(arg));
        else
            catalog = cyclebench::load_catalog(arg);
    } else {
        catalog = cyclebench::builtin_catalog(100);
    }
    auto server = cyclebench::make_benign_server(catalog);
    cyclebench::serve_stdio(*server, std::cin, std::cout);
    return 0;
}
