// errors.h -- error taxonomy shared by the library and the CLI.
// Exit codes: 0 pass, 2 a verified inequality failed, 3 malformed input or
// broken invariant, 4 a randomized procedure exhausted its retry budget,
// 5 file I/O trouble.
#pragma once

#include <stdexcept>
#include <string>

namespace tubelab {

enum exit_code : int {
    exit_ok = 0,
    exit_check_failure = 2,
    exit_validation = 3,
    exit_statistical = 4,
    exit_io = 5,
};

struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct check_error : std::runtime_error {
    explicit check_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct statistical_error : std::runtime_error {
    explicit statistical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tubelab
